#include "glips/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "glips/error.hpp"
#include "glips/image_io.hpp"

namespace glips {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::string> DatasetManifest::models() const {
  std::set<std::string> names;
  for (const auto& e : entries)
    for (const auto& [model, path] : e.generated) names.insert(model);
  return {names.begin(), names.end()};
}

DatasetManifest parse_dataset_manifest(const std::string& json_text, const fs::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? (base_dir / path).lexically_normal() : path;
  };
  DatasetManifest m;
  try {
    const json j = json::parse(json_text);
    const json& entries = j.is_array() ? j : j.at("entries");
    if (!entries.is_array()) throw Error(ErrorCode::MalformedManifest, "'entries' must be an array");
    for (const auto& je : entries) {
      DatasetEntry e;
      e.caption_id = je.at("caption_id").is_string() ? je["caption_id"].get<std::string>() : je["caption_id"].dump();
      e.original_path = resolve(je.at("original_path").get<std::string>());
      for (const auto& [model, path] : je.at("generated").items()) e.generated[model] = resolve(path.get<std::string>());
      if (e.generated.empty()) {
        throw Error(ErrorCode::MalformedManifest, "entry '" + e.caption_id + "' has no generated images");
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedManifest, std::string("malformed dataset manifest: ") + e.what());
  }
  return m;
}

DatasetManifest load_dataset_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open dataset manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset_manifest(ss.str(), path.parent_path());
}

std::string dataset_manifest_to_json(const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json gen = json::object();
    for (const auto& [model, path] : e.generated) gen[model] = path.generic_string();
    entries.push_back({{"caption_id", e.caption_id}, {"original_path", e.original_path.generic_string()}, {"generated", gen}});
  }
  return json{{"entries", entries}}.dump(2);
}

std::map<std::string, double> HumanScores::averages() const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    acc[r.model].first += r.mean_score;
    acc[r.model].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [model, sc] : acc) out[model] = sc.first / sc.second;
  return out;
}

double HumanScores::average(const std::string& model) const {
  const auto avg = averages();
  auto it = avg.find(model);
  if (it == avg.end()) throw Error(ErrorCode::MissingHumanScore, "no human scores for model '" + model + "'");
  return it->second;
}

namespace {

std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

// Comma split with double-quoted fields ("" escapes a quote).
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedCsv, "unterminated quote on line " + std::to_string(line_no));
  fields.push_back(trim(cur));
  return fields;
}

template <class T>
T parse_number(const std::string& s, std::size_t line_no) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedCsv, "bad number '" + s + "' on line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

HumanScores parse_human_scores(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  HumanScores out;
  std::set<std::pair<std::string, int>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line, line_no);
    if (!header_seen) {
      if (f != std::vector<std::string>{"model", "question_id", "mean_score"}) {
        throw Error(ErrorCode::MalformedCsv, "header must be model,question_id,mean_score");
      }
      header_seen = true;
      continue;
    }
    if (f.size() != 3 || f[0].empty()) throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line_no) + " needs 3 fields");
    HumanScoreRow row{f[0], parse_number<int>(f[1], line_no), parse_number<double>(f[2], line_no)};
    if (row.question_id < 1 || row.question_id > 5) {
      throw Error(ErrorCode::MalformedCsv, "question_id must be 1-5 on line " + std::to_string(line_no));
    }
    if (!(row.mean_score >= 1.0 && row.mean_score <= 5.0)) {
      throw Error(ErrorCode::ScoreOutOfRange, "mean_score must lie in [1,5] on line " + std::to_string(line_no));
    }
    if (!seen.emplace(row.model, row.question_id).second) {
      throw Error(ErrorCode::MalformedCsv, "duplicate question " + f[1] + " for model " + row.model);
    }
    out.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(ErrorCode::MalformedCsv, "human score file is empty");
  if (out.rows.empty()) throw Error(ErrorCode::MalformedCsv, "human score file has no rows");
  return out;
}

HumanScores load_human_scores(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open human scores " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_human_scores(ss.str());
}

std::string display_name(Metric m) {
  switch (m) {
    case Metric::Glips: return "GLIPS";
    case Metric::Ssim: return "SSIM";
    case Metric::MsSsim: return "MS-SSIM";
    case Metric::Psnr: return "PSNR";
    case Metric::Fid: return "FID";
    case Metric::Kid: return "KID";
  }
  return "GLIPS";
}

const std::vector<Metric>& all_metrics() {
  static const std::vector<Metric> v{Metric::Glips, Metric::Ssim, Metric::MsSsim, Metric::Psnr, Metric::Fid, Metric::Kid};
  return v;
}

Metric parse_metric(const std::string& name) {
  const std::string key = normalize_metric_name(trim(name));
  for (Metric m : all_metrics()) {
    if (normalize_metric_name(display_name(m)) == key) return m;
  }
  if (key == "msssim" || key == "ms_ssim") return Metric::MsSsim;
  throw Error(ErrorCode::UnknownMetric, "unknown metric '" + name + "'");
}

std::vector<Metric> parse_metric_list(const std::string& comma_separated) {
  std::vector<Metric> out;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    const Metric m = parse_metric(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

ReportRow make_row(const std::string& model, const std::string& metric, double actual, double human,
                   const BinTables& bins) {
  ReportRow row;
  row.model = model;
  row.metric = metric;
  row.actual = actual;
  row.human = human;
  row.likert_human = likert_label(human);
  if (std::isfinite(actual)) {
    const BinTable& table = find_table(bins, metric);
    const double r = ibs_score(table, actual);
    row.rescaled = r;
    row.likert_metric = classify(table, actual).label;
    const double h[1] = {human}, s[1] = {r};
    row.mad = glips::mad(h, s);
    row.mape = glips::mape(h, s);
  }
  return row;
}

namespace {

struct PairResult {
  GlipsResult glips;
  double ssim = 0.0;
  double ms_ssim = 0.0;
  double psnr = 0.0;
  FeatureSet features;  // generated image tokens, for pooled metrics
};

struct EntryResult {
  FeatureSet original_features;
  std::map<std::string, PairResult> pairs;
};

bool needs_backend(const std::vector<Metric>& metrics) {
  return std::any_of(metrics.begin(), metrics.end(),
                     [](Metric m) { return m == Metric::Glips || m == Metric::Fid || m == Metric::Kid; });
}

bool wants(const std::vector<Metric>& metrics, Metric m) {
  return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
}

EntryResult score_entry(const DatasetEntry& entry, const Backend& backend, const EvaluationOptions& opt) {
  EntryResult res;
  const ImageTensor orig = backend.prepare(decode_image(entry.original_path));
  const bool use_backend = needs_backend(opt.metrics);
  BackendOutput out_o;
  if (use_backend) {
    out_o = backend.analyze(orig);
    res.original_features = out_o.features;
  }
  for (const auto& [model, path] : entry.generated) {
    const ImageTensor gen = backend.prepare(decode_image(path));
    PairResult pr;
    if (use_backend) {
      BackendOutput out_g = backend.analyze(gen);
      if (wants(opt.metrics, Metric::Glips)) {
        pr.glips = glips_score(orig, gen, out_o, out_g, backend.patch_grid(), opt.glips);
      }
      pr.features = std::move(out_g.features);
    }
    if (wants(opt.metrics, Metric::Ssim)) pr.ssim = ssim(orig, gen, opt.ssim);
    if (wants(opt.metrics, Metric::MsSsim)) pr.ms_ssim = ms_ssim(orig, gen, opt.ssim);
    if (wants(opt.metrics, Metric::Psnr)) pr.psnr = psnr(orig, gen);
    res.pairs.emplace(model, std::move(pr));
  }
  return res;
}

// Scores all entries, in parallel; results keep entry order and the first
// failure (in entry order) is rethrown.
std::vector<EntryResult> score_all(const DatasetManifest& manifest, const Backend& backend,
                                   const EvaluationOptions& opt) {
  const std::size_t n = manifest.entries.size();
  std::vector<EntryResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = score_entry(manifest.entries[i], backend, opt);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

void check_humans(const DatasetManifest& manifest, const HumanScores& humans) {
  const auto avg = humans.averages();
  for (const auto& model : manifest.models()) {
    if (!avg.count(model)) throw Error(ErrorCode::MissingHumanScore, "no human scores for model '" + model + "'");
  }
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

EvaluationReport evaluate(const DatasetManifest& manifest, const HumanScores& humans, const Backend& backend,
                          const EvaluationOptions& options) {
  EvaluationReport report;
  if (options.metrics.empty()) return report;
  options.glips.validate();
  check_humans(manifest, humans);
  const BinTables& bins = options.bins ? *options.bins : default_bin_tables();
  for (Metric m : options.metrics) find_table(bins, display_name(m));

  const auto results = score_all(manifest, backend, options);
  const auto averages = humans.averages();
  for (const auto& model : manifest.models()) {
    std::vector<const PairResult*> pairs;
    FeatureSet pooled_o, pooled_g;
    for (std::size_t i = 0; i < results.size(); ++i) {
      auto it = results[i].pairs.find(model);
      if (it == results[i].pairs.end()) continue;
      pairs.push_back(&it->second);
      pooled_o.append(results[i].original_features);
      pooled_g.append(it->second.features);
    }
    const double human = averages.at(model);
    for (Metric m : options.metrics) {
      double actual = 0.0;
      std::vector<double> values;
      switch (m) {
        case Metric::Glips:
          for (const auto* p : pairs) values.push_back(p->glips.score);
          actual = mean(values);
          break;
        case Metric::Ssim:
          for (const auto* p : pairs) values.push_back(p->ssim);
          actual = mean(values);
          break;
        case Metric::MsSsim:
          for (const auto* p : pairs) values.push_back(p->ms_ssim);
          actual = mean(values);
          break;
        case Metric::Psnr:
          for (const auto* p : pairs) values.push_back(p->psnr);
          actual = mean(values);  // any identical pair makes the mean infinite
          break;
        case Metric::Fid:
          actual = fid(fit_gaussian(pooled_o), fit_gaussian(pooled_g));
          break;
        case Metric::Kid:
          actual = kid(pooled_o, pooled_g);
          break;
      }
      report.rows.push_back(make_row(model, display_name(m), actual, human, bins));
    }
  }
  return report;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + name + "'");
}

namespace {

std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

json number_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::MalformedManifest, "bad number '" + s + "' in report");
  }
  return j.get<double>();
}

}  // namespace

std::string report_to_csv(const EvaluationReport& report) {
  std::string out = "model,metric,actual,rescaled,human,likert_metric,likert_human,mad,mape\n";
  for (const auto& r : report.rows) {
    out += csv_field(r.model) + "," + csv_field(r.metric) + "," + fmt_num(r.actual) + "," + fmt_opt(r.rescaled) + "," +
           fmt_num(r.human) + "," + (r.likert_metric ? to_string(*r.likert_metric) : "") + "," +
           to_string(r.likert_human) + "," + fmt_opt(r.mad) + "," + fmt_opt(r.mape) + "\n";
  }
  return out;
}

std::string report_to_json(const EvaluationReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json j = {{"model", r.model}, {"metric", r.metric}, {"actual", number_or_string(r.actual)},
              {"human", r.human}, {"likert_human", to_string(r.likert_human)}};
    j["rescaled"] = r.rescaled ? json(*r.rescaled) : json(nullptr);
    j["likert_metric"] = r.likert_metric ? json(to_string(*r.likert_metric)) : json(nullptr);
    j["mad"] = r.mad ? json(*r.mad) : json(nullptr);
    j["mape"] = r.mape ? json(*r.mape) : json(nullptr);
    rows.push_back(std::move(j));
  }
  return rows.dump(2);
}

EvaluationReport report_from_json(const std::string& json_text) {
  EvaluationReport report;
  try {
    const json rows = json::parse(json_text);
    for (const auto& j : rows) {
      ReportRow r;
      r.model = j.at("model").get<std::string>();
      r.metric = j.at("metric").get<std::string>();
      r.actual = read_number(j.at("actual"));
      r.human = j.at("human").get<double>();
      r.likert_human = parse_likert_label(j.at("likert_human").get<std::string>());
      if (!j.at("rescaled").is_null()) r.rescaled = j["rescaled"].get<double>();
      if (!j.at("likert_metric").is_null()) r.likert_metric = parse_likert_label(j["likert_metric"].get<std::string>());
      if (!j.at("mad").is_null()) r.mad = j["mad"].get<double>();
      if (!j.at("mape").is_null()) r.mape = j["mape"].get<double>();
      report.rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedManifest, std::string("malformed report JSON: ") + e.what());
  }
  return report;
}

std::string report_to_markdown(const EvaluationReport& report) {
  std::string out =
      "| Model | Metric | Actual | Rescaled | Human | Likert (metric) | Likert (human) | MAD | MAPE |\n"
      "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : report.rows) {
    out += "| " + r.model + " | " + r.metric + " | " + fmt_num(r.actual) + " | " +
           (r.rescaled ? fmt_num(*r.rescaled) : "n/a") + " | " + fmt_num(r.human) + " | " +
           (r.likert_metric ? to_string(*r.likert_metric) : "n/a") + " | " + to_string(r.likert_human) + " | " +
           (r.mad ? fmt_num(*r.mad) : "n/a") + " | " + (r.mape ? fmt_num(*r.mape) : "n/a") + " |\n";
  }
  return out;
}

std::string plot_data_json(const EvaluationReport& report) {
  json models = json::array();
  std::vector<std::string> order;
  for (const auto& r : report.rows)
    if (std::find(order.begin(), order.end(), r.model) == order.end()) order.push_back(r.model);
  for (const auto& model : order) {
    json bars = json::array();
    double human = 0.0;
    for (const auto& r : report.rows) {
      if (r.model != model) continue;
      human = r.human;
      bars.push_back({{"metric", r.metric}, {"rescaled", r.rescaled ? json(*r.rescaled) : json(nullptr)}});
    }
    models.push_back({{"model", model}, {"human", human}, {"bars", bars}});
  }
  return json{{"y_range", {0.0, 5.0}}, {"groups", models}}.dump(2);
}

std::string plot_svg(const EvaluationReport& report) {
  std::vector<std::string> models, metrics;
  for (const auto& r : report.rows) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
  }
  const int bar = 14, gap = 24, height = 240, top = 20, left = 40;
  const int per_group = static_cast<int>(metrics.size() + 1) * bar;
  const int width = left + static_cast<int>(models.size()) * (per_group + gap) + 160;
  static const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height + 60 << "\">\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + height << "\" x2=\"" << width - 150 << "\" y2=\"" << top + height
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const int y = top + height - t * height / 5;
    s << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" font-size=\"10\" text-anchor=\"end\">" << t << "</text>\n";
  }
  auto rect = [&](int x, double v, const char* colour) {
    const int h = static_cast<int>(std::lround(std::clamp(v, 0.0, 5.0) / 5.0 * height));
    s << "<rect x=\"" << x << "\" y=\"" << top + height - h << "\" width=\"" << bar - 2 << "\" height=\"" << h
      << "\" fill=\"" << colour << "\"/>\n";
  };
  for (std::size_t g = 0; g < models.size(); ++g) {
    const int x0 = left + 10 + static_cast<int>(g) * (per_group + gap);
    double human = 0.0;
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      for (const auto& r : report.rows) {
        if (r.model != models[g] || r.metric != metrics[m]) continue;
        human = r.human;
        if (r.rescaled) rect(x0 + static_cast<int>(m) * bar, *r.rescaled, palette[m % 7]);
      }
    }
    rect(x0 + static_cast<int>(metrics.size()) * bar, human, "#333333");
    s << "<text x=\"" << x0 + per_group / 2 << "\" y=\"" << top + height + 16
      << "\" font-size=\"10\" text-anchor=\"middle\">" << models[g] << "</text>\n";
  }
  const int lx = width - 140;
  for (std::size_t m = 0; m <= metrics.size(); ++m) {
    const bool is_human = m == metrics.size();
    s << "<rect x=\"" << lx << "\" y=\"" << top + 14 * m << "\" width=\"10\" height=\"10\" fill=\""
      << (is_human ? "#333333" : palette[m % 7]) << "\"/>\n";
    s << "<text x=\"" << lx + 14 << "\" y=\"" << top + 14 * m + 9 << "\" font-size=\"10\">"
      << (is_human ? std::string("Human") : metrics[m]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace

std::vector<fs::path> emit_report(const EvaluationReport& report, ReportFormat format, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw Error(ErrorCode::IoError, "cannot create output directory " + out_dir.string());
  std::vector<fs::path> written;
  switch (format) {
    case ReportFormat::Csv: written.push_back(out_dir / "report.csv"); write_file(written.back(), report_to_csv(report)); break;
    case ReportFormat::Json: written.push_back(out_dir / "report.json"); write_file(written.back(), report_to_json(report)); break;
    case ReportFormat::Markdown: written.push_back(out_dir / "report.md"); write_file(written.back(), report_to_markdown(report)); break;
  }
  written.push_back(out_dir / "plot_data.json");
  write_file(written.back(), plot_data_json(report));
  written.push_back(out_dir / "plot.svg");
  write_file(written.back(), plot_svg(report));
  return written;
}

SweepResult lambda_sweep(const DatasetManifest& manifest, const HumanScores& humans, const Backend& backend,
                         const std::vector<double>& lambdas, const EvaluationOptions& options) {
  if (lambdas.empty()) throw Error(ErrorCode::EmptyLambdaList, "no lambda values given");
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda values must lie in [0,1]");
  }
  options.glips.validate();
  check_humans(manifest, humans);
  const BinTables& bins = options.bins ? *options.bins : default_bin_tables();
  EvaluationOptions opt = options;
  opt.metrics = {Metric::Glips};
  // S1 and S2 do not depend on lambda, so pairs are scored once.
  const auto results = score_all(manifest, backend, opt);
  const auto averages = humans.averages();
  const auto models = manifest.models();

  SweepResult out;
  for (double lambda : lambdas) {
    std::vector<double> mads, mapes;
    for (const auto& model : models) {
      std::vector<double> scores;
      for (const auto& r : results) {
        auto it = r.pairs.find(model);
        if (it != r.pairs.end()) scores.push_back(combine_score(it->second.glips.s1, it->second.glips.s2, lambda));
      }
      const ReportRow row = make_row(model, display_name(Metric::Glips), mean(scores), averages.at(model), bins);
      mads.push_back(*row.mad);
      mapes.push_back(*row.mape);
    }
    out.rows.push_back({lambda, mean(mads), mean(mapes)});
  }
  const SweepRow* best = &out.rows.front();
  for (const auto& r : out.rows) {
    if (r.mean_mape < best->mean_mape || (r.mean_mape == best->mean_mape && r.lambda > best->lambda)) best = &r;
  }
  out.best_lambda = best->lambda;
  return out;
}

}  // namespace glips
