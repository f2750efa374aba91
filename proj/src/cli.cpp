#include "glips/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "glips/backend.hpp"
#include "glips/baselines.hpp"
#include "glips/error.hpp"
#include "glips/glips.hpp"
#include "glips/harness.hpp"
#include "glips/ibs.hpp"
#include "glips/image_io.hpp"

namespace glips::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

json json_num(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }

// Flags shared by every command. Values set on the command line win over the
// config file, which wins over the environment and built-in defaults.
struct Common {
  std::string config_path;
  std::string model;
  std::string bins;
  std::string format = "text";
  double lambda = 0.62;
  std::size_t k = 16;
  std::string kernel = "rbf";
  double gamma = 0.0, sigma = 0.0, alpha = 0.0, c = 1.0;
  int degree = 3;
  std::string pairing = "attention_rank";

  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_model_flags(CLI::App* app, Common& c) {
  c.opts["config"] = app->add_option("--config", c.config_path, "JSON config file");
  c.opts["model"] = app->add_option("--model", c.model, "backend manifest path or fixture:<seed>");
}

void add_bins_flag(CLI::App* app, Common& c) {
  c.opts["bins"] = app->add_option("--bins", c.bins, "bin table config (default: shipped tables)");
}

void add_glips_flags(CLI::App* app, Common& c) {
  c.opts["lambda"] = app->add_option("--lambda", c.lambda, "GLIPS balancing parameter in [0,1]");
  c.opts["k"] = app->add_option("--k", c.k, "number of salient patches");
  c.opts["kernel"] = app->add_option("--kernel", c.kernel, "rbf | polynomial | exponential");
  c.opts["gamma"] = app->add_option("--gamma", c.gamma, "rbf gamma (default: median heuristic)");
  c.opts["sigma"] = app->add_option("--sigma", c.sigma, "exponential sigma (default: median heuristic)");
  c.opts["alpha"] = app->add_option("--alpha", c.alpha, "polynomial alpha (default: 1/feature_dim)");
  c.opts["c"] = app->add_option("--c", c.c, "polynomial offset");
  c.opts["degree"] = app->add_option("--degree", c.degree, "polynomial degree");
  c.opts["pairing"] = app->add_option("--pairing", c.pairing, "attention_rank | spatial_index");
}

void add_format_flag(CLI::App* app, Common& c, const std::string& help) {
  c.opts["format"] = app->add_option("--format", c.format, help);
}

json read_config(const Common& c) {
  if (c.config_path.empty()) return json::object();
  std::ifstream in(c.config_path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open config " + c.config_path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed config: ") + e.what());
  }
}

std::string resolve_model(const Common& c, const json& cfg) {
  if (c.given("model")) return c.model;
  if (cfg.contains("model")) return cfg["model"].get<std::string>();
  if (const char* env = std::getenv(kModelEnvVar); env && *env) return env;
  return "fixture:0";
}

BackendManifest resolve_manifest(const std::string& model) {
  if (model.rfind("fixture:", 0) == 0) {
    BackendManifest m;
    m.model_path = model;
    m.validate();
    return m;
  }
  return load_manifest(model);
}

BinTables resolve_bins(const Common& c, const json& cfg) {
  if (c.given("bins")) return load_bin_tables(c.bins);
  if (cfg.contains("bins")) return load_bin_tables(cfg["bins"].get<std::string>());
  return default_bin_tables();
}

std::string resolve_format(const Common& c, const json& cfg) {
  if (c.given("format")) return c.format;
  if (cfg.contains("output_format")) return cfg["output_format"].get<std::string>();
  return c.format;
}

GlipsConfig resolve_glips(const Common& c, const json& root) {
  GlipsConfig g;
  const json cfg = root.value("glips", json::object());
  try {
    g.lambda = c.given("lambda") ? c.lambda : cfg.value("lambda", g.lambda);
    g.k = c.given("k") ? c.k : cfg.value("k", g.k);
    g.pairing = parse_pairing(c.given("pairing") ? c.pairing : cfg.value("pairing", std::string("attention_rank")));
    const json kc = cfg.value("kernel", json::object());
    g.kernel.family = parse_kernel_family(c.given("kernel") ? c.kernel : kc.value("family", std::string("rbf")));
    auto param = [&](const char* name, double flag) -> std::optional<double> {
      if (c.given(name)) return flag;
      if (kc.contains(name) && kc[name].is_number()) return kc[name].get<double>();
      return std::nullopt;  // absent or "median-heuristic"
    };
    g.kernel.gamma = param("gamma", c.gamma);
    g.kernel.sigma = param("sigma", c.sigma);
    g.kernel.alpha = param("alpha", c.alpha);
    g.kernel.c = c.given("c") ? c.c : kc.value("c", 1.0);
    g.kernel.d = c.given("degree") ? c.degree : kc.value("d", 3);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed glips config: ") + e.what());
  }
  g.validate();
  return g;
}

json glips_json(const GlipsResult& r) {
  json k = {{"family", to_string(r.kernel.family)}};
  if (r.kernel.gamma) k["gamma"] = *r.kernel.gamma;
  if (r.kernel.sigma) k["sigma"] = *r.kernel.sigma;
  if (r.kernel.alpha) k["alpha"] = *r.kernel.alpha;
  if (r.kernel.family == KernelFamily::Polynomial) {
    k["c"] = r.kernel.c;
    k["d"] = r.kernel.d;
  }
  return {{"s1", r.s1}, {"s2", r.s2}, {"dice_mean", r.dice_mean}, {"kernel", k}};
}

int cmd_score(const std::string& original, const std::string& generated, const std::string& metric_name,
              const Common& c, std::ostream& out) {
  const json cfg = read_config(c);
  const Metric metric = parse_metric(metric_name);
  const BinTables bins = resolve_bins(c, cfg);
  const GlipsConfig gcfg = resolve_glips(c, cfg);
  const std::string format = resolve_format(c, cfg);
  const BackendManifest manifest = resolve_manifest(resolve_model(c, cfg));

  const PreprocessSpec spec = manifest.preprocess_spec();
  const ImageTensor a = resize(decode_image(original), spec);
  const ImageTensor b = resize(decode_image(generated), spec);

  double actual = 0.0;
  std::optional<GlipsResult> components;
  if (metric == Metric::Glips || metric == Metric::Fid || metric == Metric::Kid) {
    const auto backend = load_backend(manifest);
    if (metric == Metric::Glips) {
      components = glips_score(a, b, *backend, gcfg);
      actual = components->score;
    } else {
      const FeatureSet fa = backend->deep_features(a), fb = backend->deep_features(b);
      actual = metric == Metric::Fid ? fid(fit_gaussian(fa), fit_gaussian(fb)) : kid(fa, fb);
    }
  } else if (metric == Metric::Ssim) {
    actual = ssim(a, b);
  } else if (metric == Metric::MsSsim) {
    actual = ms_ssim(a, b);
  } else {
    actual = psnr(a, b);
  }

  std::optional<double> rescaled;
  std::optional<LikertLabel> label;
  if (std::isfinite(actual)) {
    const BinTable& table = find_table(bins, display_name(metric));
    rescaled = ibs_score(table, actual);
    label = classify(table, actual).label;
  }

  if (format == "json") {
    json j = {{"metric", display_name(metric)}, {"actual", json_num(actual)}};
    j["rescaled"] = rescaled ? json(*rescaled) : json(nullptr);
    j["label"] = label ? json(to_string(*label)) : json(nullptr);
    if (components) j["components"] = glips_json(*components);
    out << j.dump(2) << "\n";
  } else if (format == "text") {
    out << "metric: " << display_name(metric) << "\n";
    out << "actual: " << num(actual) << "\n";
    out << "rescaled: " << (rescaled ? num(*rescaled) : "n/a (infinite PSNR, identical images)") << "\n";
    out << "label: " << (label ? to_string(*label) : "n/a") << "\n";
    if (components) {
      out << "s1: " << num(components->s1) << "\n";
      out << "s2: " << num(components->s2) << "\n";
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "format must be text or json");
  }
  return Ok;
}

int cmd_rescale(const std::string& metric, double value, bool explain, const Common& c, std::ostream& out) {
  const json cfg = read_config(c);
  const BinTables bins = resolve_bins(c, cfg);
  const std::string format = resolve_format(c, cfg);
  const BinTable& table = find_table(bins, metric);
  const Bin& bin = classify(table, value);
  const double score = ibs_score(table, value);

  json ex;
  if (explain) {
    ex = {{"orientation", to_string(table.orientation)},
          {"bin_published", {json_num(bin.published_lo), json_num(bin.published_hi)}},
          {"bin_classification", {json_num(bin.metric_lo), json_num(bin.metric_hi)}},
          {"interpolation_range", {bin.interp_lo, bin.interp_hi}},
          {"score_span", {bin.score_lo, bin.score_hi}},
          {"unit_slope_score", ibs_score_unit_slope(table, value)}};
  }
  if (format == "json") {
    json j = {{"metric", table.metric_name}, {"value", value}, {"label", to_string(bin.label)}, {"score", score}};
    if (explain) j["explain"] = ex;
    out << j.dump(2) << "\n";
    return Ok;
  }
  out << "metric: " << table.metric_name << "\n";
  out << "label: " << to_string(bin.label) << "\n";
  out << "score: " << num(score) << "\n";
  if (explain) {
    out << "orientation: " << to_string(table.orientation) << "\n";
    out << "classification bin: [" << num(bin.metric_lo) << ", " << num(bin.metric_hi) << ")\n";
    out << "interpolated across: [" << num(bin.interp_lo) << ", " << num(bin.interp_hi) << "] onto ["
        << num(bin.score_lo) << ", " << num(bin.score_hi) << "]\n";
    out << "unit-slope variant (score_lo + fraction): "
        << num(ibs_score_unit_slope(table, value)) << "\n";
  }
  return Ok;
}

EvaluationOptions evaluation_options(const Common& c, const json& cfg, const std::string& metrics) {
  EvaluationOptions opt;
  opt.glips = resolve_glips(c, cfg);
  if (!metrics.empty()) opt.metrics = parse_metric_list(metrics);
  return opt;
}

int cmd_evaluate(const std::string& manifest_path, const std::string& human_path, const std::string& metrics,
                 const std::string& out_dir, const Common& c, std::ostream& out) {
  const json cfg = read_config(c);
  const BinTables bins = resolve_bins(c, cfg);
  EvaluationOptions opt = evaluation_options(c, cfg, metrics);
  opt.bins = &bins;
  std::string format = resolve_format(c, cfg);
  if (format == "text") format = "csv";
  const ReportFormat rf = parse_report_format(format);

  const DatasetManifest dataset = load_dataset_manifest(manifest_path);
  const HumanScores humans = load_human_scores(human_path);
  const auto backend = load_backend(resolve_manifest(resolve_model(c, cfg)));
  const EvaluationReport report = evaluate(dataset, humans, *backend, opt);
  const auto files = emit_report(report, rf, out_dir);

  for (Metric m : opt.metrics) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : report.rows) {
      if (r.metric == display_name(m) && r.mape) {
        sum += *r.mape;
        ++n;
      }
    }
    out << display_name(m) << " mean MAPE: " << (n ? num(sum / n) : std::string("n/a")) << "\n";
  }
  for (const auto& f : files) out << "wrote " << f.string() << "\n";
  return Ok;
}

std::vector<double> parse_lambdas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad lambda value '" + item + "'");
    }
  }
  return out;
}

int cmd_sweep(const std::string& manifest_path, const std::string& human_path, const std::string& lambdas,
              const Common& c, std::ostream& out) {
  const json cfg = read_config(c);
  const BinTables bins = resolve_bins(c, cfg);
  EvaluationOptions opt = evaluation_options(c, cfg, "glips");
  opt.bins = &bins;
  const std::string format = resolve_format(c, cfg);
  const std::vector<double> grid = parse_lambdas(lambdas);
  if (grid.empty()) throw Error(ErrorCode::EmptyLambdaList, "no lambda values given");

  const DatasetManifest dataset = load_dataset_manifest(manifest_path);
  const HumanScores humans = load_human_scores(human_path);
  const auto backend = load_backend(resolve_manifest(resolve_model(c, cfg)));
  const SweepResult res = lambda_sweep(dataset, humans, *backend, grid, opt);

  if (format == "json") {
    json rows = json::array();
    for (const auto& r : res.rows) rows.push_back({{"lambda", r.lambda}, {"mean_mad", r.mean_mad}, {"mean_mape", r.mean_mape}});
    out << json{{"rows", rows}, {"best_lambda", res.best_lambda}}.dump(2) << "\n";
    return Ok;
  }
  out << "lambda,mean_mad,mean_mape\n";
  for (const auto& r : res.rows) out << num(r.lambda) << "," << num(r.mean_mad) << "," << num(r.mean_mape) << "\n";
  out << "best lambda: " << num(res.best_lambda) << "\n";
  return Ok;
}

int cmd_inspect(const std::string& image, std::size_t top_k, const std::string& heatmap, const Common& c,
                std::ostream& out) {
  const json cfg = read_config(c);
  if (top_k == 0) throw Error(ErrorCode::InvalidArgument, "--top-k must be >= 1");
  const auto backend = load_backend(resolve_manifest(resolve_model(c, cfg)));
  const ImageTensor img = backend->prepare(decode_image(image));
  const AttentionMap att = backend->attention_map(img);
  const SalientSelection sel = select_salient(att, top_k);
  const PatchGrid& grid = backend->patch_grid();

  if (!heatmap.empty()) {
    double peak = 0.0;
    for (double s : att.scores) peak = std::max(peak, s);
    std::vector<double> cells(att.scores.size());
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = peak > 0.0 ? att.scores[i] / peak : 0.0;
    encode_gray_png(cells, grid.patches_per_side, grid.patches_per_side, heatmap);
  }
  json j = {{"patch_size", grid.patch_size},
            {"patches_per_side", grid.patches_per_side},
            {"source", "cls_to_patch"},
            {"scores", att.scores},
            {"top_k", sel.indices}};
  if (!heatmap.empty()) j["heatmap"] = heatmap;
  out << j.dump(2) << "\n";
  return Ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Global-Local Image Perceptual Score toolkit", "glips"};
  app.require_subcommand(1);

  Common score_c, rescale_c, eval_c, sweep_c, inspect_c;

  std::string original, generated, metric = "glips";
  auto* score = app.add_subcommand("score", "score one original/generated pair");
  score->add_option("original", original, "original image")->required();
  score->add_option("generated", generated, "generated image")->required();
  score->add_option("--metric", metric, "glips | ssim | ms-ssim | psnr | fid | kid");
  add_model_flags(score, score_c);
  add_bins_flag(score, score_c);
  add_glips_flags(score, score_c);
  add_format_flag(score, score_c, "text | json");

  std::string rescale_metric;
  double value = 0.0;
  bool explain = false;
  auto* rescale = app.add_subcommand("rescale", "map a raw metric value onto the Likert range");
  rescale->add_option("--metric", rescale_metric, "metric name")->required();
  rescale->add_option("--value", value, "raw metric value")->required();
  rescale->add_flag("--explain", explain, "show the bin and interpolation used");
  rescale_c.opts["config"] = rescale->add_option("--config", rescale_c.config_path, "JSON config file");
  add_bins_flag(rescale, rescale_c);
  add_format_flag(rescale, rescale_c, "text | json");

  std::string manifest_path, human_path, metrics, out_dir = "glips_report";
  auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a dataset against human scores");
  evaluate_cmd->add_option("--manifest", manifest_path, "dataset manifest JSON")->required();
  evaluate_cmd->add_option("--human", human_path, "human score CSV")->required();
  evaluate_cmd->add_option("--metrics", metrics, "comma-separated metrics (default: all)");
  evaluate_cmd->add_option("--out", out_dir, "output directory");
  add_model_flags(evaluate_cmd, eval_c);
  add_bins_flag(evaluate_cmd, eval_c);
  add_glips_flags(evaluate_cmd, eval_c);
  add_format_flag(evaluate_cmd, eval_c, "csv | json | markdown");

  std::string sweep_manifest, sweep_human, lambdas = "0,0.1,0.2,0.3,0.4,0.5,0.54,0.6,0.62,0.7,0.8,0.9,1";
  auto* sweep = app.add_subcommand("sweep", "mean GLIPS MAPE over a lambda grid");
  sweep->add_option("--manifest", sweep_manifest, "dataset manifest JSON")->required();
  sweep->add_option("--human", sweep_human, "human score CSV")->required();
  sweep->add_option("--lambdas", lambdas, "comma-separated lambda values");
  add_model_flags(sweep, sweep_c);
  add_bins_flag(sweep, sweep_c);
  add_glips_flags(sweep, sweep_c);
  add_format_flag(sweep, sweep_c, "text | json");

  std::string image, heatmap;
  long long top_k = 16;
  auto* inspect = app.add_subcommand("inspect-attention", "dump per-patch attention and the top-k selection");
  inspect->add_option("--image", image, "image file")->required();
  inspect->add_option("--top-k", top_k, "patches to select");
  inspect->add_option("--heatmap", heatmap, "write a grayscale heatmap PNG");
  add_model_flags(inspect, inspect_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return InputError;
  }

  try {
    if (*score) return cmd_score(original, generated, metric, score_c, out);
    if (*rescale) return cmd_rescale(rescale_metric, value, explain, rescale_c, out);
    if (*evaluate_cmd) return cmd_evaluate(manifest_path, human_path, metrics, out_dir, eval_c, out);
    if (*sweep) return cmd_sweep(sweep_manifest, sweep_human, lambdas, sweep_c, out);
    if (*inspect) {
      if (top_k < 1) throw Error(ErrorCode::InvalidArgument, "--top-k must be >= 1");
      return cmd_inspect(image, static_cast<std::size_t>(top_k), heatmap, inspect_c, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_backend_error(e.code()) ? BackendError : InputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return Internal;
  }
  return Internal;
}

}  // namespace glips::cli
