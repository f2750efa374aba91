#include "glips/ibs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "glips/error.hpp"
#include "glips_default_bins.hpp"

namespace glips {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<LikertLabel, 5> kAscendingGood = {LikertLabel::StronglyDisagree, LikertLabel::SomewhatDisagree,
                                                       LikertLabel::Neutral, LikertLabel::SomewhatAgree,
                                                       LikertLabel::StronglyAgree};

double edge(const nlohmann::json& j, const char* key, double open) {
  if (!j.contains(key) || j[key].is_null()) return open;
  if (!j[key].is_number()) throw Error(ErrorCode::MalformedBinConfig, std::string("bin edge '") + key + "' is not a number");
  return j[key].get<double>();
}

BinTable build_table(const nlohmann::json& jt) {
  BinTable t;
  if (!jt.contains("metric") || !jt["metric"].is_string()) {
    throw Error(ErrorCode::MalformedBinConfig, "table without a metric name");
  }
  t.metric_name = jt["metric"].get<std::string>();
  const std::string orient = jt.value("orientation", std::string());
  if (orient == "higher_is_better") t.orientation = Orientation::HigherIsBetter;
  else if (orient == "lower_is_better") t.orientation = Orientation::LowerIsBetter;
  else throw Error(ErrorCode::MalformedBinConfig, t.metric_name + ": orientation must be higher_is_better or lower_is_better");

  if (!jt.contains("bins") || !jt["bins"].is_array()) throw Error(ErrorCode::MalformedBinConfig, t.metric_name + ": missing bins");
  const auto& jb = jt["bins"];
  if (jb.size() != 5) {
    throw Error(ErrorCode::MissingLikertSpan, t.metric_name + ": expected 5 bins, got " + std::to_string(jb.size()));
  }

  struct Raw {
    LikertLabel label;
    double lo, hi;
    std::optional<double> saturation;
  };
  std::vector<Raw> raw;
  for (const auto& b : jb) {
    if (!b.is_object() || !b.contains("label") || !b["label"].is_string()) {
      throw Error(ErrorCode::MalformedBinConfig, t.metric_name + ": bin without a label");
    }
    Raw r{parse_likert_label(b["label"].get<std::string>()), edge(b, "lo", -kInf), edge(b, "hi", kInf), std::nullopt};
    if (b.contains("saturation_width")) {
      r.saturation = b["saturation_width"].get<double>();
      if (!(*r.saturation > 0.0)) throw Error(ErrorCode::MalformedBinConfig, t.metric_name + ": saturation_width must be positive");
    }
    if (!(r.lo < r.hi)) throw Error(ErrorCode::MalformedBinConfig, t.metric_name + ": bin with lo >= hi");
    raw.push_back(r);
  }
  // An open edge is only allowed on the outermost side of the outermost bin.
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = 0; j < raw.size(); ++j) {
      if (i == j) continue;
      if ((std::isinf(raw[i].lo) && raw[j].hi <= raw[i].hi) || (std::isinf(raw[i].hi) && raw[j].lo >= raw[i].lo)) {
        throw Error(ErrorCode::MalformedBinConfig, t.metric_name + ": only the outermost edges may be open");
      }
    }
  }
  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.lo < b.lo; });

  // Every label exactly once, ordered by orientation.
  for (std::size_t i = 0; i < 5; ++i) {
    const LikertLabel want =
        t.orientation == Orientation::HigherIsBetter ? kAscendingGood[i] : kAscendingGood[4 - i];
    if (raw[i].label != want) {
      throw Error(ErrorCode::MissingLikertSpan, t.metric_name + ": labels are not the five Likert categories in " +
                                                    to_string(t.orientation) + " order");
    }
  }
  for (std::size_t i = 0; i + 1 < 5; ++i) {
    if (raw[i].hi > raw[i + 1].lo) throw Error(ErrorCode::OverlappingBins, t.metric_name + ": bins overlap");
    if (std::isinf(raw[i].hi) || std::isinf(raw[i + 1].lo)) {
      throw Error(ErrorCode::MalformedBinConfig, t.metric_name + ": only the outermost edges may be open");
    }
  }

  for (std::size_t i = 0; i < 5; ++i) {
    Bin& bin = t.bins[i];
    bin.label = raw[i].label;
    bin.published_lo = raw[i].lo;
    bin.published_hi = raw[i].hi;
    bin.metric_lo = i == 0 ? -kInf : raw[i].lo;
    bin.metric_hi = i == 4 ? kInf : raw[i + 1].lo;
    const LikertSpan span = likert_span(bin.label);
    bin.score_lo = span.lo;
    bin.score_hi = span.hi;
    bin.interp_lo = raw[i].lo;
    bin.interp_hi = raw[i].hi;
  }
  // Open published edges saturate after a finite width, by default that of
  // the neighbouring bin.
  for (std::size_t i = 0; i < 5; ++i) {
    Bin& bin = t.bins[i];
    if (std::isinf(bin.interp_lo)) {
      const double w = raw[i].saturation.value_or(raw[i + 1].hi - raw[i + 1].lo);
      bin.interp_lo = bin.interp_hi - w;
    }
    if (std::isinf(bin.interp_hi)) {
      const double w = raw[i].saturation.value_or(raw[i - 1].hi - raw[i - 1].lo);
      bin.interp_hi = bin.interp_lo + w;
    }
    if (!std::isfinite(bin.interp_lo) || !std::isfinite(bin.interp_hi) || !(bin.interp_lo < bin.interp_hi)) {
      throw Error(ErrorCode::MalformedBinConfig, t.metric_name + ": cannot derive a finite saturation width");
    }
  }
  return t;
}

double bin_fraction(const BinTable& table, const Bin& bin, double x) {
  double f = std::clamp((x - bin.interp_lo) / (bin.interp_hi - bin.interp_lo), 0.0, 1.0);
  if (table.orientation == Orientation::LowerIsBetter) f = 1.0 - f;
  return f;
}

void check_finite(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "metric value is not finite");
}

}  // namespace

std::string to_string(LikertLabel label) {
  switch (label) {
    case LikertLabel::StronglyDisagree: return "StronglyDisagree";
    case LikertLabel::SomewhatDisagree: return "SomewhatDisagree";
    case LikertLabel::Neutral: return "Neutral";
    case LikertLabel::SomewhatAgree: return "SomewhatAgree";
    case LikertLabel::StronglyAgree: return "StronglyAgree";
  }
  return "Neutral";
}

LikertLabel parse_likert_label(const std::string& name) {
  for (LikertLabel l : kAscendingGood) {
    if (to_string(l) == name) return l;
  }
  throw Error(ErrorCode::MalformedBinConfig, "unknown Likert label '" + name + "'");
}

LikertSpan likert_span(LikertLabel label) {
  switch (label) {
    case LikertLabel::StronglyDisagree: return {0.0, 1.0};
    case LikertLabel::SomewhatDisagree: return {1.1, 2.0};
    case LikertLabel::Neutral: return {2.1, 3.0};
    case LikertLabel::SomewhatAgree: return {3.1, 4.0};
    case LikertLabel::StronglyAgree: return {4.1, 5.0};
  }
  return {0.0, 0.0};
}

std::string to_string(Orientation o) {
  return o == Orientation::HigherIsBetter ? "higher_is_better" : "lower_is_better";
}

std::string normalize_metric_name(const std::string& name) {
  std::string out;
  for (char ch : name) out.push_back(ch == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

BinTables parse_bin_tables(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBinConfig, std::string("bin config is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("tables") || !j["tables"].is_array()) {
    throw Error(ErrorCode::MalformedBinConfig, "bin config needs a 'tables' array");
  }
  BinTables tables;
  try {
    for (const auto& jt : j["tables"]) {
      BinTable t = build_table(jt);
      const std::string key = normalize_metric_name(t.metric_name);
      if (!tables.emplace(key, std::move(t)).second) {
        throw Error(ErrorCode::MalformedBinConfig, "duplicate table for metric " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBinConfig, e.what());
  }
  return tables;
}

BinTables load_bin_tables(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedBinConfig, "cannot read bin config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bin_tables(ss.str());
}

const BinTables& default_bin_tables() {
  static const BinTables tables = parse_bin_tables(kDefaultBinTablesJson);
  return tables;
}

const BinTable& find_table(const BinTables& tables, const std::string& metric) {
  auto it = tables.find(normalize_metric_name(metric));
  if (it == tables.end()) throw Error(ErrorCode::UnknownMetric, "no bin table for metric '" + metric + "'");
  return it->second;
}

const Bin& classify(const BinTable& table, double x) {
  check_finite(x);
  for (const Bin& b : table.bins) {
    if (x >= b.metric_lo && x < b.metric_hi) return b;
  }
  return table.bins.back();  // unreachable for finite x
}

double ibs_score(const BinTable& table, double x) {
  const Bin& b = classify(table, x);
  return b.score_lo + (b.score_hi - b.score_lo) * bin_fraction(table, b, x);
}

double ibs_score_unit_slope(const BinTable& table, double x) {
  const Bin& b = classify(table, x);
  return b.score_lo + bin_fraction(table, b, x);
}

LikertLabel likert_label(double score) {
  if (!(score >= 0.0 && score <= 5.0)) throw Error(ErrorCode::OutOfRange, "Likert score must lie in [0,5]");
  if (score <= 1.0) return LikertLabel::StronglyDisagree;
  if (score <= 2.0) return LikertLabel::SomewhatDisagree;
  if (score <= 3.0) return LikertLabel::Neutral;
  if (score <= 4.0) return LikertLabel::SomewhatAgree;
  return LikertLabel::StronglyAgree;
}

}  // namespace glips
