#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace glips {

enum class LikertLabel { StronglyDisagree, SomewhatDisagree, Neutral, SomewhatAgree, StronglyAgree };

std::string to_string(LikertLabel label);
LikertLabel parse_likert_label(const std::string& name);  // throws MalformedBinConfig

struct LikertSpan {
  double lo;
  double hi;
};
// 0.0-1.0, 1.1-2.0, 2.1-3.0, 3.1-4.0, 4.1-5.0
LikertSpan likert_span(LikertLabel label);

enum class Orientation { HigherIsBetter, LowerIsBetter };

std::string to_string(Orientation o);

struct Bin {
  LikertLabel label;
  // Published range; +-inf where the table leaves it open.
  double published_lo;
  double published_hi;
  // Gap-closed half-open range [metric_lo, metric_hi) used for classification.
  double metric_lo;
  double metric_hi;
  // Finite range interpolated across (published range, open ends saturated).
  double interp_lo;
  double interp_hi;
  double score_lo;
  double score_hi;
};

struct BinTable {
  std::string metric_name;
  Orientation orientation;
  std::array<Bin, 5> bins;  // ascending metric value
};

using BinTables = std::map<std::string, BinTable>;  // keyed by normalized name

// Lowercase, spaces to underscores: "Inception Score" -> "inception_score".
std::string normalize_metric_name(const std::string& name);

BinTables parse_bin_tables(const std::string& json_text);
BinTables load_bin_tables(const std::filesystem::path& path);
const BinTables& default_bin_tables();
// Throws UnknownMetric.
const BinTable& find_table(const BinTables& tables, const std::string& metric);

// Throws NonFiniteInput.
const Bin& classify(const BinTable& table, double x);
double ibs_score(const BinTable& table, double x);

// Variant with a unit score slope across the bin instead of
// the bin's 0.9 Likert span. Not clamped to the span.
double ibs_score_unit_slope(const BinTable& table, double x);

// Scores in the gaps between spans (e.g. 2.04) go to the upper span.
// Throws OutOfRange outside [0,5].
LikertLabel likert_label(double score);

}  // namespace glips
