#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glips/backend.hpp"
#include "glips/baselines.hpp"
#include "glips/glips.hpp"
#include "glips/ibs.hpp"

namespace glips {

struct DatasetEntry {
  std::string caption_id;
  std::filesystem::path original_path;
  std::map<std::string, std::filesystem::path> generated;  // model -> image
};

struct DatasetManifest {
  std::vector<DatasetEntry> entries;

  std::vector<std::string> models() const;  // sorted, unique
};

// Relative image paths resolve against base_dir. Throws MalformedManifest.
DatasetManifest parse_dataset_manifest(const std::string& json_text, const std::filesystem::path& base_dir = {});
DatasetManifest load_dataset_manifest(const std::filesystem::path& path);
std::string dataset_manifest_to_json(const DatasetManifest& manifest);

struct HumanScoreRow {
  std::string model;
  int question_id = 0;
  double mean_score = 0.0;
};

struct HumanScores {
  std::vector<HumanScoreRow> rows;

  std::map<std::string, double> averages() const;
  // Throws MissingHumanScore.
  double average(const std::string& model) const;
};

// CSV with header model,question_id,mean_score. Throws MalformedCsv,
// ScoreOutOfRange.
HumanScores parse_human_scores(const std::string& csv_text);
HumanScores load_human_scores(const std::filesystem::path& path);

enum class Metric { Glips, Ssim, MsSsim, Psnr, Fid, Kid };

std::string display_name(Metric m);  // also the bin table name
Metric parse_metric(const std::string& name);  // throws UnknownMetric
std::vector<Metric> parse_metric_list(const std::string& comma_separated);
const std::vector<Metric>& all_metrics();

struct ReportRow {
  std::string model;
  std::string metric;
  double actual = 0.0;
  std::optional<double> rescaled;  // absent when the value cannot be binned (infinite PSNR)
  double human = 0.0;
  std::optional<LikertLabel> likert_metric;
  LikertLabel likert_human = LikertLabel::Neutral;
  std::optional<double> mad;
  std::optional<double> mape;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvaluationReport {
  std::vector<ReportRow> rows;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

// Builds one row from an actual value: IBS rescale, labels, MAD and MAPE.
ReportRow make_row(const std::string& model, const std::string& metric, double actual, double human,
                   const BinTables& bins);

struct EvaluationOptions {
  std::vector<Metric> metrics = all_metrics();
  GlipsConfig glips;
  SsimParams ssim;
  const BinTables* bins = nullptr;  // null: shipped tables
  unsigned threads = 0;             // 0: hardware concurrency
};

// Pairwise metrics average over entries; FID and KID pool each model's
// feature tokens. Rows are ordered by model name, then metric order.
EvaluationReport evaluate(const DatasetManifest& manifest, const HumanScores& humans, const Backend& backend,
                          const EvaluationOptions& options = {});

enum class ReportFormat { Csv, Json, Markdown };
ReportFormat parse_report_format(const std::string& name);  // throws InvalidArgument

std::string report_to_csv(const EvaluationReport& report);
std::string report_to_json(const EvaluationReport& report);
std::string report_to_markdown(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& json_text);
// Grouped-bar data: model -> metric -> {rescaled, human}.
std::string plot_data_json(const EvaluationReport& report);
std::string plot_svg(const EvaluationReport& report);

// Writes report.<ext>, plot_data.json and plot.svg. Throws IoError.
std::vector<std::filesystem::path> emit_report(const EvaluationReport& report, ReportFormat format,
                                               const std::filesystem::path& out_dir);

struct SweepRow {
  double lambda = 0.0;
  double mean_mad = 0.0;
  double mean_mape = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double best_lambda = 0.0;  // lowest mean MAPE, ties to the larger lambda
};

// Throws EmptyLambdaList, InvalidArgument (lambda outside [0,1]).
SweepResult lambda_sweep(const DatasetManifest& manifest, const HumanScores& humans, const Backend& backend,
                         const std::vector<double>& lambdas, const EvaluationOptions& options = {});

}  // namespace glips
