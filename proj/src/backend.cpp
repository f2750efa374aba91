#include "glips/backend.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "glips/error.hpp"
#include "glips/onnx_backend.hpp"

namespace glips {

using nlohmann::json;

namespace {

constexpr std::string_view kFixturePrefix = "fixture:";

std::uint64_t parse_fixture_seed(const std::string& model_path) {
  const std::string_view digits = std::string_view(model_path).substr(kFixturePrefix.size());
  std::uint64_t seed = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
  if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw Error(ErrorCode::ModelLoadError, "fixture model path must be fixture:<unsigned seed>, got " + model_path);
  }
  return seed;
}

}  // namespace

void BackendManifest::validate() const {
  if (patch_size == 0 || input_size == 0 || input_size % patch_size != 0) {
    throw Error(ErrorCode::ShapeMismatch, "input_size must be a nonzero multiple of patch_size");
  }
  if (feature_dim == 0) throw Error(ErrorCode::ShapeMismatch, "feature_dim must be positive");
  for (double s : channel_std) {
    if (!(s > 0.0)) throw Error(ErrorCode::ModelLoadError, "channel_std must be strictly positive");
  }
}

bool BackendManifest::is_fixture() const { return model_path.rfind(kFixturePrefix, 0) == 0; }

PatchGrid BackendManifest::patch_grid() const { return make_patch_grid(input_size, patch_size); }

PreprocessSpec BackendManifest::preprocess_spec() const {
  PreprocessSpec spec;
  spec.target_size = input_size;
  spec.channel_mean = channel_mean;
  spec.channel_std = channel_std;
  return spec;
}

BackendManifest fixture_manifest(std::uint64_t seed) {
  BackendManifest m;
  m.model_path = std::string(kFixturePrefix) + std::to_string(seed);
  return m;
}

BackendManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  BackendManifest m;
  try {
    const json j = json::parse(text);
    m.model_path = j.at("model_path").get<std::string>();
    m.input_name = j.value("input_name", m.input_name);
    m.attention_output_name = j.value("attention_output_name", m.attention_output_name);
    m.feature_output_name = j.value("feature_output_name", m.feature_output_name);
    m.patch_size = j.value("patch_size", m.patch_size);
    m.input_size = j.value("input_size", m.input_size);
    m.feature_dim = j.value("feature_dim", m.feature_dim);
    m.channel_mean = j.value("channel_mean", m.channel_mean);
    m.channel_std = j.value("channel_std", m.channel_std);
    if (j.contains("attention_layer") && j["attention_layer"].is_string()) {
      if (j["attention_layer"] != "last") throw Error(ErrorCode::ModelLoadError, "attention_layer must be an integer or \"last\"");
      m.attention_layer = -1;
    } else {
      m.attention_layer = j.value("attention_layer", m.attention_layer);
    }
    const std::string reduction = j.value("attention_reduction", std::string("mean_over_heads"));
    if (reduction != "mean_over_heads") {
      throw Error(ErrorCode::ModelLoadError, "unsupported attention_reduction " + reduction);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ModelLoadError, std::string("malformed backend manifest: ") + e.what());
  }
  if (!m.is_fixture() && !base_dir.empty()) {
    std::filesystem::path p(m.model_path);
    if (p.is_relative()) m.model_path = (base_dir / p).lexically_normal().string();
  }
  m.validate();
  return m;
}

BackendManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ModelLoadError, "cannot open backend manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str(), path.parent_path());
}

std::string manifest_to_json(const BackendManifest& m) {
  json j = {
      {"model_path", m.model_path},
      {"input_name", m.input_name},
      {"attention_output_name", m.attention_output_name},
      {"feature_output_name", m.feature_output_name},
      {"patch_size", m.patch_size},
      {"input_size", m.input_size},
      {"feature_dim", m.feature_dim},
      {"channel_mean", m.channel_mean},
      {"channel_std", m.channel_std},
      {"attention_layer", m.attention_layer},
      {"attention_reduction", "mean_over_heads"},
  };
  return j.dump(2);
}

FeatureSet::FeatureSet(std::size_t count, std::size_t dim, std::vector<double> values)
    : count_(count), dim_(dim), values_(std::move(values)) {
  if (values_.size() != count_ * dim_) {
    throw Error(ErrorCode::LengthMismatch, "feature buffer length does not match count x dim");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InferenceError, "non-finite feature value");
  }
}

FeatureSet FeatureSet::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t dim = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw Error(ErrorCode::LengthMismatch, "feature rows differ in length");
    values.insert(values.end(), r.begin(), r.end());
  }
  return FeatureSet(rows.size(), dim, std::move(values));
}

void FeatureSet::append(const FeatureSet& other) {
  if (other.empty()) return;
  if (empty()) {
    *this = other;
    return;
  }
  if (other.dim_ != dim_) throw Error(ErrorCode::LengthMismatch, "feature dims differ");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  count_ += other.count_;
}

Backend::Backend(BackendManifest manifest) : manifest_(std::move(manifest)) {
  manifest_.validate();
  grid_ = manifest_.patch_grid();
}

ImageTensor Backend::prepare(const ImageTensor& raw) const {
  return resize(raw, manifest_.preprocess_spec());
}

void Backend::check_input(const ImageTensor& img) const {
  if (img.height() != manifest_.input_size || img.width() != manifest_.input_size) {
    throw Error(ErrorCode::InferenceError, "image must be " + std::to_string(manifest_.input_size) + "x" +
                                               std::to_string(manifest_.input_size) + ", got " +
                                               std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
}

FixtureBackend::FixtureBackend(BackendManifest manifest)
    : Backend(std::move(manifest)), seed_(parse_fixture_seed(this->manifest().model_path)) {
  const std::size_t cols = patch_grid().patch_length();
  const std::size_t rows = this->manifest().feature_dim;
  // mt19937_64 output is fixed by the standard, unlike the distributions.
  std::mt19937_64 rng(seed_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  projection_.resize(rows * cols);
  for (double& v : projection_) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
    v = (2.0 * unit - 1.0) * scale;
  }
}

BackendOutput FixtureBackend::analyze(const ImageTensor& img) const {
  check_input(img);
  const PatchGrid& grid = patch_grid();
  const std::size_t n = grid.patch_count();
  const std::size_t len = grid.patch_length();
  const std::size_t dim = manifest().feature_dim;

  BackendOutput out;
  out.attention.scores.resize(n);
  std::vector<double> features(n * dim, 0.0);
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const auto patch = extract_pixel_patch(img, grid, p);
    double lum = 0.0;
    for (std::size_t k = 0; k < len; k += 3) lum += 0.299 * patch[k] + 0.587 * patch[k + 1] + 0.114 * patch[k + 2];
    lum /= static_cast<double>(len / 3);
    out.attention.scores[p] = lum;
    total += lum;

    double* token = &features[p * dim];
    for (std::size_t r = 0; r < dim; ++r) {
      const double* row = &projection_[r * len];
      double acc = 0.0;
      for (std::size_t k = 0; k < len; ++k) acc += row[k] * patch[k];
      token[r] = acc;
    }
  }
  for (double& s : out.attention.scores) s = total > 0.0 ? s / total : 1.0 / static_cast<double>(n);
  out.features = FeatureSet(n, dim, std::move(features));
  return out;
}

AttentionMap reduce_attention(const onnx::Tensor& attention, std::size_t patch_count, int layer) {
  const auto& shape = attention.shape;
  const auto n = static_cast<std::int64_t>(patch_count);
  AttentionMap map;
  map.scores.resize(patch_count);

  const bool pre_reduced = shape.size() == 1 || (shape.size() == 2 && shape[0] == 1 && shape[1] != 1 &&
                                                 shape[1] != shape[0]);
  if (pre_reduced) {
    const std::int64_t len = shape.back();
    if (len != n && len != n + 1) {
      throw Error(ErrorCode::ShapeMismatch, "pre-reduced attention has length " + std::to_string(len) +
                                                ", expected " + std::to_string(n) + " or " + std::to_string(n + 1));
    }
    const std::size_t skip = len == n + 1 ? 1 : 0;
    for (std::size_t p = 0; p < patch_count; ++p) map.scores[p] = std::max(0.0, attention.get(p + skip));
    return map;
  }

  if (shape.size() < 2 || shape.size() > 5) {
    throw Error(ErrorCode::ShapeMismatch, "unsupported attention layout " + onnx::shape_string(shape));
  }
  const std::int64_t tokens = shape[shape.size() - 1];
  if (shape[shape.size() - 2] != tokens || tokens != n + 1) {
    throw Error(ErrorCode::ShapeMismatch, "attention " + onnx::shape_string(shape) + " does not match " +
                                              std::to_string(n) + " patches plus CLS");
  }
  std::int64_t heads = shape.size() >= 3 ? shape[shape.size() - 3] : 1;
  std::size_t base = 0;
  const std::size_t head_stride = static_cast<std::size_t>(tokens * tokens);
  if (shape.size() == 4 && shape[0] != 1) throw Error(ErrorCode::ShapeMismatch, "attention batch must be 1");
  if (shape.size() == 5) {
    if (shape[1] != 1) throw Error(ErrorCode::ShapeMismatch, "attention batch must be 1");
    const std::int64_t layers = shape[0];
    const std::int64_t idx = layer < 0 ? layers + layer : layer;
    if (idx < 0 || idx >= layers) throw Error(ErrorCode::ShapeMismatch, "attention_layer out of range");
    base = static_cast<std::size_t>(idx * heads) * head_stride;
  } else if (layer >= 0 && layer != 0 && shape.size() < 5) {
    // a single exported layer: any explicit index refers to that layer
  }

  for (std::int64_t h = 0; h < heads; ++h) {
    const std::size_t row = base + static_cast<std::size_t>(h) * head_stride;  // CLS row
    for (std::size_t p = 0; p < patch_count; ++p) map.scores[p] += attention.get(row + 1 + p);
  }
  for (double& s : map.scores) s = std::max(0.0, s / static_cast<double>(heads));
  return map;
}

FeatureSet extract_patch_tokens(const onnx::Tensor& hidden, std::size_t patch_count, std::size_t feature_dim) {
  const auto& shape = hidden.shape;
  if (!(shape.size() == 3 && shape[0] == 1) && shape.size() != 2) {
    throw Error(ErrorCode::ShapeMismatch, "unsupported hidden-state layout " + onnx::shape_string(shape));
  }
  const std::int64_t tokens = shape[shape.size() - 2];
  const std::int64_t dim = shape[shape.size() - 1];
  const auto n = static_cast<std::int64_t>(patch_count);
  if (dim != static_cast<std::int64_t>(feature_dim)) {
    throw Error(ErrorCode::ShapeMismatch, "hidden states have dim " + std::to_string(dim) + ", manifest says " +
                                              std::to_string(feature_dim));
  }
  if (tokens != n && tokens != n + 1) {
    throw Error(ErrorCode::ShapeMismatch, "hidden states have " + std::to_string(tokens) + " tokens, expected " +
                                              std::to_string(n) + " (+1 CLS)");
  }
  const std::size_t skip = tokens == n + 1 ? feature_dim : 0;
  std::vector<double> values(patch_count * feature_dim);
  for (std::size_t k = 0; k < values.size(); ++k) values[k] = hidden.get(skip + k);
  return FeatureSet(patch_count, feature_dim, std::move(values));
}

OnnxBackend::OnnxBackend(BackendManifest manifest, onnx::Model model)
    : Backend(std::move(manifest)), model_(std::move(model)) {}

BackendOutput OnnxBackend::analyze(const ImageTensor& img) const {
  check_input(img);
  const BackendManifest& m = manifest();
  const auto size = static_cast<std::int64_t>(m.input_size);
  std::map<std::string, onnx::Tensor> feeds;
  feeds.emplace(m.input_name, onnx::Tensor::floats({1, 3, size, size}, normalize_chw(img, m.preprocess_spec())));
  auto outputs = model_.run(feeds, {m.attention_output_name, m.feature_output_name});

  const std::size_t n = patch_grid().patch_count();
  BackendOutput out;
  out.attention = reduce_attention(outputs.at(m.attention_output_name), n, m.attention_layer);
  out.features = extract_patch_tokens(outputs.at(m.feature_output_name), n, m.feature_dim);
  return out;
}

std::unique_ptr<Backend> load_backend(const BackendManifest& manifest) {
  manifest.validate();
  if (manifest.is_fixture()) return std::make_unique<FixtureBackend>(manifest);

  if (!std::filesystem::is_regular_file(manifest.model_path)) {
    throw Error(ErrorCode::ModelLoadError, "model file not found: " + manifest.model_path);
  }
  onnx::Model model = onnx::Model::load(manifest.model_path);
  const auto& inputs = model.input_names();
  if (std::find(inputs.begin(), inputs.end(), manifest.input_name) == inputs.end()) {
    throw Error(ErrorCode::ModelLoadError, "graph has no input named '" + manifest.input_name + "'");
  }
  for (const auto* name : {&manifest.attention_output_name, &manifest.feature_output_name}) {
    if (!model.has_value(*name)) throw Error(ErrorCode::MissingOutput, "graph has no output named '" + *name + "'");
  }
  auto backend = std::make_unique<OnnxBackend>(manifest, std::move(model));
  // A probe inference surfaces shape disagreements at load time.
  try {
    backend->analyze(ImageTensor(manifest.input_size, manifest.input_size, 0.5));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ShapeMismatch) throw;
    throw Error(ErrorCode::ShapeMismatch, std::string("probe inference failed: ") + e.what());
  }
  return backend;
}

}  // namespace glips
