#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "glips/imagery.hpp"

namespace glips {

enum class AttentionReduction { MeanOverHeads };

/// Binds a model file to the tensor names and geometry the toolkit needs.
/// `model_path` of the form "fixture:<seed>" selects the deterministic
/// fixture backend instead of a model file.
struct BackendManifest {
  std::string model_path = "fixture:0";
  std::string input_name = "pixel_values";
  std::string attention_output_name = "attention";
  std::string feature_output_name = "hidden_states";
  std::size_t patch_size = 16;
  std::size_t input_size = 224;
  std::size_t feature_dim = 64;
  std::array<double, 3> channel_mean{0.485, 0.456, 0.406};
  std::array<double, 3> channel_std{0.229, 0.224, 0.225};
  int attention_layer = -1;  // -1: last layer present in the attention output
  AttentionReduction attention_reduction = AttentionReduction::MeanOverHeads;

  void validate() const;
  bool is_fixture() const;
  PatchGrid patch_grid() const;
  PreprocessSpec preprocess_spec() const;
};

BackendManifest fixture_manifest(std::uint64_t seed);
/// Reads a manifest JSON document; a relative model_path is resolved against
/// the manifest's directory. Throws ModelLoadError on malformed documents.
BackendManifest load_manifest(const std::filesystem::path& path);
BackendManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
std::string manifest_to_json(const BackendManifest& manifest);

enum class AttentionSource { ClsToPatch };

struct AttentionMap {
  std::vector<double> scores;  // one per patch, >= 0
  AttentionSource source = AttentionSource::ClsToPatch;
};

/// Token feature vectors stored row-major, `count` rows of `dim` values.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::size_t count, std::size_t dim, std::vector<double> values);
  static FeatureSet from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return count_ == 0; }
  std::span<const double> token(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<const double> values() const noexcept { return values_; }

  // Appends the tokens of `other`; dims must agree.
  void append(const FeatureSet& other);

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct BackendOutput {
  AttentionMap attention;
  FeatureSet features;
};

/// Produces attention maps and deep features for images already resized to
/// the manifest's input size (see `prepare`). Implementations are immutable
/// after construction, so a handle may be shared across threads.
class Backend {
 public:
  explicit Backend(BackendManifest manifest);
  virtual ~Backend() = default;

  const BackendManifest& manifest() const noexcept { return manifest_; }
  const PatchGrid& patch_grid() const noexcept { return grid_; }

  ImageTensor prepare(const ImageTensor& raw) const;

  // One forward pass; throws InferenceError.
  virtual BackendOutput analyze(const ImageTensor& img) const = 0;

  AttentionMap attention_map(const ImageTensor& img) const { return analyze(img).attention; }
  FeatureSet deep_features(const ImageTensor& img) const { return analyze(img).features; }

 protected:
  void check_input(const ImageTensor& img) const;

 private:
  BackendManifest manifest_;
  PatchGrid grid_;
};

/// Attention = per-patch mean luminance normalised to sum 1; token i =
/// R * p_i with R a seeded feature_dim x (patch_size^2 * 3) matrix.
class FixtureBackend final : public Backend {
 public:
  explicit FixtureBackend(BackendManifest manifest);

  BackendOutput analyze(const ImageTensor& img) const override;
  std::uint64_t seed() const noexcept { return seed_; }
  std::span<const double> projection() const noexcept { return projection_; }

 private:
  std::uint64_t seed_;
  std::vector<double> projection_;  // feature_dim x patch_length, row-major
};

/// Throws ModelLoadError, MissingOutput or ShapeMismatch.
std::unique_ptr<Backend> load_backend(const BackendManifest& manifest);

}  // namespace glips
