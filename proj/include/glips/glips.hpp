#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glips/backend.hpp"
#include "glips/imagery.hpp"

namespace glips {

struct SalientSelection {
  std::vector<std::size_t> indices;  // descending attention
  std::size_t k = 16;
};

enum class KernelFamily { Rbf, Polynomial, Exponential };

// nullopt bandwidths mean "median heuristic"; a nullopt polynomial alpha
// resolves to 1 / feature_dim.
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  std::optional<double> gamma;
  std::optional<double> alpha;
  double c = 1.0;
  int d = 3;
  std::optional<double> sigma;

  // Throws InvalidArgument for non-positive gamma / sigma or d < 1.
  void validate() const;
  bool resolved() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

enum class Pairing { AttentionRank, SpatialIndex };

struct GlipsConfig {
  double lambda = 0.62;
  std::size_t k = 16;
  KernelSpec kernel;
  Pairing pairing = Pairing::AttentionRank;

  void validate() const;
};

struct LocalSimilarity {
  double dice_mean = 0.0;
  double s1 = 0.0;
};

struct GlipsResult {
  double s1 = 0.0;
  double s2 = 0.0;
  double score = 0.0;
  double dice_mean = 0.0;
  KernelSpec kernel;  // as resolved for this pair

  friend bool operator==(const GlipsResult&, const GlipsResult&) = default;
};

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);  // throws InvalidArgument
std::string to_string(Pairing pairing);
Pairing parse_pairing(const std::string& name);

// Top-k indices by score, ties to the lower index. Throws EmptyAttention,
// InvalidArgument (k = 0).
SalientSelection select_salient(const AttentionMap& att, std::size_t k);

// 2 sum(ab) / (sum(a) + sum(b)); 1 when both sums are zero.
double dice_patch(std::span<const double> a, std::span<const double> b);

LocalSimilarity local_similarity(const ImageTensor& orig, const ImageTensor& gen, const PatchGrid& grid,
                                 const SalientSelection& sel_o, const SalientSelection& sel_g,
                                 Pairing pairing = Pairing::AttentionRank);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

// Fills the bandwidth the family needs (and alpha for polynomial) from the
// pooled token set; explicit values are kept.
KernelSpec resolve_median_heuristic(const KernelSpec& spec, const FeatureSet& f_o, const FeatureSet& f_g);

// Biased squared MMD, clamped at zero. Throws EmptyFeatureSet.
double mmd(const FeatureSet& f_o, const FeatureSet& f_g, const KernelSpec& spec);

// S2 * (1 - lambda * S1), clamped to [0,1].
double combine_score(double s1, double s2, double lambda);

// Inputs are resized to the backend's input size first.
GlipsResult glips_score(const ImageTensor& orig, const ImageTensor& gen, const Backend& backend,
                        const GlipsConfig& cfg);

// Same computation from already-computed backend outputs.
GlipsResult glips_score(const ImageTensor& orig, const ImageTensor& gen, const BackendOutput& out_o,
                        const BackendOutput& out_g, const PatchGrid& grid, const GlipsConfig& cfg);

}  // namespace glips
