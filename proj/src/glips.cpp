#include "glips/glips.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "glips/error.hpp"

namespace glips {

void KernelSpec::validate() const {
  if (gamma && !(*gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  if (sigma && !(*sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 1");
  if (alpha && !std::isfinite(*alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be finite");
  if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "c must be finite");
}

bool KernelSpec::resolved() const {
  switch (family) {
    case KernelFamily::Rbf: return gamma.has_value();
    case KernelFamily::Polynomial: return alpha.has_value();
    case KernelFamily::Exponential: return sigma.has_value();
  }
  return false;
}

void GlipsConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in [0,1]");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  kernel.validate();
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Rbf: return "rbf";
    case KernelFamily::Polynomial: return "polynomial";
    case KernelFamily::Exponential: return "exponential";
  }
  return "rbf";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "rbf") return KernelFamily::Rbf;
  if (name == "polynomial" || name == "poly") return KernelFamily::Polynomial;
  if (name == "exponential" || name == "exp") return KernelFamily::Exponential;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + name + "'");
}

std::string to_string(Pairing pairing) {
  return pairing == Pairing::AttentionRank ? "attention_rank" : "spatial_index";
}

Pairing parse_pairing(const std::string& name) {
  if (name == "attention_rank") return Pairing::AttentionRank;
  if (name == "spatial_index") return Pairing::SpatialIndex;
  throw Error(ErrorCode::InvalidArgument, "unknown pairing '" + name + "'");
}

SalientSelection select_salient(const AttentionMap& att, std::size_t k) {
  if (att.scores.empty()) throw Error(ErrorCode::EmptyAttention, "attention map has no scores");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<std::size_t> order(att.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (att.scores[a] != att.scores[b]) return att.scores[a] > att.scores[b];
                      return a < b;
                    });
  order.resize(take);
  return {std::move(order), k};
}

double dice_patch(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "patches differ in length");
  double ab = 0.0, sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] >= 0.0 && a[i] <= 1.0) || !(b[i] >= 0.0 && b[i] <= 1.0)) {
      throw Error(ErrorCode::ValueOutOfRange, "patch values must lie in [0,1]");
    }
    ab += a[i] * b[i];
    sa += a[i];
    sb += b[i];
  }
  if (sa + sb == 0.0) return 1.0;  // both all-black
  return 2.0 * ab / (sa + sb);
}

LocalSimilarity local_similarity(const ImageTensor& orig, const ImageTensor& gen, const PatchGrid& grid,
                                 const SalientSelection& sel_o, const SalientSelection& sel_g,
                                 Pairing pairing) {
  if (sel_o.indices.size() != sel_g.indices.size()) {
    throw Error(ErrorCode::SelectionLengthMismatch, "selections differ in length");
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (pairing == Pairing::AttentionRank) {
    for (std::size_t j = 0; j < sel_o.indices.size(); ++j) pairs.emplace_back(sel_o.indices[j], sel_g.indices[j]);
  } else {
    const std::set<std::size_t> in_g(sel_g.indices.begin(), sel_g.indices.end());
    for (std::size_t idx : sel_o.indices) {
      if (in_g.count(idx)) pairs.emplace_back(idx, idx);
    }
    if (pairs.empty()) throw Error(ErrorCode::EmptyPairing, "selections share no patch index");
  }
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairing, "no patches selected");

  double total = 0.0;
  for (const auto& [io, ig] : pairs) {
    const auto po = extract_pixel_patch(orig, grid, io);
    const auto pg = extract_pixel_patch(gen, grid, ig);
    total += dice_patch(po, pg);
  }
  LocalSimilarity out;
  out.dice_mean = total / static_cast<double>(pairs.size());
  out.s1 = 1.0 - out.dice_mean;
  return out;
}

namespace {

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x[i] - y[i];
    s += t * t;
  }
  return s;
}

// Median of values; average of the middle pair for even counts.
double median(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "kernel arguments differ in length");
  if (!spec.resolved()) {
    throw Error(ErrorCode::UnresolvedHyperparameter, to_string(spec.family) + " kernel has an unresolved hyperparameter");
  }
  switch (spec.family) {
    case KernelFamily::Rbf:
      return std::exp(-*spec.gamma * squared_distance(x, y));
    case KernelFamily::Polynomial: {
      double dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
      return std::pow(*spec.alpha * dot + spec.c, spec.d);
    }
    case KernelFamily::Exponential:
      return std::exp(-std::sqrt(squared_distance(x, y)) / *spec.sigma);
  }
  return 0.0;
}

KernelSpec resolve_median_heuristic(const KernelSpec& spec, const FeatureSet& f_o, const FeatureSet& f_g) {
  KernelSpec out = spec;
  const bool need_width = (spec.family == KernelFamily::Rbf && !spec.gamma) ||
                          (spec.family == KernelFamily::Exponential && !spec.sigma);
  if (spec.family == KernelFamily::Polynomial && !spec.alpha) {
    const std::size_t dim = f_o.empty() ? f_g.dim() : f_o.dim();
    if (dim == 0) throw Error(ErrorCode::EmptyFeatureSet, "cannot resolve alpha without features");
    out.alpha = 1.0 / static_cast<double>(dim);
  }
  if (!need_width) return out;
  if (f_o.empty() && f_g.empty()) throw Error(ErrorCode::EmptyFeatureSet, "pooled token set is empty");

  std::vector<std::span<const double>> pooled;
  for (std::size_t i = 0; i < f_o.count(); ++i) pooled.push_back(f_o.token(i));
  for (std::size_t i = 0; i < f_g.count(); ++i) pooled.push_back(f_g.token(i));
  std::vector<double> dist;
  dist.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) dist.push_back(std::sqrt(squared_distance(pooled[i], pooled[j])));
  }
  double sigma = dist.empty() ? 0.0 : median(dist);
  if (!(sigma > 0.0)) sigma = 1.0;
  out.sigma = sigma;
  if (spec.family == KernelFamily::Rbf) out.gamma = 1.0 / (2.0 * sigma * sigma);
  return out;
}

namespace {

double mean_kernel(const FeatureSet& a, const FeatureSet& b, const KernelSpec& spec) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i) {
    const auto x = a.token(i);
    double row = 0.0;
    for (std::size_t j = 0; j < b.count(); ++j) row += kernel_eval(spec, x, b.token(j));
    total += row;
  }
  return total / (static_cast<double>(a.count()) * static_cast<double>(b.count()));
}

}  // namespace

double mmd(const FeatureSet& f_o, const FeatureSet& f_g, const KernelSpec& spec) {
  if (f_o.empty() || f_g.empty()) throw Error(ErrorCode::EmptyFeatureSet, "MMD needs two nonempty feature sets");
  if (f_o.dim() != f_g.dim()) throw Error(ErrorCode::LengthMismatch, "feature sets differ in dimension");
  if (!spec.resolved()) {
    throw Error(ErrorCode::UnresolvedHyperparameter, to_string(spec.family) + " kernel has an unresolved hyperparameter");
  }
  const double k_oo = mean_kernel(f_o, f_o, spec);
  const double k_gg = mean_kernel(f_g, f_g, spec);
  const double k_og = mean_kernel(f_o, f_g, spec);
  return std::max(0.0, k_oo + k_gg - 2.0 * k_og);
}

double combine_score(double s1, double s2, double lambda) {
  return std::clamp(s2 * (1.0 - lambda * s1), 0.0, 1.0);
}

GlipsResult glips_score(const ImageTensor& orig, const ImageTensor& gen, const BackendOutput& out_o,
                        const BackendOutput& out_g, const PatchGrid& grid, const GlipsConfig& cfg) {
  cfg.validate();
  const auto sel_o = select_salient(out_o.attention, cfg.k);
  const auto sel_g = select_salient(out_g.attention, cfg.k);
  const auto local = local_similarity(orig, gen, grid, sel_o, sel_g, cfg.pairing);

  GlipsResult r;
  r.kernel = resolve_median_heuristic(cfg.kernel, out_o.features, out_g.features);
  r.s1 = local.s1;
  r.dice_mean = local.dice_mean;
  r.s2 = mmd(out_o.features, out_g.features, r.kernel);
  r.score = combine_score(r.s1, r.s2, cfg.lambda);
  return r;
}

GlipsResult glips_score(const ImageTensor& orig, const ImageTensor& gen, const Backend& backend,
                        const GlipsConfig& cfg) {
  cfg.validate();
  const ImageTensor o = backend.prepare(orig), g = backend.prepare(gen);
  const auto out_o = backend.analyze(o);
  const auto out_g = backend.analyze(g);
  return glips_score(o, g, out_o, out_g, backend.patch_grid(), cfg);
}

}  // namespace glips
