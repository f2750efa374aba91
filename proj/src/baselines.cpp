#include "glips/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "glips/error.hpp"
#include "glips/glips.hpp"

namespace glips {

namespace {

struct Plane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
  double at(std::size_t y, std::size_t x) const { return v[y * w + x]; }
};

Plane luma(const ImageTensor& img) {
  Plane p{img.height(), img.width(), std::vector<double>(img.height() * img.width())};
  for (std::size_t y = 0; y < p.h; ++y)
    for (std::size_t x = 0; x < p.w; ++x) p.v[y * p.w + x] = luminance(img, y, x);
  return p;
}

std::vector<double> gaussian_taps(std::size_t n, double sigma) {
  std::vector<double> g(n);
  const double centre = (static_cast<double>(n) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - centre;
    g[i] = std::exp(-t * t / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable 'valid' filtering.
Plane filter_valid(const Plane& in, const std::vector<double>& g) {
  const std::size_t n = g.size();
  const std::size_t ow = in.w - n + 1, oh = in.h - n + 1;
  Plane rows{in.h, ow, std::vector<double>(in.h * ow)};
  for (std::size_t y = 0; y < in.h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += g[k] * in.at(y, x + k);
      rows.v[y * ow + x] = s;
    }
  Plane out{oh, ow, std::vector<double>(oh * ow)};
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += g[k] * rows.at(y + k, x);
      out.v[y * ow + x] = s;
    }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.h, a.w, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

struct SsimTerms {
  double ssim = 0.0;
  double cs = 0.0;  // contrast-structure part
};

SsimTerms ssim_terms(const Plane& a, const Plane& b, const SsimParams& p) {
  if (a.h < p.window || a.w < p.window) {
    throw Error(ErrorCode::TooSmallForScales, "image is smaller than the SSIM window");
  }
  const auto g = gaussian_taps(p.window, p.sigma);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  const Plane mu_a = filter_valid(a, g), mu_b = filter_valid(b, g);
  const Plane aa = filter_valid(product(a, a), g), bb = filter_valid(product(b, b), g),
              ab = filter_valid(product(a, b), g);
  double ssim_sum = 0.0, cs_sum = 0.0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double va = aa.v[i] - ma * ma, vb = bb.v[i] - mb * mb, cov = ab.v[i] - ma * mb;
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    cs_sum += cs;
    ssim_sum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1) * cs;
  }
  const auto n = static_cast<double>(mu_a.v.size());
  return {ssim_sum / n, cs_sum / n};
}

// 2x2 mean; a trailing odd row or column is dropped.
Plane downsample(const Plane& in) {
  Plane out{in.h / 2, in.w / 2, {}};
  out.v.resize(out.h * out.w);
  for (std::size_t y = 0; y < out.h; ++y)
    for (std::size_t x = 0; x < out.w; ++x)
      out.v[y * out.w + x] = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) + in.at(2 * y + 1, 2 * x) +
                                     in.at(2 * y + 1, 2 * x + 1));
  return out;
}

void check_same_size(const ImageTensor& a, const ImageTensor& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::DimensionMismatch, "images differ in size");
  }
  if (a.empty()) throw Error(ErrorCode::DimensionMismatch, "images are empty");
}

}  // namespace

void SsimParams::validate() const {
  if (window == 0 || !(sigma > 0.0) || !(dynamic_range > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "SSIM window, sigma and dynamic range must be positive");
  }
  double sum = 0.0;
  for (double w : msssim_weights) sum += w;
  // The canonical five weights sum to 1.0001 as published, hence 1e-3.
  if (std::abs(sum - 1.0) > 1e-3) throw Error(ErrorCode::InvalidArgument, "MS-SSIM weights must sum to 1");
}

double ssim(const ImageTensor& a, const ImageTensor& b, const SsimParams& p) {
  p.validate();
  check_same_size(a, b);
  return ssim_terms(luma(a), luma(b), p).ssim;
}

std::size_t ms_ssim_min_size(const SsimParams& p) { return p.window * 16; }

double ms_ssim(const ImageTensor& a, const ImageTensor& b, const SsimParams& p) {
  p.validate();
  check_same_size(a, b);
  const std::size_t need = ms_ssim_min_size(p);
  if (a.height() < need || a.width() < need) {
    throw Error(ErrorCode::TooSmallForScales, "MS-SSIM needs both sides >= " + std::to_string(need));
  }
  Plane pa = luma(a), pb = luma(b);
  double result = 1.0;
  for (std::size_t s = 0; s < p.msssim_weights.size(); ++s) {
    const SsimTerms t = ssim_terms(pa, pb, p);
    const bool last = s + 1 == p.msssim_weights.size();
    result *= std::pow(std::max(0.0, last ? t.ssim : t.cs), p.msssim_weights[s]);
    if (!last) {
      pa = downsample(pa);
      pb = downsample(pb);
    }
  }
  return result;
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  check_same_size(a, b);
  const auto da = a.data(), db = b.data();
  double se = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) se += (da[i] - db[i]) * (da[i] - db[i]);
  const double mse = se / static_cast<double>(da.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

GaussianSummary fit_gaussian(const FeatureSet& features) {
  if (features.count() < 2) throw Error(ErrorCode::InsufficientSamples, "need at least two feature vectors");
  const auto n = static_cast<Eigen::Index>(features.count());
  const auto d = static_cast<Eigen::Index>(features.dim());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      features.values().data(), n, d);
  GaussianSummary g;
  g.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centred = x.rowwise() - g.mean.transpose();
  g.covariance = (centred.transpose() * centred) / static_cast<double>(n - 1);
  return g;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "eigendecomposition did not converge");
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const GaussianSummary& g1, const GaussianSummary& g2) {
  const auto d = g1.mean.size();
  if (g2.mean.size() != d || g1.covariance.rows() != d || g1.covariance.cols() != d ||
      g2.covariance.rows() != d || g2.covariance.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "Gaussian summaries differ in dimension");
  }
  const Eigen::MatrixXd s1 = 0.5 * (g1.covariance + g1.covariance.transpose());
  const Eigen::MatrixXd s2 = 0.5 * (g2.covariance + g2.covariance.transpose());
  const Eigen::MatrixXd root1 = psd_sqrt(s1);
  Eigen::MatrixXd inner = root1 * s2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "eigendecomposition did not converge");
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) trace_sqrt += std::sqrt(std::max(0.0, es.eigenvalues()[i]));
  const double value = (g1.mean - g2.mean).squaredNorm() + s1.trace() + s2.trace() - 2.0 * trace_sqrt;
  return std::max(0.0, value);
}

double kid(const FeatureSet& f_o, const FeatureSet& f_g) {
  if (f_o.empty() || f_g.empty()) throw Error(ErrorCode::EmptyFeatureSet, "KID needs two nonempty feature sets");
  KernelSpec spec;
  spec.family = KernelFamily::Polynomial;
  spec.alpha = 1.0 / static_cast<double>(f_o.dim());
  spec.c = 1.0;
  spec.d = 3;
  return mmd(f_o, f_g, spec);
}

namespace {

void check_pair(std::span<const double> human, std::span<const double> metric) {
  if (human.size() != metric.size()) throw Error(ErrorCode::LengthMismatch, "score vectors differ in length");
  if (human.empty()) throw Error(ErrorCode::Empty, "score vectors are empty");
}

}  // namespace

double mad(std::span<const double> human, std::span<const double> metric) {
  check_pair(human, metric);
  double s = 0.0;
  for (std::size_t i = 0; i < human.size(); ++i) s += std::abs(human[i] - metric[i]);
  return s / static_cast<double>(human.size());
}

double mape(std::span<const double> human, std::span<const double> metric) {
  check_pair(human, metric);
  double s = 0.0;
  for (std::size_t i = 0; i < human.size(); ++i) {
    if (human[i] == 0.0) throw Error(ErrorCode::DivisionByZeroHumanScore, "human score is zero");
    s += std::abs(human[i] - metric[i]) / std::abs(human[i]);
  }
  return 100.0 * s / static_cast<double>(human.size());
}

}  // namespace glips
