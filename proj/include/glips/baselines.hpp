#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "glips/backend.hpp"
#include "glips/imagery.hpp"

namespace glips {

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  std::array<double, 5> msssim_weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

  void validate() const;
};

// Mean SSIM over 'valid' Gaussian windows of the Rec. 601 luma planes.
// Throws DimensionMismatch, TooSmallForScales (image smaller than window).
double ssim(const ImageTensor& a, const ImageTensor& b, const SsimParams& p = {});

// Five scales, 2x2 average pooling between them; negative contrast terms
// are clamped to zero before the weighted product.
double ms_ssim(const ImageTensor& a, const ImageTensor& b, const SsimParams& p = {});

// Minimum side length ms_ssim accepts for a given window.
std::size_t ms_ssim_min_size(const SsimParams& p = {});

// dB over all channels, dynamic range 1; +inf for identical images.
double psnr(const ImageTensor& a, const ImageTensor& b);
inline bool is_infinite_psnr(double v) { return v == std::numeric_limits<double>::infinity(); }

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Sample mean and unbiased covariance. Throws InsufficientSamples (< 2).
GaussianSummary fit_gaussian(const FeatureSet& features);

// Frechet distance; the matrix square root goes through the symmetric
// product S1^(1/2) S2 S1^(1/2). Throws DimensionMismatch, EigenFailure.
double fid(const GaussianSummary& g1, const GaussianSummary& g2);

// Polynomial-kernel MMD with alpha = 1/dim, c = 1, d = 3.
double kid(const FeatureSet& f_o, const FeatureSet& f_g);

double mad(std::span<const double> human, std::span<const double> metric);
// Percent, denominators are the human scores.
double mape(std::span<const double> human, std::span<const double> metric);

}  // namespace glips
