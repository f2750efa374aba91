#include "glips/imagery.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glips/error.hpp"

namespace glips {

ImageTensor::ImageTensor(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width * kChannels, fill) {
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw Error(ErrorCode::ValueOutOfRange, "fill value must lie in [0,1]");
  }
}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != height_ * width_ * kChannels) {
    throw Error(ErrorCode::InvalidSpec,
                "data length " + std::to_string(data_.size()) + " != height*width*3");
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::ValueOutOfRange, "pixel value outside [0,1]");
    }
  }
}

void PreprocessSpec::validate() const {
  if (target_size == 0) throw Error(ErrorCode::InvalidSpec, "target_size must be positive");
  for (double s : channel_std) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidSpec, "channel_std must be strictly positive");
  }
}

PatchGrid make_patch_grid(std::size_t target_size, std::size_t patch_size) {
  if (patch_size == 0 || target_size == 0 || target_size % patch_size != 0) {
    throw Error(ErrorCode::InvalidSpec, "target_size " + std::to_string(target_size) +
                                            " is not a multiple of patch_size " +
                                            std::to_string(patch_size));
  }
  return PatchGrid{patch_size, target_size / patch_size};
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

// Source taps for each destination coordinate along one axis.
std::vector<Tap> bilinear_taps(std::size_t src, std::size_t dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const double max_pos = static_cast<double>(src - 1);
  for (std::size_t i = 0; i < dst; ++i) {
    double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, max_pos);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, src - 1);
    taps[i] = Tap{lo, hi, pos - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

ImageTensor resize(const ImageTensor& img, const PreprocessSpec& spec) {
  spec.validate();
  if (img.empty()) throw Error(ErrorCode::InvalidSpec, "cannot resize an empty image");
  const std::size_t n = spec.target_size;
  if (img.height() == n && img.width() == n) return img;

  const auto rows = bilinear_taps(img.height(), n);
  const auto cols = bilinear_taps(img.width(), n);
  ImageTensor out(n, n);
  for (std::size_t y = 0; y < n; ++y) {
    const Tap& ry = rows[y];
    for (std::size_t x = 0; x < n; ++x) {
      const Tap& cx = cols[x];
      for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        const double top = img.at(ry.lo, cx.lo, c) * (1.0 - cx.frac) + img.at(ry.lo, cx.hi, c) * cx.frac;
        const double bottom = img.at(ry.hi, cx.lo, c) * (1.0 - cx.frac) + img.at(ry.hi, cx.hi, c) * cx.frac;
        // Rounding can push a convex combination a few ulps past the inputs.
        out.at(y, x, c) = std::clamp(top * (1.0 - ry.frac) + bottom * ry.frac, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<double> extract_pixel_patch(const ImageTensor& img, const PatchGrid& grid,
                                        std::size_t index) {
  if (index >= grid.patch_count()) {
    throw Error(ErrorCode::IndexOutOfRange, "patch index " + std::to_string(index) +
                                                " >= patch count " +
                                                std::to_string(grid.patch_count()));
  }
  if (img.height() != grid.image_size() || img.width() != grid.image_size()) {
    throw Error(ErrorCode::DimensionMismatch, "image is " + std::to_string(img.height()) + "x" +
                                                  std::to_string(img.width()) +
                                                  ", patch grid expects " +
                                                  std::to_string(grid.image_size()));
  }
  const std::size_t y0 = (index / grid.patches_per_side) * grid.patch_size;
  const std::size_t x0 = (index % grid.patches_per_side) * grid.patch_size;
  const std::size_t row_len = grid.patch_size * ImageTensor::kChannels;

  std::vector<double> patch;
  patch.reserve(grid.patch_length());
  const auto data = img.data();
  for (std::size_t dy = 0; dy < grid.patch_size; ++dy) {
    const auto row = data.subspan(((y0 + dy) * img.width() + x0) * ImageTensor::kChannels, row_len);
    patch.insert(patch.end(), row.begin(), row.end());
  }
  return patch;
}

std::vector<float> normalize_chw(const ImageTensor& img, const PreprocessSpec& spec) {
  spec.validate();
  const std::size_t plane = img.height() * img.width();
  std::vector<float> out(plane * ImageTensor::kChannels);
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        out[c * plane + y * img.width() + x] =
            static_cast<float>((img.at(y, x, c) - spec.channel_mean[c]) / spec.channel_std[c]);
      }
    }
  }
  return out;
}

}  // namespace glips
