#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace glips {

/// Decoded RGB image, row-major with interleaved channels, values in [0,1].
class ImageTensor {
 public:
  static constexpr std::size_t kChannels = 3;

  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, double fill = 0.0);
  // Validates length and range; throws InvalidSpec / ValueOutOfRange.
  ImageTensor(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return kChannels; }
  bool empty() const noexcept { return data_.empty(); }

  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * width_ + x) * kChannels + c];
  }
  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * width_ + x) * kChannels + c];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

enum class ResizeFilter { Bilinear };

struct PreprocessSpec {
  std::size_t target_size = 224;
  ResizeFilter resize_filter = ResizeFilter::Bilinear;
  std::array<double, 3> channel_mean{0.485, 0.456, 0.406};
  std::array<double, 3> channel_std{0.229, 0.224, 0.225};

  void validate() const;
};

struct PatchGrid {
  std::size_t patch_size = 16;
  std::size_t patches_per_side = 14;

  std::size_t patch_count() const noexcept { return patches_per_side * patches_per_side; }
  std::size_t image_size() const noexcept { return patch_size * patches_per_side; }
  std::size_t patch_length() const noexcept {
    return patch_size * patch_size * ImageTensor::kChannels;
  }
};

// Throws InvalidSpec unless target_size is a nonzero multiple of patch_size.
PatchGrid make_patch_grid(std::size_t target_size, std::size_t patch_size);

/// Bilinear resize to target_size x target_size with half-pixel centres and
/// edge clamping. Same-size input is returned unchanged.
ImageTensor resize(const ImageTensor& img, const PreprocessSpec& spec);

/// Raw [0,1] pixels of one patch, row-major within the patch, channels
/// interleaved. Patch `index` sits at row index / patches_per_side.
std::vector<double> extract_pixel_patch(const ImageTensor& img, const PatchGrid& grid,
                                        std::size_t index);

/// Mean/std normalised planar (CHW) float buffer for network input.
std::vector<float> normalize_chw(const ImageTensor& img, const PreprocessSpec& spec);

// Rec. 601 luma of one pixel.
inline double luminance(const ImageTensor& img, std::size_t y, std::size_t x) {
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

}  // namespace glips
