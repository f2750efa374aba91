#include "glips/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "glips/error.hpp"

namespace glips {
namespace {

bool starts_with(const std::vector<unsigned char>& bytes, std::span<const unsigned char> magic) {
  return bytes.size() >= magic.size() && std::equal(magic.begin(), magic.end(), bytes.begin());
}

constexpr std::array<unsigned char, 8> kPngMagic{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
constexpr std::array<unsigned char, 3> kJpegMagic{0xFF, 0xD8, 0xFF};

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_mat(const cv::Mat& mat, const std::filesystem::path& path) {
  std::vector<unsigned char> encoded;
  try {
    if (!cv::imencode(".png", mat, encoded)) {
      throw Error(ErrorCode::IoError, "PNG encoding failed for " + path.string());
    }
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::IoError, path.string() + ": " + e.what());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(encoded.data()), static_cast<std::streamsize>(encoded.size()));
  if (!out) throw Error(ErrorCode::IoError, "could not write " + path.string());
}

}  // namespace

ImageTensor decode_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (!starts_with(bytes, kPngMagic) && !starts_with(bytes, kJpegMagic)) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is neither PNG nor JPEG");
  }

  cv::Mat bgr;
  try {
    bgr = cv::imdecode(bytes, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::CorruptImage, path.string() + ": " + e.what());
  }
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw Error(ErrorCode::CorruptImage, path.string());
  }

  const auto h = static_cast<std::size_t>(bgr.rows);
  const auto w = static_cast<std::size_t>(bgr.cols);
  std::vector<double> data(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      const cv::Vec3b& px = row[x];
      double* dst = &data[(y * w + x) * 3];
      dst[0] = px[2] / 255.0;
      dst[1] = px[1] / 255.0;
      dst[2] = px[0] / 255.0;
    }
  }
  return ImageTensor(h, w, std::move(data));
}

void encode_png(const ImageTensor& img, const std::filesystem::path& path) {
  cv::Mat bgr(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC3);
  for (std::size_t y = 0; y < img.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < img.width(); ++x) {
      row[x] = cv::Vec3b(to_byte(img.at(y, x, 2)), to_byte(img.at(y, x, 1)), to_byte(img.at(y, x, 0)));
    }
  }
  write_mat(bgr, path);
}

void encode_gray_png(std::span<const double> values, std::size_t height, std::size_t width,
                     const std::filesystem::path& path) {
  if (values.size() != height * width) {
    throw Error(ErrorCode::InvalidArgument, "gray buffer length does not match dimensions");
  }
  cv::Mat gray(static_cast<int>(height), static_cast<int>(width), CV_8UC1);
  for (std::size_t y = 0; y < height; ++y) {
    auto* row = gray.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < width; ++x) row[x] = to_byte(values[y * width + x]);
  }
  write_mat(gray, path);
}

}  // namespace glips
