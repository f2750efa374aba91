#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "glips/backend.hpp"
#include "glips/image_io.hpp"
#include "glips/imagery.hpp"

namespace glips::testing {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(GLIPS_TEST_DATA_DIR) / rel;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("glips_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Smooth colour pattern that differs per seed; values land on the 8-bit
// grid so a PNG round trip is exact.
inline ImageTensor pattern_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double fx = 0.02 + 0.2 * u(), fy = 0.02 + 0.2 * u(), phase = 6.28 * u();
  const double tint[3] = {u(), u(), u()};
  ImageTensor img(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = 0.5 + 0.45 * std::sin(fx * static_cast<double>(x) + fy * static_cast<double>(y) + phase +
                                               2.0 * tint[c]);
        img.at(y, x, c) = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
      }
  return img;
}

// Gray pair shared with tests/oracles/ssim_reference.py.
inline std::pair<ImageTensor, ImageTensor> pattern_pair(std::size_t h, std::size_t w) {
  ImageTensor a(h, w), b(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      const double va = 0.5 + 0.4 * std::sin(0.07 * fx + 0.11 * fy) * std::cos(0.05 * fy);
      const double vb = std::clamp(va + 0.15 * std::sin(0.31 * fx) * std::sin(0.23 * fy) + 0.05, 0.0, 1.0);
      for (std::size_t c = 0; c < 3; ++c) {
        a.at(y, x, c) = va;
        b.at(y, x, c) = vb;
      }
    }
  return {a, b};
}

// The image the ONNX reference outputs were computed on.
inline ImageTensor onnx_reference_image(std::size_t size) {
  ImageTensor img(size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<double>((y * 7 + x * 13 + c * 29) % 256) / 255.0;
  return img;
}

inline FeatureSet random_features(std::mt19937_64& rng, std::size_t count, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(count * dim);
  for (double& x : v) x = n(rng);
  return FeatureSet(count, dim, std::move(v));
}

struct FixtureDataset {
  std::filesystem::path manifest;
  std::filesystem::path humans;
  std::vector<std::string> models;
};

// Writes `entries` originals plus one generated image per model. With
// identity=true every generated image is a copy of its original.
inline FixtureDataset write_fixture_dataset(const std::filesystem::path& dir, std::size_t entries, bool identity,
                                            std::size_t size = 224) {
  FixtureDataset ds;
  ds.models = {"ModelA", "ModelB"};
  std::filesystem::create_directories(dir / "images");
  std::ostringstream m;
  m << "{\"entries\": [";
  for (std::size_t i = 0; i < entries; ++i) {
    const std::string orig = "images/orig_" + std::to_string(i) + ".png";
    encode_png(pattern_image(size, size, 100 + i), dir / orig);
    m << (i ? "," : "") << "{\"caption_id\": \"c" << i << "\", \"original_path\": \"" << orig << "\", \"generated\": {";
    for (std::size_t k = 0; k < ds.models.size(); ++k) {
      const std::string gen = "images/" + ds.models[k] + "_" + std::to_string(i) + ".png";
      encode_png(identity ? pattern_image(size, size, 100 + i) : pattern_image(size, size, 1000 * (k + 1) + i),
                 dir / gen);
      m << (k ? "," : "") << "\"" << ds.models[k] << "\": \"" << gen << "\"";
    }
    m << "}}";
  }
  m << "]}";
  ds.manifest = dir / "dataset.json";
  write_text(ds.manifest, m.str());
  ds.humans = dir / "humans.csv";
  write_text(ds.humans,
             "model,question_id,mean_score\n"
             "ModelA,1,3.5\nModelA,2,3.7\nModelA,3,3.6\nModelA,4,3.4\nModelA,5,3.8\n"
             "ModelB,1,2.1\nModelB,2,2.3\nModelB,3,2.0\nModelB,4,2.2\nModelB,5,2.4\n");
  return ds;
}

}  // namespace glips::testing
