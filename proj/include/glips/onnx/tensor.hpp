#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace glips::onnx {

// Element types the interpreter computes with. Float covers float/double
// initialisers; Int64 covers every integer width; Bool is stored as 0/1.
enum class DType { Float, Int64, Bool };

using Shape = std::vector<std::int64_t>;

inline std::size_t element_count(const Shape& shape) {
  return static_cast<std::size_t>(
      std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>()));
}

std::string shape_string(const Shape& shape);

struct Tensor {
  DType dtype = DType::Float;
  Shape shape;
  std::vector<float> f;         // DType::Float
  std::vector<std::int64_t> i;  // DType::Int64 and DType::Bool

  static Tensor floats(Shape shape, std::vector<float> values);
  static Tensor ints(Shape shape, std::vector<std::int64_t> values, DType dtype = DType::Int64);

  std::size_t size() const noexcept { return element_count(shape); }
  std::size_t rank() const noexcept { return shape.size(); }
  bool is_float() const noexcept { return dtype == DType::Float; }

  // Element as double / as integer regardless of storage.
  double get(std::size_t k) const { return is_float() ? f[k] : static_cast<double>(i[k]); }
  std::int64_t get_int(std::size_t k) const {
    return is_float() ? static_cast<std::int64_t>(f[k]) : i[k];
  }
  std::vector<std::int64_t> to_ints() const;
};

}  // namespace glips::onnx
