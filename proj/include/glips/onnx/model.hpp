#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "glips/onnx/tensor.hpp"

namespace glips::onnx {

/// Operator types the interpreter executes.
const std::vector<std::string>& supported_operators();

/// Minimal CPU interpreter for ONNX graphs of the kind produced by exporting
/// vision transformers: float32 activations, int64 shape arithmetic, and a
/// fixed operator set. Loading fails with ModelLoadError when the graph uses
/// anything else. Execution is const and re-entrant.
class Model {
 public:
  static Model load(const std::filesystem::path& path);
  static Model from_bytes(const std::string& bytes);

  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const std::vector<std::string>& input_names() const;
  const std::vector<std::string>& output_names() const;
  // True for declared graph outputs and for any intermediate node output.
  bool has_value(const std::string& name) const;

  std::map<std::string, Tensor> run(const std::map<std::string, Tensor>& feeds,
                                    const std::vector<std::string>& fetch) const;

 private:
  struct Impl;
  explicit Model(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace glips::onnx
