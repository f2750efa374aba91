#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glips/onnx/tensor.hpp"

namespace glips::onnx {

struct Attribute {
  std::optional<float> f;
  std::optional<std::int64_t> i;
  std::optional<std::string> s;
  std::optional<Tensor> t;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
};

struct Node {
  std::string name;
  std::string op;
  std::int64_t opset = 13;
  std::vector<std::string> inputs;   // empty string marks an omitted optional input
  std::vector<std::string> outputs;
  std::map<std::string, Attribute> attrs;

  const Attribute* attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : &it->second;
  }
  std::int64_t attr_int(const std::string& key, std::int64_t fallback) const {
    const Attribute* a = attr(key);
    return a && a->i ? *a->i : fallback;
  }
  float attr_float(const std::string& key, float fallback) const {
    const Attribute* a = attr(key);
    return a && a->f ? *a->f : fallback;
  }
  std::optional<std::vector<std::int64_t>> attr_ints(const std::string& key) const {
    const Attribute* a = attr(key);
    if (!a) return std::nullopt;
    return a->ints;
  }
};

// Omitted optional inputs are passed as nullptr.
using Inputs = std::vector<const Tensor*>;
using OpFn = std::vector<Tensor> (*)(const Node&, const Inputs&);

const std::map<std::string, OpFn>& op_table();

}  // namespace glips::onnx
