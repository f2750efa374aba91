#include "glips/onnx/model.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <unordered_map>

#include "glips/error.hpp"
#include "onnx.pb.h"
#include "ops.hpp"

namespace glips::onnx {
namespace {

template <class T>
std::vector<T> read_raw(const std::string& raw, std::size_t n) {
  if (raw.size() != n * sizeof(T)) {
    throw Error(ErrorCode::ModelLoadError, "raw tensor data has unexpected length");
  }
  std::vector<T> out(n);
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

Tensor convert_tensor(const ::onnx::TensorProto& proto) {
  if (proto.data_location() == ::onnx::TensorProto::EXTERNAL) {
    throw Error(ErrorCode::ModelLoadError, "tensor '" + proto.name() + "' uses external data");
  }
  Shape shape(proto.dims().begin(), proto.dims().end());
  const std::size_t n = element_count(shape);
  const bool raw = proto.has_raw_data();

  switch (proto.data_type()) {
    case ::onnx::TensorProto::FLOAT: {
      auto v = raw ? read_raw<float>(proto.raw_data(), n)
                   : std::vector<float>(proto.float_data().begin(), proto.float_data().end());
      return Tensor::floats(std::move(shape), std::move(v));
    }
    case ::onnx::TensorProto::DOUBLE: {
      auto d = raw ? read_raw<double>(proto.raw_data(), n)
                   : std::vector<double>(proto.double_data().begin(), proto.double_data().end());
      return Tensor::floats(std::move(shape), std::vector<float>(d.begin(), d.end()));
    }
    case ::onnx::TensorProto::INT64: {
      auto v = raw ? read_raw<std::int64_t>(proto.raw_data(), n)
                   : std::vector<std::int64_t>(proto.int64_data().begin(), proto.int64_data().end());
      return Tensor::ints(std::move(shape), std::move(v));
    }
    case ::onnx::TensorProto::INT32: {
      auto v = raw ? read_raw<std::int32_t>(proto.raw_data(), n)
                   : std::vector<std::int32_t>(proto.int32_data().begin(), proto.int32_data().end());
      return Tensor::ints(std::move(shape), std::vector<std::int64_t>(v.begin(), v.end()));
    }
    case ::onnx::TensorProto::BOOL:
    case ::onnx::TensorProto::UINT8:
    case ::onnx::TensorProto::INT8: {
      std::vector<std::int64_t> v(n);
      if (raw) {
        if (proto.raw_data().size() != n) throw Error(ErrorCode::ModelLoadError, "raw tensor data has unexpected length");
        for (std::size_t k = 0; k < n; ++k) {
          const auto byte = static_cast<unsigned char>(proto.raw_data()[k]);
          v[k] = proto.data_type() == ::onnx::TensorProto::INT8 ? static_cast<signed char>(byte) : byte;
        }
      } else {
        v.assign(proto.int32_data().begin(), proto.int32_data().end());
      }
      const DType dt = proto.data_type() == ::onnx::TensorProto::BOOL ? DType::Bool : DType::Int64;
      return Tensor::ints(std::move(shape), std::move(v), dt);
    }
    default:
      throw Error(ErrorCode::ModelLoadError,
                  "tensor '" + proto.name() + "' has unsupported data type " + std::to_string(proto.data_type()));
  }
}

Attribute convert_attribute(const ::onnx::AttributeProto& proto) {
  Attribute a;
  switch (proto.type()) {
    case ::onnx::AttributeProto::FLOAT: a.f = proto.f(); break;
    case ::onnx::AttributeProto::INT: a.i = proto.i(); break;
    case ::onnx::AttributeProto::STRING: a.s = proto.s(); break;
    case ::onnx::AttributeProto::TENSOR: a.t = convert_tensor(proto.t()); break;
    case ::onnx::AttributeProto::FLOATS: a.floats.assign(proto.floats().begin(), proto.floats().end()); break;
    case ::onnx::AttributeProto::INTS: a.ints.assign(proto.ints().begin(), proto.ints().end()); break;
    default: break;  // graphs and sparse tensors are not used by supported ops
  }
  return a;
}

}  // namespace

const std::vector<std::string>& supported_operators() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : op_table()) v.push_back(name);
    return v;
  }();
  return names;
}

struct Model::Impl {
  std::vector<Node> nodes;
  std::unordered_map<std::string, Tensor> initializers;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::set<std::string> produced;
  // Index of the last node reading each value, for freeing intermediates.
  std::unordered_map<std::string, std::size_t> last_use;
};

Model::Model(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;
Model::~Model() = default;

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ModelLoadError, "cannot open model file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

Model Model::from_bytes(const std::string& bytes) {
  ::onnx::ModelProto proto;
  if (!proto.ParseFromString(bytes)) {
    throw Error(ErrorCode::ModelLoadError, "not a valid ONNX model");
  }
  std::int64_t opset = 13;
  for (const auto& id : proto.opset_import()) {
    if (id.domain().empty() || id.domain() == "ai.onnx") opset = id.version();
  }

  auto impl = std::make_unique<Impl>();
  const auto& graph = proto.graph();
  for (const auto& init : graph.initializer()) impl->initializers.emplace(init.name(), convert_tensor(init));
  for (const auto& vi : graph.input()) {
    if (!impl->initializers.count(vi.name())) impl->inputs.push_back(vi.name());
  }
  for (const auto& vi : graph.output()) impl->outputs.push_back(vi.name());

  const auto& table = op_table();
  for (const auto& np : graph.node()) {
    if (!np.domain().empty() && np.domain() != "ai.onnx") {
      throw Error(ErrorCode::ModelLoadError, "operator domain '" + np.domain() + "' is not supported");
    }
    if (!table.count(np.op_type())) {
      throw Error(ErrorCode::ModelLoadError, "unsupported operator " + np.op_type());
    }
    Node node;
    node.name = np.name();
    node.op = np.op_type();
    node.opset = opset;
    node.inputs.assign(np.input().begin(), np.input().end());
    node.outputs.assign(np.output().begin(), np.output().end());
    for (const auto& ap : np.attribute()) node.attrs.emplace(ap.name(), convert_attribute(ap));
    for (const auto& out : node.outputs) impl->produced.insert(out);
    impl->nodes.push_back(std::move(node));
  }
  for (std::size_t k = 0; k < impl->nodes.size(); ++k) {
    for (const auto& name : impl->nodes[k].inputs) impl->last_use[name] = k;
  }
  return Model(std::move(impl));
}

const std::vector<std::string>& Model::input_names() const { return impl_->inputs; }
const std::vector<std::string>& Model::output_names() const { return impl_->outputs; }

bool Model::has_value(const std::string& name) const {
  return impl_->produced.count(name) > 0 ||
         std::find(impl_->outputs.begin(), impl_->outputs.end(), name) != impl_->outputs.end();
}

std::map<std::string, Tensor> Model::run(const std::map<std::string, Tensor>& feeds,
                                         const std::vector<std::string>& fetch) const {
  for (const auto& name : impl_->inputs) {
    if (!feeds.count(name)) throw Error(ErrorCode::InferenceError, "missing feed for input '" + name + "'");
  }
  const std::set<std::string> wanted(fetch.begin(), fetch.end());
  std::unordered_map<std::string, Tensor> values;
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (name.empty()) return nullptr;
    if (auto it = values.find(name); it != values.end()) return &it->second;
    if (auto it = feeds.find(name); it != feeds.end()) return &it->second;
    if (auto it = impl_->initializers.find(name); it != impl_->initializers.end()) return &it->second;
    throw Error(ErrorCode::InferenceError, "value '" + name + "' is not available");
  };

  const auto& table = op_table();
  std::map<std::string, Tensor> result;
  for (std::size_t k = 0; k < impl_->nodes.size(); ++k) {
    const Node& node = impl_->nodes[k];
    Inputs args;
    args.reserve(node.inputs.size());
    for (const auto& name : node.inputs) args.push_back(lookup(name));
    std::vector<Tensor> outs = table.at(node.op)(node, args);
    for (std::size_t o = 0; o < outs.size() && o < node.outputs.size(); ++o) {
      if (node.outputs[o].empty()) continue;
      if (wanted.count(node.outputs[o])) result[node.outputs[o]] = outs[o];
      values[node.outputs[o]] = std::move(outs[o]);
    }
    for (const auto& name : node.inputs) {
      auto it = impl_->last_use.find(name);
      if (it != impl_->last_use.end() && it->second == k) values.erase(name);
    }
  }
  for (const auto& name : fetch) {
    if (result.count(name)) continue;
    const Tensor* t = lookup(name);
    result[name] = *t;
  }
  return result;
}

}  // namespace glips::onnx
