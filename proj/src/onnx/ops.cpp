#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "glips/error.hpp"

namespace glips::onnx {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "," : "") << shape[k];
  os << ']';
  return os.str();
}

Tensor Tensor::floats(Shape shape, std::vector<float> values) {
  Tensor t;
  t.dtype = DType::Float;
  t.shape = std::move(shape);
  t.f = std::move(values);
  return t;
}

Tensor Tensor::ints(Shape shape, std::vector<std::int64_t> values, DType dtype) {
  Tensor t;
  t.dtype = dtype;
  t.shape = std::move(shape);
  t.i = std::move(values);
  return t;
}

std::vector<std::int64_t> Tensor::to_ints() const {
  if (!is_float()) return i;
  std::vector<std::int64_t> out(f.size());
  std::transform(f.begin(), f.end(), out.begin(), [](float v) { return static_cast<std::int64_t>(v); });
  return out;
}

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

[[noreturn]] void fail(const Node& node, const std::string& msg) {
  throw Error(ErrorCode::InferenceError, node.op + " '" + node.name + "': " + msg);
}

const Tensor& in(const Node& node, const Inputs& inputs, std::size_t k) {
  if (k >= inputs.size() || inputs[k] == nullptr) fail(node, "missing input " + std::to_string(k));
  return *inputs[k];
}

const Tensor* opt_in(const Inputs& inputs, std::size_t k) {
  return k < inputs.size() ? inputs[k] : nullptr;
}

std::int64_t normalize_axis(const Node& node, std::int64_t axis, std::size_t rank) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < -r || axis >= r) fail(node, "axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  return axis < 0 ? axis + r : axis;
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) s[k - 1] = s[k] * static_cast<std::size_t>(shape[k]);
  return s;
}

Shape broadcast_shape(const Node& node, const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::int64_t da = k + a.size() >= rank ? a[k + a.size() - rank] : 1;
    const std::int64_t db = k + b.size() >= rank ? b[k + b.size() - rank] : 1;
    if (da != db && da != 1 && db != 1) {
      fail(node, "cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    out[k] = da == 1 ? db : da;
  }
  return out;
}

// Offset into `in` for every element of `out`, under numpy broadcasting.
std::vector<std::size_t> broadcast_offsets(const Shape& out, const Shape& in) {
  const std::size_t n = element_count(out);
  std::vector<std::size_t> offsets(n, 0);
  if (in == out) {
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    return offsets;
  }
  if (element_count(in) == 1) return offsets;

  const std::size_t rank = out.size();
  const auto in_strides = strides_of(in);
  std::vector<std::size_t> step(rank, 0);
  for (std::size_t k = 0; k < rank; ++k) {
    if (k + in.size() >= rank) {
      const std::size_t ik = k + in.size() - rank;
      step[k] = in[ik] == 1 ? 0 : in_strides[ik];
    }
  }
  std::vector<std::int64_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t e = 0; e < n; ++e) {
    offsets[e] = off;
    for (std::size_t k = rank; k-- > 0;) {
      if (++idx[k] < out[k]) {
        off += step[k];
        break;
      }
      off -= step[k] * static_cast<std::size_t>(out[k] - 1);
      idx[k] = 0;
    }
  }
  return offsets;
}

template <class FloatOp, class IntOp>
Tensor arithmetic(const Node& node, const Tensor& a, const Tensor& b, FloatOp fop, IntOp iop) {
  const Shape shape = broadcast_shape(node, a.shape, b.shape);
  const auto oa = broadcast_offsets(shape, a.shape);
  const auto ob = broadcast_offsets(shape, b.shape);
  const std::size_t n = oa.size();
  if (a.is_float() || b.is_float()) {
    std::vector<float> out(n);
    for (std::size_t e = 0; e < n; ++e) {
      out[e] = fop(static_cast<float>(a.get(oa[e])), static_cast<float>(b.get(ob[e])));
    }
    return Tensor::floats(shape, std::move(out));
  }
  std::vector<std::int64_t> out(n);
  for (std::size_t e = 0; e < n; ++e) out[e] = iop(a.i[oa[e]], b.i[ob[e]]);
  return Tensor::ints(shape, std::move(out));
}

template <class Cmp>
Tensor comparison(const Node& node, const Tensor& a, const Tensor& b, Cmp cmp) {
  const Shape shape = broadcast_shape(node, a.shape, b.shape);
  const auto oa = broadcast_offsets(shape, a.shape);
  const auto ob = broadcast_offsets(shape, b.shape);
  std::vector<std::int64_t> out(oa.size());
  for (std::size_t e = 0; e < oa.size(); ++e) out[e] = cmp(a.get(oa[e]), b.get(ob[e])) ? 1 : 0;
  return Tensor::ints(shape, std::move(out), DType::Bool);
}

#define GLIPS_BINARY_OP(Name, expr)                                                   \
  std::vector<Tensor> op_##Name(const Node& node, const Inputs& inputs) {             \
    return {arithmetic(                                                               \
        node, in(node, inputs, 0), in(node, inputs, 1),                               \
        [](float x, float y) { return expr; },                                        \
        [](std::int64_t x, std::int64_t y) { return static_cast<std::int64_t>(expr); })}; \
  }

GLIPS_BINARY_OP(Add, x + y)
GLIPS_BINARY_OP(Sub, x - y)
GLIPS_BINARY_OP(Mul, x * y)
#undef GLIPS_BINARY_OP

std::vector<Tensor> op_Div(const Node& node, const Inputs& inputs) {
  return {arithmetic(
      node, in(node, inputs, 0), in(node, inputs, 1), [](float x, float y) { return x / y; },
      [&node](std::int64_t x, std::int64_t y) {
        if (y == 0) fail(node, "integer division by zero");
        return x / y;
      })};
}

std::vector<Tensor> op_Pow(const Node& node, const Inputs& inputs) {
  const Tensor& base = in(node, inputs, 0);
  const Tensor& exponent = in(node, inputs, 1);
  if (!base.is_float()) fail(node, "integer Pow is not supported");
  auto fpow = [](float x, float y) {
    if (y == 2.0f) return x * x;
    if (y == 0.5f) return std::sqrt(x);
    return std::pow(x, y);
  };
  Tensor out = arithmetic(node, base, exponent, fpow, [](std::int64_t x, std::int64_t) { return x; });
  return {std::move(out)};
}

std::vector<Tensor> op_Max(const Node& node, const Inputs& inputs) {
  Tensor acc = in(node, inputs, 0);
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    acc = arithmetic(node, acc, in(node, inputs, k), [](float x, float y) { return std::max(x, y); },
                     [](std::int64_t x, std::int64_t y) { return std::max(x, y); });
  }
  return {std::move(acc)};
}

std::vector<Tensor> op_Min(const Node& node, const Inputs& inputs) {
  Tensor acc = in(node, inputs, 0);
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    acc = arithmetic(node, acc, in(node, inputs, k), [](float x, float y) { return std::min(x, y); },
                     [](std::int64_t x, std::int64_t y) { return std::min(x, y); });
  }
  return {std::move(acc)};
}

#define GLIPS_COMPARE_OP(Name, expr)                                                  \
  std::vector<Tensor> op_##Name(const Node& node, const Inputs& inputs) {             \
    return {comparison(node, in(node, inputs, 0), in(node, inputs, 1),                \
                       [](double x, double y) { return expr; })};                     \
  }

GLIPS_COMPARE_OP(Equal, x == y)
GLIPS_COMPARE_OP(Less, x < y)
GLIPS_COMPARE_OP(LessOrEqual, x <= y)
GLIPS_COMPARE_OP(Greater, x > y)
GLIPS_COMPARE_OP(GreaterOrEqual, x >= y)
GLIPS_COMPARE_OP(And, (x != 0) && (y != 0))
GLIPS_COMPARE_OP(Or, (x != 0) || (y != 0))
#undef GLIPS_COMPARE_OP

template <class F>
std::vector<Tensor> unary_float(const Node& node, const Inputs& inputs, F fn) {
  const Tensor& x = in(node, inputs, 0);
  if (!x.is_float()) fail(node, "expects a float tensor");
  std::vector<float> out(x.f.size());
  std::transform(x.f.begin(), x.f.end(), out.begin(), fn);
  return {Tensor::floats(x.shape, std::move(out))};
}

std::vector<Tensor> op_Sqrt(const Node& n, const Inputs& i) { return unary_float(n, i, [](float v) { return std::sqrt(v); }); }
std::vector<Tensor> op_Erf(const Node& n, const Inputs& i) { return unary_float(n, i, [](float v) { return std::erf(v); }); }
std::vector<Tensor> op_Exp(const Node& n, const Inputs& i) { return unary_float(n, i, [](float v) { return std::exp(v); }); }
std::vector<Tensor> op_Log(const Node& n, const Inputs& i) { return unary_float(n, i, [](float v) { return std::log(v); }); }
std::vector<Tensor> op_Tanh(const Node& n, const Inputs& i) { return unary_float(n, i, [](float v) { return std::tanh(v); }); }
std::vector<Tensor> op_Relu(const Node& n, const Inputs& i) { return unary_float(n, i, [](float v) { return v > 0.0f ? v : 0.0f; }); }
std::vector<Tensor> op_Reciprocal(const Node& n, const Inputs& i) { return unary_float(n, i, [](float v) { return 1.0f / v; }); }
std::vector<Tensor> op_Sigmoid(const Node& n, const Inputs& i) {
  return unary_float(n, i, [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
}

std::vector<Tensor> op_Gelu(const Node& node, const Inputs& inputs) {
  const Attribute* approx = node.attr("approximate");
  if (approx && approx->s && *approx->s == "tanh") {
    return unary_float(node, inputs, [](float v) {
      const float k = 0.7978845608028654f;  // sqrt(2/pi)
      return 0.5f * v * (1.0f + std::tanh(k * (v + 0.044715f * v * v * v)));
    });
  }
  return unary_float(node, inputs, [](float v) { return 0.5f * v * (1.0f + std::erf(v * 0.7071067811865476f)); });
}

std::vector<Tensor> op_Neg(const Node& node, const Inputs& inputs) {
  Tensor x = in(node, inputs, 0);
  for (float& v : x.f) v = -v;
  for (std::int64_t& v : x.i) v = -v;
  return {std::move(x)};
}

std::vector<Tensor> op_Abs(const Node& node, const Inputs& inputs) {
  Tensor x = in(node, inputs, 0);
  for (float& v : x.f) v = std::fabs(v);
  for (std::int64_t& v : x.i) v = v < 0 ? -v : v;
  return {std::move(x)};
}

std::vector<Tensor> op_Not(const Node& node, const Inputs& inputs) {
  Tensor x = in(node, inputs, 0);
  if (x.is_float()) fail(node, "expects a boolean tensor");
  for (std::int64_t& v : x.i) v = v ? 0 : 1;
  x.dtype = DType::Bool;
  return {std::move(x)};
}

std::vector<Tensor> op_Identity(const Node& node, const Inputs& inputs) {
  return {in(node, inputs, 0)};
}

std::vector<Tensor> op_Where(const Node& node, const Inputs& inputs) {
  const Tensor& cond = in(node, inputs, 0);
  const Tensor& x = in(node, inputs, 1);
  const Tensor& y = in(node, inputs, 2);
  if (x.is_float() != y.is_float()) fail(node, "branch dtypes differ");
  const Shape shape = broadcast_shape(node, broadcast_shape(node, cond.shape, x.shape), y.shape);
  const auto oc = broadcast_offsets(shape, cond.shape);
  const auto ox = broadcast_offsets(shape, x.shape);
  const auto oy = broadcast_offsets(shape, y.shape);
  const std::size_t n = oc.size();
  if (x.is_float()) {
    std::vector<float> out(n);
    for (std::size_t e = 0; e < n; ++e) out[e] = cond.get(oc[e]) != 0 ? x.f[ox[e]] : y.f[oy[e]];
    return {Tensor::floats(shape, std::move(out))};
  }
  std::vector<std::int64_t> out(n);
  for (std::size_t e = 0; e < n; ++e) out[e] = cond.get(oc[e]) != 0 ? x.i[ox[e]] : y.i[oy[e]];
  return {Tensor::ints(shape, std::move(out), x.dtype)};
}

std::vector<Tensor> op_Cast(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  const std::int64_t to = node.attr_int("to", 1);
  const std::size_t n = x.size();
  switch (to) {
    case 1:    // float
    case 10:   // float16
    case 11: {  // double
      std::vector<float> out(n);
      for (std::size_t e = 0; e < n; ++e) out[e] = static_cast<float>(x.get(e));
      return {Tensor::floats(x.shape, std::move(out))};
    }
    case 9: {  // bool
      std::vector<std::int64_t> out(n);
      for (std::size_t e = 0; e < n; ++e) out[e] = x.get(e) != 0 ? 1 : 0;
      return {Tensor::ints(x.shape, std::move(out), DType::Bool)};
    }
    case 2: case 3: case 4: case 5: case 6: case 7: case 12: case 13: {
      std::vector<std::int64_t> out(n);
      for (std::size_t e = 0; e < n; ++e) out[e] = x.get_int(e);
      return {Tensor::ints(x.shape, std::move(out))};
    }
    default:
      fail(node, "unsupported cast target " + std::to_string(to));
  }
}

std::vector<Tensor> op_MatMul(const Node& node, const Inputs& inputs) {
  Tensor a = in(node, inputs, 0);
  Tensor b = in(node, inputs, 1);
  if (!a.is_float() || !b.is_float()) fail(node, "expects float tensors");
  const bool a_vec = a.rank() == 1;
  const bool b_vec = b.rank() == 1;
  if (a_vec) a.shape.insert(a.shape.begin(), 1);
  if (b_vec) b.shape.push_back(1);
  if (a.rank() < 2 || b.rank() < 2) fail(node, "rank too small");

  const std::int64_t m = a.shape[a.rank() - 2];
  const std::int64_t k = a.shape[a.rank() - 1];
  const std::int64_t n = b.shape[b.rank() - 1];
  if (b.shape[b.rank() - 2] != k) {
    fail(node, "inner dimensions differ: " + shape_string(a.shape) + " x " + shape_string(b.shape));
  }
  const Shape a_batch(a.shape.begin(), a.shape.end() - 2);
  const Shape b_batch(b.shape.begin(), b.shape.end() - 2);
  const Shape batch = broadcast_shape(node, a_batch, b_batch);
  const auto oa = broadcast_offsets(batch, a_batch);
  const auto ob = broadcast_offsets(batch, b_batch);

  std::vector<float> out(oa.size() * static_cast<std::size_t>(m * n));
  for (std::size_t e = 0; e < oa.size(); ++e) {
    ConstRowMap ma(a.f.data() + oa[e] * static_cast<std::size_t>(m * k), m, k);
    ConstRowMap mb(b.f.data() + ob[e] * static_cast<std::size_t>(k * n), k, n);
    RowMap mc(out.data() + e * static_cast<std::size_t>(m * n), m, n);
    mc.noalias() = ma * mb;
  }
  Shape shape = batch;
  if (!a_vec) shape.push_back(m);
  if (!b_vec) shape.push_back(n);
  return {Tensor::floats(std::move(shape), std::move(out))};
}

std::vector<Tensor> op_Gemm(const Node& node, const Inputs& inputs) {
  const Tensor& a = in(node, inputs, 0);
  const Tensor& b = in(node, inputs, 1);
  const Tensor* c = opt_in(inputs, 2);
  if (a.rank() != 2 || b.rank() != 2) fail(node, "expects rank-2 operands");
  const float alpha = node.attr_float("alpha", 1.0f);
  const float beta = node.attr_float("beta", 1.0f);
  const bool ta = node.attr_int("transA", 0) != 0;
  const bool tb = node.attr_int("transB", 0) != 0;

  ConstRowMap ma(a.f.data(), a.shape[0], a.shape[1]);
  ConstRowMap mb(b.f.data(), b.shape[0], b.shape[1]);
  const std::int64_t m = ta ? a.shape[1] : a.shape[0];
  const std::int64_t ka = ta ? a.shape[0] : a.shape[1];
  const std::int64_t kb = tb ? b.shape[1] : b.shape[0];
  const std::int64_t n = tb ? b.shape[0] : b.shape[1];
  if (ka != kb) fail(node, "inner dimensions differ");

  std::vector<float> out(static_cast<std::size_t>(m * n), 0.0f);
  RowMap mc(out.data(), m, n);
  if (ta && tb) mc.noalias() = ma.transpose() * mb.transpose();
  else if (ta) mc.noalias() = ma.transpose() * mb;
  else if (tb) mc.noalias() = ma * mb.transpose();
  else mc.noalias() = ma * mb;
  if (alpha != 1.0f) mc *= alpha;

  Shape shape{m, n};
  if (c != nullptr && c->size() > 0) {
    const auto oc = broadcast_offsets(shape, c->shape);
    for (std::size_t e = 0; e < out.size(); ++e) out[e] += beta * static_cast<float>(c->get(oc[e]));
  }
  return {Tensor::floats(std::move(shape), std::move(out))};
}

std::vector<Tensor> op_Conv(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  const Tensor& w = in(node, inputs, 1);
  const Tensor* bias = opt_in(inputs, 2);
  if (x.rank() != 4 || w.rank() != 4) fail(node, "only 2-D convolution is supported");
  const Attribute* auto_pad = node.attr("auto_pad");
  if (auto_pad && auto_pad->s && *auto_pad->s != "NOTSET") fail(node, "auto_pad is not supported");

  const auto strides = node.attr_ints("strides").value_or(std::vector<std::int64_t>{1, 1});
  const auto pads = node.attr_ints("pads").value_or(std::vector<std::int64_t>{0, 0, 0, 0});
  const auto dil = node.attr_ints("dilations").value_or(std::vector<std::int64_t>{1, 1});
  const std::int64_t group = node.attr_int("group", 1);
  if (strides.size() != 2 || pads.size() != 4 || dil.size() != 2) fail(node, "malformed attributes");

  const std::int64_t batch = x.shape[0], cin = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const std::int64_t cout = w.shape[0], cg = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  if (cg * group != cin || cout % group != 0) fail(node, "channel/group mismatch");
  const std::int64_t oh = (h + pads[0] + pads[2] - dil[0] * (kh - 1) - 1) / strides[0] + 1;
  const std::int64_t ow = (wd + pads[1] + pads[3] - dil[1] * (kw - 1) - 1) / strides[1] + 1;
  if (oh <= 0 || ow <= 0) fail(node, "empty output");

  const std::int64_t og = cout / group;
  const std::int64_t rows = cg * kh * kw;
  std::vector<float> out(static_cast<std::size_t>(batch * cout * oh * ow));
  std::vector<float> cols(static_cast<std::size_t>(rows * oh * ow));
  for (std::int64_t nb = 0; nb < batch; ++nb) {
    for (std::int64_t g = 0; g < group; ++g) {
      // im2col for this group's input channels
      for (std::int64_t c = 0; c < cg; ++c) {
        const float* plane = x.f.data() + ((nb * cin) + g * cg + c) * h * wd;
        for (std::int64_t ky = 0; ky < kh; ++ky) {
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            float* dst = cols.data() + ((c * kh + ky) * kw + kx) * oh * ow;
            for (std::int64_t oy = 0; oy < oh; ++oy) {
              const std::int64_t iy = oy * strides[0] - pads[0] + ky * dil[0];
              for (std::int64_t ox = 0; ox < ow; ++ox) {
                const std::int64_t ix = ox * strides[1] - pads[1] + kx * dil[1];
                dst[oy * ow + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < wd) ? plane[iy * wd + ix] : 0.0f;
              }
            }
          }
        }
      }
      ConstRowMap wm(w.f.data() + g * og * rows, og, rows);
      ConstRowMap cm(cols.data(), rows, oh * ow);
      RowMap om(out.data() + ((nb * cout) + g * og) * oh * ow, og, oh * ow);
      om.noalias() = wm * cm;
    }
    if (bias != nullptr) {
      for (std::int64_t c = 0; c < cout; ++c) {
        float* dst = out.data() + (nb * cout + c) * oh * ow;
        const float b = bias->f[static_cast<std::size_t>(c)];
        for (std::int64_t e = 0; e < oh * ow; ++e) dst[e] += b;
      }
    }
  }
  return {Tensor::floats({batch, cout, oh, ow}, std::move(out))};
}

std::vector<Tensor> op_Reshape(const Node& node, const Inputs& inputs) {
  Tensor x = in(node, inputs, 0);
  const auto target = in(node, inputs, 1).to_ints();
  const bool allow_zero = node.attr_int("allowzero", 0) != 0;
  Shape shape(target.size());
  std::int64_t known = 1;
  int infer_at = -1;
  for (std::size_t k = 0; k < target.size(); ++k) {
    std::int64_t d = target[k];
    if (d == 0 && !allow_zero) {
      if (k >= x.shape.size()) fail(node, "0 refers to a missing input dimension");
      d = x.shape[k];
    }
    if (d == -1) {
      if (infer_at >= 0) fail(node, "more than one -1 in target shape");
      infer_at = static_cast<int>(k);
      continue;
    }
    shape[k] = d;
    known *= d;
  }
  const auto total = static_cast<std::int64_t>(x.size());
  if (infer_at >= 0) {
    if (known == 0 || total % known != 0) fail(node, "cannot infer dimension");
    shape[static_cast<std::size_t>(infer_at)] = total / known;
  }
  if (static_cast<std::int64_t>(element_count(shape)) != total) {
    fail(node, "cannot reshape " + shape_string(x.shape) + " to " + shape_string(shape));
  }
  x.shape = std::move(shape);
  return {std::move(x)};
}

std::vector<Tensor> op_Flatten(const Node& node, const Inputs& inputs) {
  Tensor x = in(node, inputs, 0);
  std::int64_t axis = node.attr_int("axis", 1);
  if (axis < 0) axis += static_cast<std::int64_t>(x.rank());
  std::int64_t outer = 1;
  for (std::int64_t k = 0; k < axis; ++k) outer *= x.shape[static_cast<std::size_t>(k)];
  const auto total = static_cast<std::int64_t>(x.size());
  x.shape = {outer, outer == 0 ? 0 : total / outer};
  return {std::move(x)};
}

template <class T>
std::vector<T> permute(const std::vector<T>& src, const Shape& shape, const std::vector<std::int64_t>& perm,
                       Shape& out_shape) {
  const std::size_t rank = shape.size();
  out_shape.resize(rank);
  for (std::size_t k = 0; k < rank; ++k) out_shape[k] = shape[static_cast<std::size_t>(perm[k])];
  const auto in_strides = strides_of(shape);
  std::vector<std::size_t> step(rank);
  for (std::size_t k = 0; k < rank; ++k) step[k] = in_strides[static_cast<std::size_t>(perm[k])];

  std::vector<T> out(src.size());
  std::vector<std::int64_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t e = 0; e < out.size(); ++e) {
    out[e] = src[off];
    for (std::size_t k = rank; k-- > 0;) {
      if (++idx[k] < out_shape[k]) {
        off += step[k];
        break;
      }
      off -= step[k] * static_cast<std::size_t>(out_shape[k] - 1);
      idx[k] = 0;
    }
  }
  return out;
}

std::vector<Tensor> op_Transpose(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  std::vector<std::int64_t> perm(x.rank());
  std::iota(perm.rbegin(), perm.rend(), std::int64_t{0});
  if (auto p = node.attr_ints("perm")) perm = *p;
  if (perm.size() != x.rank()) fail(node, "perm length does not match rank");
  Tensor out;
  out.dtype = x.dtype;
  if (x.is_float()) out.f = permute(x.f, x.shape, perm, out.shape);
  else out.i = permute(x.i, x.shape, perm, out.shape);
  return {std::move(out)};
}

std::vector<Tensor> op_Concat(const Node& node, const Inputs& inputs) {
  const Tensor& first = in(node, inputs, 0);
  const std::int64_t axis = normalize_axis(node, node.attr_int("axis", 0), first.rank());
  Shape shape = first.shape;
  shape[static_cast<std::size_t>(axis)] = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& t = in(node, inputs, k);
    if (t.rank() != first.rank() || t.is_float() != first.is_float()) fail(node, "incompatible inputs");
    shape[static_cast<std::size_t>(axis)] += t.shape[static_cast<std::size_t>(axis)];
  }
  std::size_t outer = 1;
  for (std::int64_t k = 0; k < axis; ++k) outer *= static_cast<std::size_t>(shape[static_cast<std::size_t>(k)]);

  Tensor out;
  out.dtype = first.dtype;
  out.shape = shape;
  if (first.is_float()) out.f.reserve(element_count(shape));
  else out.i.reserve(element_count(shape));
  for (std::size_t o = 0; o < outer; ++o) {
    for (const Tensor* t : inputs) {
      const std::size_t chunk = outer == 0 ? 0 : t->size() / outer;
      if (first.is_float()) out.f.insert(out.f.end(), t->f.begin() + o * chunk, t->f.begin() + (o + 1) * chunk);
      else out.i.insert(out.i.end(), t->i.begin() + o * chunk, t->i.begin() + (o + 1) * chunk);
    }
  }
  return {std::move(out)};
}

// Copies the slab [begin, end) along `axis`.
Tensor take_range(const Tensor& x, std::size_t axis, std::int64_t begin, std::int64_t end) {
  std::size_t outer = 1;
  for (std::size_t k = 0; k < axis; ++k) outer *= static_cast<std::size_t>(x.shape[k]);
  std::size_t inner = 1;
  for (std::size_t k = axis + 1; k < x.rank(); ++k) inner *= static_cast<std::size_t>(x.shape[k]);
  const auto dim = static_cast<std::size_t>(x.shape[axis]);
  Tensor out;
  out.dtype = x.dtype;
  out.shape = x.shape;
  out.shape[axis] = end - begin;
  const std::size_t len = static_cast<std::size_t>(end - begin) * inner;
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t src = (o * dim + static_cast<std::size_t>(begin)) * inner;
    if (x.is_float()) out.f.insert(out.f.end(), x.f.begin() + src, x.f.begin() + src + len);
    else out.i.insert(out.i.end(), x.i.begin() + src, x.i.begin() + src + len);
  }
  return out;
}

std::vector<Tensor> op_Split(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.attr_int("axis", 0), x.rank()));
  const std::int64_t dim = x.shape[axis];
  std::vector<std::int64_t> sizes;
  if (const Tensor* s = opt_in(inputs, 1); s != nullptr) sizes = s->to_ints();
  else if (auto attr = node.attr_ints("split"); attr && !attr->empty()) sizes = *attr;
  else {
    const auto parts = static_cast<std::int64_t>(node.attr_int("num_outputs", static_cast<std::int64_t>(node.outputs.size())));
    const std::int64_t each = (dim + parts - 1) / parts;
    for (std::int64_t p = 0, left = dim; p < parts; ++p, left -= each) sizes.push_back(std::min(each, left));
  }
  if (std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0}) != dim) fail(node, "split sizes do not cover the axis");
  std::vector<Tensor> out;
  std::int64_t begin = 0;
  for (std::int64_t s : sizes) {
    out.push_back(take_range(x, axis, begin, begin + s));
    begin += s;
  }
  return out;
}

std::vector<std::int64_t> axes_from(const Node& node, const Inputs& inputs, std::size_t slot) {
  if (const Tensor* t = opt_in(inputs, slot); t != nullptr) return t->to_ints();
  return node.attr_ints("axes").value_or(std::vector<std::int64_t>{});
}

std::vector<Tensor> op_Squeeze(const Node& node, const Inputs& inputs) {
  Tensor x = in(node, inputs, 0);
  auto axes = axes_from(node, inputs, 1);
  Shape shape;
  if (axes.empty()) {
    for (auto d : x.shape) if (d != 1) shape.push_back(d);
  } else {
    for (auto& a : axes) a = normalize_axis(node, a, x.rank());
    for (std::size_t k = 0; k < x.rank(); ++k) {
      const bool drop = std::find(axes.begin(), axes.end(), static_cast<std::int64_t>(k)) != axes.end();
      if (drop && x.shape[k] != 1) fail(node, "cannot squeeze a non-unit dimension");
      if (!drop) shape.push_back(x.shape[k]);
    }
  }
  x.shape = std::move(shape);
  return {std::move(x)};
}

std::vector<Tensor> op_Unsqueeze(const Node& node, const Inputs& inputs) {
  Tensor x = in(node, inputs, 0);
  auto axes = axes_from(node, inputs, 1);
  const std::size_t rank = x.rank() + axes.size();
  for (auto& a : axes) a = normalize_axis(node, a, rank);
  std::sort(axes.begin(), axes.end());
  Shape shape;
  std::size_t src = 0;
  for (std::size_t k = 0; k < rank; ++k) {
    if (std::binary_search(axes.begin(), axes.end(), static_cast<std::int64_t>(k))) shape.push_back(1);
    else shape.push_back(x.shape[src++]);
  }
  x.shape = std::move(shape);
  return {std::move(x)};
}

std::vector<Tensor> op_Slice(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  std::vector<std::int64_t> starts, ends, axes, steps;
  if (node.opset < 10) {
    starts = node.attr_ints("starts").value_or(std::vector<std::int64_t>{});
    ends = node.attr_ints("ends").value_or(std::vector<std::int64_t>{});
    axes = node.attr_ints("axes").value_or(std::vector<std::int64_t>{});
  } else {
    starts = in(node, inputs, 1).to_ints();
    ends = in(node, inputs, 2).to_ints();
    if (const Tensor* a = opt_in(inputs, 3)) axes = a->to_ints();
    if (const Tensor* s = opt_in(inputs, 4)) steps = s->to_ints();
  }
  if (axes.empty()) {
    axes.resize(starts.size());
    std::iota(axes.begin(), axes.end(), std::int64_t{0});
  }
  if (steps.empty()) steps.assign(starts.size(), 1);
  if (ends.size() != starts.size() || axes.size() != starts.size() || steps.size() != starts.size()) {
    fail(node, "starts/ends/axes/steps lengths differ");
  }

  const std::size_t rank = x.rank();
  std::vector<std::int64_t> begin(rank, 0), step(rank, 1);
  Shape shape = x.shape;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const auto axis = static_cast<std::size_t>(normalize_axis(node, axes[k], rank));
    const std::int64_t dim = x.shape[axis];
    const std::int64_t st = steps[k];
    if (st == 0) fail(node, "zero step");
    std::int64_t s = starts[k] < 0 ? starts[k] + dim : starts[k];
    std::int64_t e = ends[k] < 0 ? ends[k] + dim : ends[k];
    if (st > 0) {
      s = std::clamp<std::int64_t>(s, 0, dim);
      e = std::clamp<std::int64_t>(e, 0, dim);
      shape[axis] = e > s ? (e - s + st - 1) / st : 0;
    } else {
      s = std::clamp<std::int64_t>(s, 0, dim - 1);
      e = std::clamp<std::int64_t>(e, -1, dim - 1);
      shape[axis] = s > e ? (s - e - st - 1) / (-st) : 0;
    }
    begin[axis] = s;
    step[axis] = st;
  }

  const auto strides = strides_of(x.shape);
  const std::size_t n = element_count(shape);
  Tensor out;
  out.dtype = x.dtype;
  out.shape = shape;
  if (x.is_float()) out.f.resize(n);
  else out.i.resize(n);
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t e = 0; e < n; ++e) {
    std::int64_t off = 0;
    for (std::size_t k = 0; k < rank; ++k) off += (begin[k] + idx[k] * step[k]) * static_cast<std::int64_t>(strides[k]);
    if (x.is_float()) out.f[e] = x.f[static_cast<std::size_t>(off)];
    else out.i[e] = x.i[static_cast<std::size_t>(off)];
    for (std::size_t k = rank; k-- > 0;) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
  return {std::move(out)};
}

std::vector<Tensor> op_Gather(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  const Tensor& indices = in(node, inputs, 1);
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.attr_int("axis", 0), x.rank()));
  const std::int64_t dim = x.shape[axis];
  std::size_t outer = 1, inner = 1;
  for (std::size_t k = 0; k < axis; ++k) outer *= static_cast<std::size_t>(x.shape[k]);
  for (std::size_t k = axis + 1; k < x.rank(); ++k) inner *= static_cast<std::size_t>(x.shape[k]);

  Shape shape(x.shape.begin(), x.shape.begin() + static_cast<std::ptrdiff_t>(axis));
  shape.insert(shape.end(), indices.shape.begin(), indices.shape.end());
  shape.insert(shape.end(), x.shape.begin() + static_cast<std::ptrdiff_t>(axis) + 1, x.shape.end());

  const auto idx = indices.to_ints();
  Tensor out;
  out.dtype = x.dtype;
  out.shape = shape;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::int64_t j : idx) {
      if (j < 0) j += dim;
      if (j < 0 || j >= dim) fail(node, "index out of range");
      const std::size_t src = (o * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)) * inner;
      if (x.is_float()) out.f.insert(out.f.end(), x.f.begin() + src, x.f.begin() + src + inner);
      else out.i.insert(out.i.end(), x.i.begin() + src, x.i.begin() + src + inner);
    }
  }
  return {std::move(out)};
}

std::vector<Tensor> op_Shape(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  const auto rank = static_cast<std::int64_t>(x.rank());
  std::int64_t start = node.attr_int("start", 0);
  std::int64_t end = node.attr_int("end", rank);
  if (start < 0) start += rank;
  if (end < 0) end += rank;
  start = std::clamp<std::int64_t>(start, 0, rank);
  end = std::clamp<std::int64_t>(end, 0, rank);
  std::vector<std::int64_t> dims(x.shape.begin() + start, x.shape.begin() + std::max(start, end));
  const auto len = static_cast<std::int64_t>(dims.size());
  return {Tensor::ints({len}, std::move(dims))};
}

std::vector<Tensor> op_Constant(const Node& node, const Inputs&) {
  if (const Attribute* a = node.attr("value"); a && a->t) return {*a->t};
  if (const Attribute* a = node.attr("value_float"); a && a->f) return {Tensor::floats({}, {*a->f})};
  if (const Attribute* a = node.attr("value_floats")) {
    return {Tensor::floats({static_cast<std::int64_t>(a->floats.size())}, a->floats)};
  }
  if (const Attribute* a = node.attr("value_int"); a && a->i) return {Tensor::ints({}, {*a->i})};
  if (const Attribute* a = node.attr("value_ints")) {
    return {Tensor::ints({static_cast<std::int64_t>(a->ints.size())}, a->ints)};
  }
  fail(node, "no supported value attribute");
}

std::vector<Tensor> op_ConstantOfShape(const Node& node, const Inputs& inputs) {
  const Shape shape = in(node, inputs, 0).to_ints();
  const std::size_t n = element_count(shape);
  if (const Attribute* a = node.attr("value"); a && a->t && a->t->size() == 1) {
    const Tensor& v = *a->t;
    if (v.is_float()) return {Tensor::floats(shape, std::vector<float>(n, v.f[0]))};
    return {Tensor::ints(shape, std::vector<std::int64_t>(n, v.i[0]), v.dtype)};
  }
  return {Tensor::floats(shape, std::vector<float>(n, 0.0f))};
}

std::vector<Tensor> op_Expand(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  const Shape target = in(node, inputs, 1).to_ints();
  const Shape shape = broadcast_shape(node, x.shape, target);
  const auto off = broadcast_offsets(shape, x.shape);
  Tensor out;
  out.dtype = x.dtype;
  out.shape = shape;
  if (x.is_float()) {
    out.f.resize(off.size());
    for (std::size_t e = 0; e < off.size(); ++e) out.f[e] = x.f[off[e]];
  } else {
    out.i.resize(off.size());
    for (std::size_t e = 0; e < off.size(); ++e) out.i[e] = x.i[off[e]];
  }
  return {std::move(out)};
}

std::vector<Tensor> op_Range(const Node& node, const Inputs& inputs) {
  const Tensor& start = in(node, inputs, 0);
  const Tensor& limit = in(node, inputs, 1);
  const Tensor& delta = in(node, inputs, 2);
  const double s = start.get(0), l = limit.get(0), d = delta.get(0);
  if (d == 0.0) fail(node, "zero delta");
  const auto count = static_cast<std::int64_t>(std::max(0.0, std::ceil((l - s) / d)));
  if (start.is_float()) {
    std::vector<float> v(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) v[static_cast<std::size_t>(k)] = static_cast<float>(s + static_cast<double>(k) * d);
    return {Tensor::floats({count}, std::move(v))};
  }
  std::vector<std::int64_t> v(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) v[static_cast<std::size_t>(k)] = start.i[0] + k * delta.i[0];
  return {Tensor::ints({count}, std::move(v))};
}

template <bool Mean>
std::vector<Tensor> reduce(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  auto axes = node.opset >= 18 || (std::string_view(node.op) == "ReduceSum" && node.opset >= 13)
                  ? axes_from(node, inputs, 1)
                  : node.attr_ints("axes").value_or(std::vector<std::int64_t>{});
  const bool keep = node.attr_int("keepdims", 1) != 0;
  if (axes.empty()) {
    if (node.attr_int("noop_with_empty_axes", 0) != 0) return {x};
    axes.resize(x.rank());
    std::iota(axes.begin(), axes.end(), std::int64_t{0});
  }
  std::vector<bool> reduced(x.rank(), false);
  for (auto a : axes) reduced[static_cast<std::size_t>(normalize_axis(node, a, x.rank()))] = true;

  Shape kept_shape = x.shape;
  std::size_t group = 1;
  for (std::size_t k = 0; k < x.rank(); ++k) {
    if (reduced[k]) {
      group *= static_cast<std::size_t>(x.shape[k]);
      kept_shape[k] = 1;
    }
  }
  const auto off = broadcast_offsets(x.shape, kept_shape);
  std::vector<double> acc(element_count(kept_shape), 0.0);
  for (std::size_t e = 0; e < off.size(); ++e) acc[off[e]] += x.get(e);

  std::vector<float> out(acc.size());
  for (std::size_t e = 0; e < acc.size(); ++e) {
    out[e] = static_cast<float>(Mean ? acc[e] / static_cast<double>(group) : acc[e]);
  }
  Shape shape;
  if (keep) shape = kept_shape;
  else for (std::size_t k = 0; k < x.rank(); ++k) if (!reduced[k]) shape.push_back(x.shape[k]);
  return {Tensor::floats(std::move(shape), std::move(out))};
}

std::vector<Tensor> op_ReduceMean(const Node& n, const Inputs& i) { return reduce<true>(n, i); }
std::vector<Tensor> op_ReduceSum(const Node& n, const Inputs& i) { return reduce<false>(n, i); }

std::vector<Tensor> op_Softmax(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  if (!x.is_float()) fail(node, "expects a float tensor");
  const std::int64_t default_axis = node.opset >= 13 ? -1 : 1;
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.attr_int("axis", default_axis), x.rank()));
  std::size_t outer = 1, dim = 1, inner = 1;
  if (node.opset >= 13) {
    for (std::size_t k = 0; k < axis; ++k) outer *= static_cast<std::size_t>(x.shape[k]);
    dim = static_cast<std::size_t>(x.shape[axis]);
    for (std::size_t k = axis + 1; k < x.rank(); ++k) inner *= static_cast<std::size_t>(x.shape[k]);
  } else {
    // Older opsets flatten everything from `axis` onwards into one row.
    for (std::size_t k = 0; k < axis; ++k) outer *= static_cast<std::size_t>(x.shape[k]);
    for (std::size_t k = axis; k < x.rank(); ++k) dim *= static_cast<std::size_t>(x.shape[k]);
  }
  std::vector<float> out(x.f.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t base = o * dim * inner + j;
      float mx = -std::numeric_limits<float>::infinity();
      for (std::size_t d = 0; d < dim; ++d) mx = std::max(mx, x.f[base + d * inner]);
      double sum = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const float e = std::exp(x.f[base + d * inner] - mx);
        out[base + d * inner] = e;
        sum += e;
      }
      for (std::size_t d = 0; d < dim; ++d) out[base + d * inner] = static_cast<float>(out[base + d * inner] / sum);
    }
  }
  return {Tensor::floats(x.shape, std::move(out))};
}

std::vector<Tensor> op_LayerNormalization(const Node& node, const Inputs& inputs) {
  const Tensor& x = in(node, inputs, 0);
  const Tensor& scale = in(node, inputs, 1);
  const Tensor* bias = opt_in(inputs, 2);
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.attr_int("axis", -1), x.rank()));
  const double eps = node.attr_float("epsilon", 1e-5f);
  std::size_t outer = 1, row = 1;
  for (std::size_t k = 0; k < axis; ++k) outer *= static_cast<std::size_t>(x.shape[k]);
  for (std::size_t k = axis; k < x.rank(); ++k) row *= static_cast<std::size_t>(x.shape[k]);
  if (scale.size() != row || (bias && bias->size() != row)) fail(node, "scale/bias length mismatch");

  std::vector<float> out(x.f.size());
  for (std::size_t o = 0; o < outer; ++o) {
    const float* src = x.f.data() + o * row;
    double mean = 0.0;
    for (std::size_t k = 0; k < row; ++k) mean += src[k];
    mean /= static_cast<double>(row);
    double var = 0.0;
    for (std::size_t k = 0; k < row; ++k) var += (src[k] - mean) * (src[k] - mean);
    var /= static_cast<double>(row);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t k = 0; k < row; ++k) {
      double v = (src[k] - mean) * inv * scale.f[k];
      if (bias) v += bias->f[k];
      out[o * row + k] = static_cast<float>(v);
    }
  }
  return {Tensor::floats(x.shape, std::move(out))};
}

}  // namespace

const std::map<std::string, OpFn>& op_table() {
  static const std::map<std::string, OpFn> table = {
      {"Abs", op_Abs},
      {"Add", op_Add},
      {"And", op_And},
      {"Cast", op_Cast},
      {"Concat", op_Concat},
      {"Constant", op_Constant},
      {"ConstantOfShape", op_ConstantOfShape},
      {"Conv", op_Conv},
      {"Div", op_Div},
      {"Equal", op_Equal},
      {"Erf", op_Erf},
      {"Exp", op_Exp},
      {"Expand", op_Expand},
      {"Flatten", op_Flatten},
      {"Gather", op_Gather},
      {"Gelu", op_Gelu},
      {"Gemm", op_Gemm},
      {"Greater", op_Greater},
      {"GreaterOrEqual", op_GreaterOrEqual},
      {"Identity", op_Identity},
      {"LayerNormalization", op_LayerNormalization},
      {"Less", op_Less},
      {"LessOrEqual", op_LessOrEqual},
      {"Log", op_Log},
      {"MatMul", op_MatMul},
      {"Max", op_Max},
      {"Min", op_Min},
      {"Mul", op_Mul},
      {"Neg", op_Neg},
      {"Not", op_Not},
      {"Or", op_Or},
      {"Pow", op_Pow},
      {"Range", op_Range},
      {"Reciprocal", op_Reciprocal},
      {"ReduceMean", op_ReduceMean},
      {"ReduceSum", op_ReduceSum},
      {"Relu", op_Relu},
      {"Reshape", op_Reshape},
      {"Shape", op_Shape},
      {"Sigmoid", op_Sigmoid},
      {"Slice", op_Slice},
      {"Softmax", op_Softmax},
      {"Split", op_Split},
      {"Sqrt", op_Sqrt},
      {"Squeeze", op_Squeeze},
      {"Sub", op_Sub},
      {"Tanh", op_Tanh},
      {"Transpose", op_Transpose},
      {"Unsqueeze", op_Unsqueeze},
      {"Where", op_Where},
  };
  return table;
}

}  // namespace glips::onnx
