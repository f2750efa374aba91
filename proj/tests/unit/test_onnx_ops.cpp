#include <gtest/gtest.h>

#include <cmath>

#include "glips/onnx/model.hpp"
#include "onnx/ops.hpp"

using namespace glips::onnx;

namespace {

std::vector<Tensor> run_op(const std::string& op, const std::vector<Tensor>& inputs,
                           std::map<std::string, Attribute> attrs = {}, std::int64_t opset = 17) {
  Node node;
  node.op = op;
  node.opset = opset;
  node.attrs = std::move(attrs);
  Inputs in;
  for (const auto& t : inputs) in.push_back(&t);
  return op_table().at(op)(node, in);
}

Attribute int_attr(std::int64_t v) {
  Attribute a;
  a.i = v;
  return a;
}

Attribute ints_attr(std::vector<std::int64_t> v) {
  Attribute a;
  a.ints = std::move(v);
  return a;
}

}  // namespace

TEST(Ops, EveryListedOperatorIsImplemented) {
  for (const auto& name : supported_operators()) EXPECT_TRUE(op_table().count(name)) << name;
}

TEST(Ops, BroadcastAdd) {
  const auto out = run_op("Add", {Tensor::floats({2, 3}, {1, 2, 3, 4, 5, 6}), Tensor::floats({3}, {10, 20, 30})});
  ASSERT_EQ(out[0].shape, (Shape{2, 3}));
  EXPECT_EQ(out[0].f, (std::vector<float>{11, 22, 33, 14, 25, 36}));
}

TEST(Ops, MatMulBatched) {
  // [2,1,2] x [2,1] -> [2,1,1]
  const auto out = run_op("MatMul", {Tensor::floats({2, 1, 2}, {1, 2, 3, 4}), Tensor::floats({2, 1}, {5, 6})});
  ASSERT_EQ(out[0].shape, (Shape{2, 1, 1}));
  EXPECT_FLOAT_EQ(out[0].f[0], 17.0f);
  EXPECT_FLOAT_EQ(out[0].f[1], 39.0f);
}

TEST(Ops, SoftmaxLastAxis) {
  const auto out = run_op("Softmax", {Tensor::floats({1, 3}, {0.0f, std::log(2.0f), std::log(5.0f)})},
                          {{"axis", int_attr(-1)}});
  EXPECT_NEAR(out[0].f[0], 1.0 / 8.0, 1e-6);
  EXPECT_NEAR(out[0].f[1], 2.0 / 8.0, 1e-6);
  EXPECT_NEAR(out[0].f[2], 5.0 / 8.0, 1e-6);
}

TEST(Ops, Transpose) {
  const auto out =
      run_op("Transpose", {Tensor::floats({2, 3}, {1, 2, 3, 4, 5, 6})}, {{"perm", ints_attr({1, 0})}});
  ASSERT_EQ(out[0].shape, (Shape{3, 2}));
  EXPECT_EQ(out[0].f, (std::vector<float>{1, 4, 2, 5, 3, 6}));
}

TEST(Ops, ReshapeWithInferredDim) {
  const auto out = run_op("Reshape", {Tensor::floats({2, 3}, {1, 2, 3, 4, 5, 6}), Tensor::ints({2}, {3, -1})});
  EXPECT_EQ(out[0].shape, (Shape{3, 2}));
}

TEST(Ops, LayerNormalization) {
  const auto out = run_op("LayerNormalization",
                          {Tensor::floats({1, 4}, {1, 2, 3, 4}), Tensor::floats({4}, {1, 1, 1, 1}),
                           Tensor::floats({4}, {0, 0, 0, 1})},
                          {{"axis", int_attr(-1)}});
  // mean 2.5, var 1.25
  const double s = std::sqrt(1.25 + 1e-5);
  EXPECT_NEAR(out[0].f[0], -1.5 / s, 1e-5);
  EXPECT_NEAR(out[0].f[3], 1.5 / s + 1.0, 1e-5);
}

TEST(Ops, ConvPatchEmbedding) {
  // 1 channel 2x2 input, 2x2 kernel, stride 2 -> single dot product
  Attribute strides = ints_attr({2, 2});
  const auto out = run_op("Conv",
                          {Tensor::floats({1, 1, 2, 2}, {1, 2, 3, 4}), Tensor::floats({1, 1, 2, 2}, {1, 0, 0, 1}),
                           Tensor::floats({1}, {0.5f})},
                          {{"strides", strides}, {"kernel_shape", ints_attr({2, 2})}});
  ASSERT_EQ(out[0].shape, (Shape{1, 1, 1, 1}));
  EXPECT_FLOAT_EQ(out[0].f[0], 5.5f);
}

TEST(Ops, ErfAndGelu) {
  const auto e = run_op("Erf", {Tensor::floats({2}, {0.0f, 1.0f})});
  EXPECT_NEAR(e[0].f[1], 0.8427007929, 1e-6);
  const auto g = run_op("Gelu", {Tensor::floats({1}, {1.0f})}, {}, 20);
  EXPECT_NEAR(g[0].f[0], 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0))), 1e-6);
}

TEST(Ops, SliceGatherConcatShape) {
  const Tensor x = Tensor::floats({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto sl = run_op("Slice", {x, Tensor::ints({1}, {1}), Tensor::ints({1}, {3}), Tensor::ints({1}, {1})});
  EXPECT_EQ(sl[0].shape, (Shape{2, 2}));
  EXPECT_EQ(sl[0].f, (std::vector<float>{2, 3, 5, 6}));

  const auto ga = run_op("Gather", {x, Tensor::ints({}, {1})}, {{"axis", int_attr(0)}});
  EXPECT_EQ(ga[0].shape, (Shape{3}));
  EXPECT_EQ(ga[0].f, (std::vector<float>{4, 5, 6}));

  const auto cat = run_op("Concat", {x, x}, {{"axis", int_attr(0)}});
  EXPECT_EQ(cat[0].shape, (Shape{4, 3}));

  const auto sh = run_op("Shape", {x});
  EXPECT_EQ(sh[0].to_ints(), (std::vector<std::int64_t>{2, 3}));
}

TEST(Ops, ReduceMeanKeepDims) {
  const auto out = run_op("ReduceMean", {Tensor::floats({2, 2}, {1, 2, 3, 4})},
                          {{"axes", ints_attr({1})}, {"keepdims", int_attr(1)}}, 13);
  EXPECT_EQ(out[0].shape, (Shape{2, 1}));
  EXPECT_EQ(out[0].f, (std::vector<float>{1.5f, 3.5f}));
}
