#pragma once

#include "glips/backend.hpp"
#include "glips/onnx/model.hpp"

namespace glips {

// CLS-to-patch attention from a raw attention output. Accepted layouts:
// [T,T], [H,T,T], [1,H,T,T], [L,1,H,T,T] (layer picked by `layer`, negative
// counts from the end), or pre-reduced [N] / [1,N] with N = patches or
// patches + 1. T must be patches + 1. Throws ShapeMismatch.
AttentionMap reduce_attention(const onnx::Tensor& attention, std::size_t patch_count, int layer);

// Patch tokens from [1,T,D] or [T,D] hidden states, dropping the CLS token
// when T = patches + 1. Throws ShapeMismatch / InferenceError (non-finite).
FeatureSet extract_patch_tokens(const onnx::Tensor& hidden, std::size_t patch_count,
                                std::size_t feature_dim);

class OnnxBackend final : public Backend {
 public:
  OnnxBackend(BackendManifest manifest, onnx::Model model);

  BackendOutput analyze(const ImageTensor& img) const override;

 private:
  onnx::Model model_;
};

}  // namespace glips
