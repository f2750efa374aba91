"""Regenerates the small ViT test models and their onnxruntime reference outputs.

Run from the repo root: python3 tests/oracles/make_test_models.py
Needs torch, transformers, onnx and onnxruntime. The outputs are committed, so
the C++ tests never need Python.
"""
import json
import pathlib

import numpy as np
import onnxruntime as ort
import torch
from transformers import ViTConfig, ViTModel

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "onnx"
SIZE, PATCH, HIDDEN = 64, 16, 32
MEAN = [0.5, 0.5, 0.5]
STD = [0.5, 0.5, 0.5]


class Wrapper(torch.nn.Module):
    def __init__(self, model, all_layers):
        super().__init__()
        self.model = model
        self.all_layers = all_layers

    def forward(self, x):
        o = self.model(pixel_values=x, output_attentions=True)
        att = torch.stack(o.attentions) if self.all_layers else o.attentions[-1]
        return att, o.last_hidden_state


def test_image():
    # Same formula as the C++ tests.
    y, x, c = np.meshgrid(np.arange(SIZE), np.arange(SIZE), np.arange(3), indexing="ij")
    return ((y * 7 + x * 13 + c * 29) % 256).astype(np.float64) / 255.0


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(0)
    cfg = ViTConfig(hidden_size=HIDDEN, num_hidden_layers=2, num_attention_heads=4, intermediate_size=64,
                    image_size=SIZE, patch_size=PATCH, attn_implementation="eager")
    model = ViTModel(cfg, add_pooling_layer=False).eval()

    img = test_image()
    chw = ((img - np.array(MEAN)) / np.array(STD)).astype(np.float32).transpose(2, 0, 1)[None]
    reference = {}
    variants = {"vit_opset14": (14, False), "vit_opset17": (17, False), "vit_layers": (14, True)}
    for name, (opset, all_layers) in variants.items():
        path = OUT / f"{name}.onnx"
        torch.onnx.export(Wrapper(model, all_layers), torch.randn(1, 3, SIZE, SIZE), str(path),
                          input_names=["pixel_values"], output_names=["attention", "hidden_states"],
                          opset_version=opset, dynamo=False)
        manifest = {
            "model_path": path.name,
            "input_name": "pixel_values",
            "attention_output_name": "attention",
            "feature_output_name": "hidden_states",
            "patch_size": PATCH,
            "input_size": SIZE,
            "feature_dim": HIDDEN,
            "channel_mean": MEAN,
            "channel_std": STD,
            "attention_layer": -1,
            "attention_reduction": "mean_over_heads",
        }
        (OUT / f"{name}.json").write_text(json.dumps(manifest, indent=2) + "\n")
        sess = ort.InferenceSession(str(path), providers=["CPUExecutionProvider"])
        att, hidden = sess.run(["attention", "hidden_states"], {"pixel_values": chw})
        if all_layers:
            att = att[-1]
        cls_row = att[0, :, 0, 1:].astype(np.float64).mean(axis=0)
        reference[name] = {
            "attention": cls_row.tolist(),
            "features": hidden[0, 1:, :].astype(np.float64).ravel().tolist(),
        }
    (OUT / "reference_outputs.json").write_text(json.dumps(reference) + "\n")


if __name__ == "__main__":
    main()
