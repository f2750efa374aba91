"""Frozen SSIM / MS-SSIM values from pytorch_msssim (float64), used as an
independent reference by the C++ baseline tests.

Run from the repo root: python3 tests/oracles/ssim_reference.py
"""
import json
import pathlib

import numpy as np
import torch
from pytorch_msssim import ms_ssim, ssim

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "ssim_reference.json"


def pair(h, w):
    # Same formulas as tests/support/test_support.hpp (pattern_pair).
    y, x = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    a = 0.5 + 0.4 * np.sin(0.07 * x + 0.11 * y) * np.cos(0.05 * y)
    b = np.clip(a + 0.15 * np.sin(0.31 * x) * np.sin(0.23 * y) + 0.05, 0.0, 1.0)
    return a, b


def window(size=11, sigma=1.5):
    # The library's default window is built in float32; build it in float64.
    coords = torch.arange(size, dtype=torch.float64) - size // 2
    g = torch.exp(-(coords ** 2) / (2 * sigma ** 2))
    return (g / g.sum())[None, None, None]


def t(img):
    return torch.from_numpy(img)[None, None]


def main():
    cases = []
    for h, w in [(224, 224), (192, 256)]:
        a, b = pair(h, w)
        cases.append({
            "height": h,
            "width": w,
            "ssim": float(ssim(t(a), t(b), data_range=1.0, size_average=True, win=window())),
            "ms_ssim": float(ms_ssim(t(a), t(b), data_range=1.0, size_average=True, win=window())),
        })
    OUT.write_text(json.dumps({"cases": cases}, indent=2) + "\n")


if __name__ == "__main__":
    main()
