"""Visual feature ingestion, L2 normalization and a toy histogram featurizer."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

NORM_TOLERANCE = 1e-6


@dataclass
class RawImage:
    """Row-major RGB image with channel values in [0, 255]."""

    width: int
    height: int
    pixels: np.ndarray  # shape (height * width, 3)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64).reshape(-1, 3)
        if self.pixels.shape[0] != self.width * self.height:
            raise ValueError(
                f"pixel count {self.pixels.shape[0]} != width*height "
                f"{self.width * self.height}"
            )


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """v / ||v||2; rejects zero and non-finite vectors."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite values")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def toy_featurize(img: RawImage, bins_per_channel: int) -> np.ndarray:
    """Concatenated per-channel intensity histograms, L2-normalized.

    A stand-in for pretrained-CNN descriptors in self-contained demos; the
    output dimension is 3 * bins_per_channel.
    """
    if bins_per_channel < 2:
        raise ValueError(f"bins_per_channel must be >= 2, got {bins_per_channel}")
    if img.pixels.shape[0] == 0:
        raise ValueError("empty image")
    bins = np.clip(
        (img.pixels * bins_per_channel / 256.0).astype(int), 0, bins_per_channel - 1
    )
    hist = np.zeros(3 * bins_per_channel)
    for ch in range(3):
        counts = np.bincount(bins[:, ch], minlength=bins_per_channel)
        hist[ch * bins_per_channel : (ch + 1) * bins_per_channel] = counts
    return l2_normalize(hist)


def load_features(path: str, expected_dim: int) -> dict[str, np.ndarray]:
    """Read an id->vector feature file, validating dimension and finiteness.

    Vectors whose norm deviates from 1 by more than ``NORM_TOLERANCE`` are
    re-normalized on load.
    """
    out: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        file_dim = int(header["dim"])
        if file_dim != expected_dim:
            raise ValueError(f"feature file dim {file_dim} != expected {expected_dim}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            vec = np.asarray(rec["v"], dtype=np.float64)
            if vec.ndim != 1 or vec.shape[0] != expected_dim:
                raise ValueError(
                    f"feature for id {rec['id']!r} has dim {vec.size}, expected {expected_dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"feature for id {rec['id']!r} has non-finite values")
            norm = np.linalg.norm(vec)
            if abs(norm - 1.0) > NORM_TOLERANCE:
                vec = l2_normalize(vec)
            out[str(rec["id"])] = vec
    return out


def save_features(features: dict[str, np.ndarray], dim: int, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": dim}) + "\n")
        for key in sorted(features):
            fh.write(json.dumps({"id": key, "v": [float(x) for x in features[key]]}) + "\n")
