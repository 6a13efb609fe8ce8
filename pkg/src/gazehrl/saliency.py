"""Gaze saliency maps: fixation counts, Gaussian blur, normalisation, threshold."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import EpisodeLog

DEFAULT_THRESHOLD = 0.4
PX_PER_DEGREE = 10.0


@dataclass(frozen=True)
class SaliencyConfig:
    """``sigma_px`` defaults to one visual degree, i.e. ``px_per_degree``."""

    sigma_px: float | None = None
    threshold: float = DEFAULT_THRESHOLD
    px_per_degree: float = PX_PER_DEGREE

    def __post_init__(self):
        if self.sigma_px is not None and self.sigma_px <= 0:
            raise ValueError("sigma_px must be positive")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.px_per_degree <= 0:
            raise ValueError("px_per_degree must be positive")

    @property
    def sigma(self) -> float:
        return self.px_per_degree if self.sigma_px is None else self.sigma_px


@dataclass
class SaliencyMap:
    """Attention grid indexed ``values[y, x]``."""

    values: np.ndarray

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, width: int, height: int) -> "SaliencyMap":
        return cls(np.zeros((height, width)))


def fixation_map(log: EpisodeLog) -> SaliencyMap:
    """Count of gaze samples per pixel."""
    m = np.zeros((log.frame_height, log.frame_width))
    pts = log.gaze_samples()
    if pts:
        xs = np.array([int(g.x) for g in pts])
        ys = np.array([int(g.y) for g in pts])
        np.add.at(m, (ys, xs), 1.0)
    return SaliencyMap(m)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled 1-D Gaussian with radius ceil(3 sigma), normalised to unit sum."""
    r = int(math.ceil(3 * sigma))
    x = np.arange(-r, r + 1, dtype=float)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def _convolve_axis(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    r = len(k) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    p = np.pad(a, pad)
    n = a.shape[axis]
    out = np.zeros_like(a, dtype=float)
    for i, w in enumerate(k):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + n)
        out += w * p[tuple(sl)]
    return out


def gaussian_blur(smap: SaliencyMap, sigma_px: float) -> SaliencyMap:
    """Separable Gaussian convolution with zero padding outside the frame."""
    if sigma_px <= 0:
        raise ValueError("sigma_px must be positive")
    k = gaussian_kernel(sigma_px)
    v = np.asarray(smap.values, dtype=float)
    return SaliencyMap(_convolve_axis(_convolve_axis(v, k, 0), k, 1))


def normalize(smap: SaliencyMap) -> SaliencyMap:
    m = smap.values.max() if smap.values.size else 0.0
    if m <= 0:
        return SaliencyMap(smap.values.copy())
    return SaliencyMap(smap.values / m)


def threshold_mask(smap: SaliencyMap, t: float) -> list[tuple[int, int, float]]:
    """Cells with value strictly above ``t`` as ``(x, y, value)``, row-major."""
    if not 0 < t < 1:
        raise ValueError("threshold must lie in (0, 1)")
    ys, xs = np.nonzero(smap.values > t)
    return [(int(x), int(y), float(smap.values[y, x])) for y, x in zip(ys, xs)]


def saliency_map(log: EpisodeLog, cfg: SaliencyConfig = SaliencyConfig()) -> SaliencyMap:
    """Fixation map -> blur -> [0, 1] normalisation for one episode."""
    return normalize(gaussian_blur(fixation_map(log), cfg.sigma))


def to_gray(smap: SaliencyMap) -> np.ndarray:
    return np.rint(np.clip(smap.values, 0.0, 1.0) * 255).astype(np.uint8)


def write_pgm(smap: SaliencyMap, path: str | Path) -> None:
    """Plain-text (P2) greyscale image, value*255 rounded."""
    g = to_gray(smap)
    lines = ["P2", f"{smap.width} {smap.height}", "255"]
    lines += [" ".join(str(v) for v in row) for row in g]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path: str | Path) -> np.ndarray:
    tokens = [t for line in Path(path).read_text().splitlines() if not line.startswith("#") for t in line.split()]
    if tokens[0] != "P2":
        raise ValueError("not a P2 PGM file")
    w, h, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    return np.array(tokens[4 : 4 + w * h], dtype=int).reshape(h, w)


def write_png(smap: SaliencyMap, path: str | Path) -> None:
    from PIL import Image

    Image.fromarray(to_gray(smap)).save(path)
