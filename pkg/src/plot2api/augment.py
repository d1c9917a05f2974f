"""Resize, random horizontal flip and random erasing.

All operations take and return ``(H, W, 3)`` float arrays in [0, 1] and
never touch labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSize
from .images import MIN_SIDE


@dataclass(frozen=True)
class EraseParams:
    probability: float = 0.5
    area_range: tuple = (0.02, 0.33)
    aspect_range: tuple = (0.3, 3.33)
    fill: str = "uniform-random"
    max_attempts: int = 10

    def __post_init__(self):
        a_lo, a_hi = self.area_range
        r_lo, r_hi = self.aspect_range
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("erase probability must be in [0, 1]")
        if not 0.0 < a_lo <= a_hi < 1.0:
            raise ValueError("area_range must satisfy 0 < lo <= hi < 1")
        if not 0.0 < r_lo <= r_hi:
            raise ValueError("aspect_range must satisfy 0 < lo <= hi")
        if self.fill not in ("uniform-random", "mean"):
            raise ValueError(f"unknown fill mode {self.fill!r}")


def _axis_weights(n_in, n_out):
    # half-pixel centres; identity when n_in == n_out
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def resize(image: np.ndarray, h: int, w: int) -> np.ndarray:
    """Bilinear resize to ``(h, w)``."""
    if h < MIN_SIDE or w < MIN_SIDE:
        raise InvalidSize(f"target size must be >= {MIN_SIDE}, got ({h}, {w})")
    image = np.asarray(image, dtype=np.float64)
    if image.shape[:2] == (h, w):
        return image.copy()
    r0, r1, tr = _axis_weights(image.shape[0], h)
    c0, c1, tc = _axis_weights(image.shape[1], w)
    tr = tr[:, None, None]
    tc = tc[None, :, None]
    top = image[r0][:, c0] + (image[r0][:, c1] - image[r0][:, c0]) * tc
    bot = image[r1][:, c0] + (image[r1][:, c1] - image[r1][:, c0]) * tc
    return np.clip(top + (bot - top) * tr, 0.0, 1.0)


def random_flip(image: np.ndarray, rng: np.random.Generator, force: bool | None = None) -> np.ndarray:
    flip = rng.random() < 0.5 if force is None else force
    return image[:, ::-1].copy() if flip else image


def sample_erase_rect(shape, params: EraseParams, rng: np.random.Generator):
    """Draw ``(top, left, height, width)`` or None if nothing valid fits.

    The integer rectangle itself must satisfy the area and aspect bounds, so
    a draw whose rounding pushes it outside is rejected and redrawn.
    """
    H, W = shape[:2]
    S = H * W
    a_lo, a_hi = params.area_range
    r_lo, r_hi = params.aspect_range
    for _ in range(params.max_attempts):
        area = rng.uniform(a_lo, a_hi) * S
        aspect = rng.uniform(r_lo, r_hi)
        h = int(round(math.sqrt(area * aspect)))
        w = int(round(math.sqrt(area / aspect)))
        if not (0 < h < H and 0 < w < W):
            continue
        if not (a_lo <= h * w / S <= a_hi and r_lo <= h / w <= r_hi):
            continue
        top = int(rng.integers(0, H - h + 1))
        left = int(rng.integers(0, W - w + 1))
        return top, left, h, w
    return None


def random_erase(image: np.ndarray, params: EraseParams, rng: np.random.Generator, rect=None) -> np.ndarray:
    """Overwrite one random rectangle with probability ``params.probability``.

    ``rect`` forces the rectangle (and the decision) for testing.
    """
    if rect is None:
        if rng.random() >= params.probability:
            return image
        rect = sample_erase_rect(image.shape, params, rng)
        if rect is None:
            return image
    top, left, h, w = rect
    out = image.copy()
    if params.fill == "mean":
        out[top:top + h, left:left + w] = image.reshape(-1, image.shape[2]).mean(axis=0)
    else:
        out[top:top + h, left:left + w] = rng.random((h, w, image.shape[2]))
    return out


@dataclass(frozen=True)
class AugmentConfig:
    enabled: bool = True
    flip: bool = True
    erase: EraseParams = EraseParams()

    @classmethod
    def from_dict(cls, d) -> "AugmentConfig":
        d = dict(d or {})
        erase = d.pop("erase", {}) or {}
        erase = {k: tuple(v) if isinstance(v, list) else v for k, v in erase.items()}
        return cls(erase=EraseParams(**erase), **d)


def sample_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Per-sample stream so worker count never changes the augmentation."""
    return np.random.default_rng([seed, epoch, index])


def train_transform(image, size, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    out = resize(image, *size)
    if not cfg.enabled:
        return out
    if cfg.flip:
        out = random_flip(out, rng)
    return random_erase(out, cfg.erase, rng)


def eval_transform(image, size) -> np.ndarray:
    return resize(image, *size)
