"""Top-k API recommendation from a single plot image."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .augment import eval_transform
from .errors import BadK, MissingFile, UnreadableImage
from .images import decode_image, load_image
from .trainer import Checkpoint, predict_scores

DEFAULT_K = 3


@dataclass(frozen=True)
class RecommendResult:
    ranked: tuple  # ((api, probability), ...)
    k: int
    fingerprint: str

    def records(self) -> list[dict]:
        return [{"rank": i + 1, "api": api, "probability": p} for i, (api, p) in enumerate(self.ranked)]

    def to_dict(self) -> dict:
        return {"k": self.k, "fingerprint": self.fingerprint,
                "ranked": [{"api": a, "probability": p} for a, p in self.ranked]}


def read_image(image) -> np.ndarray:
    """Accept a pixel array, encoded image bytes, or a path."""
    if isinstance(image, np.ndarray):
        return image
    if isinstance(image, (bytes, bytearray)):
        return decode_image(bytes(image))
    try:
        return load_image(Path(image))
    except MissingFile as exc:
        raise UnreadableImage(str(exc)) from None


def rank(probs: np.ndarray, names, k: int) -> tuple:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
        raise BadK(f"k must be a positive integer, got {k!r}")
    # descending probability, ascending vocabulary index among ties
    order = np.lexsort((np.arange(len(probs)), -probs))[:k]
    return tuple((names[j], float(probs[j])) for j in order)


def recommend(checkpoint: Checkpoint, image, k: int = DEFAULT_K) -> RecommendResult:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
        raise BadK(f"k must be a positive integer, got {k!r}")
    pixels = eval_transform(read_image(image), checkpoint.model_config.input_size)
    probs = predict_scores(checkpoint.model, pixels[None])[0]
    return RecommendResult(rank(probs, checkpoint.vocabulary.names, k), int(k), checkpoint.fingerprint)
