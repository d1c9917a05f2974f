"""Cross-entropy losses for both paths and their weighted sum.

Losses are summed over APIs and averaged over the batch, so the weight
``alpha`` means the same thing at any batch size. Multiply by ``N`` to get
the plain double sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .errors import NegativeAlpha, NonFiniteInput, ShapeMismatch

EPS = 1e-7


def _as_tensor(x, like=None):
    if isinstance(x, torch.Tensor):
        return x
    dtype = like.dtype if isinstance(like, torch.Tensor) else torch.float64
    return torch.as_tensor(x, dtype=dtype)


def _check(p, y):
    if p.shape != y.shape or p.dim() != 2:
        raise ShapeMismatch(f"expected matching (N, c) inputs, got {tuple(p.shape)} and {tuple(y.shape)}")


def cross_entropy(probs, labels, eps: float = EPS) -> torch.Tensor:
    """Batch-mean of the per-sample summed binary cross-entropy."""
    probs = _as_tensor(probs)
    labels = _as_tensor(labels, probs).to(probs.dtype)
    _check(probs, labels)
    if not torch.isfinite(probs).all() or (probs < 0).any() or (probs > 1).any():
        raise NonFiniteInput("probabilities must be finite and within [0, 1]")
    p = probs.clamp(eps, 1 - eps)
    ll = labels * torch.log(p) + (1 - labels) * torch.log1p(-p)
    return -ll.sum(dim=1).mean()


def cross_entropy_with_logits(logits, labels, check_finite: bool = True) -> torch.Tensor:
    """Same value as ``cross_entropy(sigmoid(logits), labels)`` without clamping.

    The training loop passes ``check_finite=False`` and inspects the loss
    itself, so a divergence is reported with its step number.
    """
    logits = _as_tensor(logits)
    labels = _as_tensor(labels, logits).to(logits.dtype)
    _check(logits, labels)
    if check_finite and not torch.isfinite(logits).all():
        raise NonFiniteInput("logits must be finite")
    return F.binary_cross_entropy_with_logits(logits, labels, reduction="none").sum(dim=1).mean()


def visual_loss(y_hat, y) -> torch.Tensor:
    return cross_entropy(y_hat, y)


def semantic_loss(r, y) -> torch.Tensor:
    return cross_entropy(r, y)


def total_loss(l_vis, l_sem, alpha: float):
    if alpha < 0:
        raise NegativeAlpha(f"alpha must be >= 0, got {alpha}")
    return l_vis + alpha * l_sem


@dataclass(frozen=True)
class LossBreakdown:
    l_vis: float
    l_sem: float
    alpha: float
    total: float

    @classmethod
    def of(cls, l_vis, l_sem, alpha) -> "LossBreakdown":
        l_vis, l_sem = float(l_vis), float(l_sem)
        return cls(l_vis, l_sem, float(alpha), float(total_loss(l_vis, l_sem, alpha)))
