"""Average precision per API and its mean over APIs."""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import NoPositives, ShapeMismatch


@dataclass(frozen=True)
class PRCurve:
    recall: np.ndarray
    precision: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recall.tolist(), self.precision.tolist()))


def _threshold_sweep(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ShapeMismatch(f"scores {scores.shape} and labels {labels.shape} must be matching 1-d arrays")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoPositives("no positive labels")
    # descending score, ascending index among ties
    order = np.lexsort((np.arange(len(scores)), -scores))
    s, l = scores[order], labels[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(l)[last_of_group]
    seen = (np.flatnonzero(last_of_group) + 1)
    return tp, seen, s[last_of_group], n_pos


def pr_curve(scores, labels) -> PRCurve:
    """One (recall, precision) point per distinct score, highest score first."""
    tp, seen, thr, n_pos = _threshold_sweep(scores, labels)
    return PRCurve(tp / n_pos, tp / seen, thr)


def average_precision(scores, labels) -> float:
    """Step-wise area under the PR curve, no interpolation.

    Each threshold contributes its recall gain times its precision, which for
    untied scores is the mean of precision at the rank of every positive.
    """
    tp, seen, _, n_pos = _threshold_sweep(scores, labels)
    gains = np.diff(np.r_[0, tp])
    return math.fsum(int(g) * (int(t) / int(k)) for g, t, k in zip(gains, tp, seen) if g) / n_pos


def mean_ap(per_api: Mapping[str, float]) -> float:
    if not per_api:
        raise NoPositives("no API has a positive sample")
    return math.fsum(per_api.values()) / len(per_api)


@dataclass(frozen=True)
class ApReport:
    per_api: dict
    map: float
    counts: dict = field(default_factory=dict)
    excluded: tuple = ()

    @classmethod
    def from_aps(cls, per_api: Mapping[str, float], counts=None, excluded=()) -> "ApReport":
        per_api = dict(per_api)
        return cls(per_api, mean_ap(per_api), dict(counts or {}), tuple(excluded))

    def to_dict(self) -> dict:
        return {"map": self.map, "per_api": self.per_api, "counts": self.counts, "excluded": list(self.excluded)}

    @classmethod
    def from_dict(cls, d) -> "ApReport":
        return cls(dict(d["per_api"]), float(d["map"]), dict(d.get("counts", {})), tuple(d.get("excluded", ())))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    def records(self) -> list[dict]:
        rows = [{"api": "mAP", "ap": self.map, "positives": None}]
        rows += [{"api": k, "ap": v, "positives": self.counts.get(k)} for k, v in self.per_api.items()]
        return rows

    def format_table(self, label: str = "model") -> str:
        """One row per report in percent, mAP first, like a results table."""
        return format_reports({label: self})


def format_reports(reports: Mapping[str, ApReport]) -> str:
    apis = []
    for rep in reports.values():
        apis += [a for a in rep.per_api if a not in apis]
    head = ["Method", "mAP", *apis]
    rows = [head]
    for name, rep in reports.items():
        cells = [name, f"{100 * rep.map:.2f}"]
        cells += [f"{100 * rep.per_api[a]:.2f}" if a in rep.per_api else "-" for a in apis]
        rows.append(cells)
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)


def evaluate_map(predictions, labels, vocab: Sequence[str] | object) -> ApReport:
    """AP per column and their mean over APIs that have a positive sample."""
    P = np.asarray(predictions, dtype=np.float64)
    Y = np.asarray(labels)
    names = list(getattr(vocab, "names", vocab))
    if P.shape != Y.shape or P.ndim != 2 or P.shape[1] != len(names):
        raise ShapeMismatch(f"predictions {P.shape}, labels {Y.shape}, vocabulary size {len(names)}")
    per_api, counts, excluded = {}, {}, []
    for j, name in enumerate(names):
        pos = int(Y[:, j].sum())
        counts[name] = pos
        if pos == 0:
            excluded.append(name)
            continue
        per_api[name] = average_precision(P[:, j], Y[:, j])
    return ApReport.from_aps(per_api, counts, excluded)
