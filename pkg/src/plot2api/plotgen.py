"""Synthetic multi-label chart corpus.

Charts are rasterized from primitive fills and strokes with numpy only, so
the output is bit-deterministic for a given seed. Each sample draws a set of
chart elements (bars, lines, markers...) onto one shared axes region. Two
style families render the same geometry with different themes, and use
different API names for a few element kinds (``plot`` vs ``line``), which
mimics training on one plotting dialect and testing on another.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import images
from .dataset import ApiVocabulary, DatasetManifest, PlotSample, encode_labels, write_manifest
from .errors import InvalidSpec, UnwritableOutput

KINDS = ("bar", "barh", "line", "scatter", "box", "pie", "step", "errorbar", "hist", "stem")

# API name used for each element kind in each style family.
DIALECTS = {
    "A": {"bar": "bar", "barh": "barh", "line": "plot", "scatter": "scatter", "box": "boxplot",
          "pie": "pie", "step": "step", "errorbar": "errorbar", "hist": "hist", "stem": "stem"},
    "B": {"bar": "bar", "barh": "barh", "line": "line", "scatter": "point", "box": "boxplot",
          "pie": "pie", "step": "step", "errorbar": "errorbar", "hist": "histogram", "stem": "stem"},
}

# Painting order: area-filling elements first so strokes stay visible.
Z_ORDER = ("pie", "hist", "bar", "barh", "box", "step", "line", "errorbar", "stem", "scatter")


def api_name(kind: str, family: str) -> str:
    return DIALECTS[family][kind]


def kind_of(name: str, family: str) -> str:
    for kind, api in DIALECTS[family].items():
        if api == name:
            return kind
    raise InvalidSpec(f"{name!r} is not an API of style family {family}")


@dataclass(frozen=True)
class StyleFamily:
    name: str
    background: tuple
    panel: tuple
    spines: str  # "box" | "none"
    grid: bool
    grid_color: tuple
    palette: tuple
    label_band: tuple  # min/max pixel height of tick-label blocks


_TAB10 = ((0.12, 0.47, 0.71), (1.0, 0.5, 0.05), (0.17, 0.63, 0.17), (0.84, 0.15, 0.16),
          (0.58, 0.4, 0.74), (0.55, 0.34, 0.29), (0.89, 0.47, 0.76), (0.5, 0.5, 0.5),
          (0.74, 0.74, 0.13), (0.09, 0.75, 0.81))
_HUE = ((0.97, 0.46, 0.43), (0.72, 0.62, 0.0), (0.0, 0.73, 0.22), (0.0, 0.75, 0.77),
        (0.38, 0.61, 1.0), (0.96, 0.4, 0.89), (0.2, 0.2, 0.2), (0.35, 0.35, 0.35))

FAMILIES = {
    "A": StyleFamily("A", (1.0, 1.0, 1.0), (1.0, 1.0, 1.0), "box", False, (0.85, 0.85, 0.85), _TAB10, (1, 2)),
    "B": StyleFamily("B", (1.0, 1.0, 1.0), (0.92, 0.92, 0.92), "none", True, (1.0, 1.0, 1.0), _HUE, (2, 3)),
}


def get_family(family) -> StyleFamily:
    if isinstance(family, StyleFamily):
        return family
    try:
        return FAMILIES[str(family).upper()]
    except KeyError:
        raise InvalidSpec(f"unknown style family {family!r}") from None


# --------------------------------------------------------------------------
# rasterizer


class Raster:
    """Pixel grid plus the axes box that data coordinates map into."""

    def __init__(self, height: int, width: int):
        self.h, self.w = height, width
        self.pixels = np.ones((height, width, 3))
        ys, xs = np.mgrid[0:height, 0:width]
        self.cx = xs + 0.5
        self.cy = ys + 0.5
        self.x0 = round(0.14 * width)
        self.x1 = width - max(1, round(0.04 * width))
        self.y0 = max(1, round(0.05 * height))
        self.y1 = height - round(0.14 * height)
        self.axes = np.zeros((height, width), dtype=bool)
        self.axes[self.y0:self.y1, self.x0:self.x1] = True

    @property
    def axes_area(self) -> int:
        return (self.y1 - self.y0) * (self.x1 - self.x0)

    def px(self, u):
        return self.x0 + np.asarray(u) * (self.x1 - self.x0)

    def py(self, v):
        return self.y1 - np.asarray(v) * (self.y1 - self.y0)

    def scale(self) -> float:
        return min(self.x1 - self.x0, self.y1 - self.y0)

    # masks in pixel space -------------------------------------------------
    def rect(self, xa, ya, xb, yb):
        xa, xb = sorted((xa, xb))
        ya, yb = sorted((ya, yb))
        c0, r0 = int(round(xa)), int(round(ya))
        c1, r1 = max(int(round(xb)), c0 + 1), max(int(round(yb)), r0 + 1)
        m = np.zeros((self.h, self.w), dtype=bool)
        m[max(r0, 0):max(r1, 0), max(c0, 0):max(c1, 0)] = True
        return m

    def segment(self, p, q, width):
        (ax, ay), (bx, by) = p, q
        dx, dy = bx - ax, by - ay
        ll = dx * dx + dy * dy
        if ll == 0.0:
            t = 0.0
        else:
            t = np.clip(((self.cx - ax) * dx + (self.cy - ay) * dy) / ll, 0.0, 1.0)
        ex = self.cx - (ax + t * dx)
        ey = self.cy - (ay + t * dy)
        r = max(width / 2.0, 0.71)
        return ex * ex + ey * ey <= r * r

    def polyline(self, xs, ys, width):
        m = np.zeros((self.h, self.w), dtype=bool)
        for i in range(len(xs) - 1):
            m |= self.segment((xs[i], ys[i]), (xs[i + 1], ys[i + 1]), width)
        return m

    def disk(self, x, y, r):
        r = max(r, 0.71)
        return (self.cx - x) ** 2 + (self.cy - y) ** 2 <= r * r

    def wedge(self, x, y, r, a0, a1, inner=0.0):
        d2 = (self.cx - x) ** 2 + (self.cy - y) ** 2
        ang = np.mod(np.arctan2(-(self.cy - y), self.cx - x), 2 * np.pi)
        span = np.mod(ang - a0, 2 * np.pi)
        return (d2 <= r * r) & (d2 >= inner * inner) & (span <= (a1 - a0))

    def paint(self, mask, color):
        self.pixels[mask] = color


@dataclass(frozen=True)
class ElementRecord:
    """What the renderer drew for one label: kind, pixel count and bbox."""

    kind: str
    n_pixels: int
    bbox: tuple  # (row0, col0, row1, col1), inclusive

    def coverage(self, axes_area: int) -> float:
        return self.n_pixels / axes_area


def _knob(rng, canonical, lo, hi, variation):
    """Blend a fixed canonical value with a random draw in [lo, hi]."""
    draw = rng.uniform(lo, hi)
    return canonical + variation * (draw - canonical)


def _int_knob(rng, canonical, lo, hi, variation):
    return int(round(_knob(rng, canonical, lo, hi, variation)))


# each element returns a list of (mask, color_slot) pairs
def _bar(R, rng, v, horizontal=False):
    k = _int_knob(rng, 5, 3, 9, v)
    fill = _knob(rng, 0.7, 0.45, 0.9, v)
    heights = rng.uniform(0.2, 0.95, size=9)[:k]
    base = _knob(rng, 0.0, 0.0, 0.1, v)
    shapes = []
    for i in range(k):
        c = (i + 0.5) / k
        half = 0.5 * fill / k
        lo, hi = base, max(base + 0.05, heights[i])
        if horizontal:
            m = R.rect(R.px(lo), R.py(c - half), R.px(hi), R.py(c + half))
        else:
            m = R.rect(R.px(c - half), R.py(lo), R.px(c + half), R.py(hi))
        shapes.append((m, 0))
    return shapes


def _hist(R, rng, v):
    k = _int_knob(rng, 10, 6, 18, v)
    mu = _knob(rng, 0.5, 0.3, 0.7, v)
    sd = _knob(rng, 0.2, 0.1, 0.3, v)
    centers = (np.arange(k) + 0.5) / k
    heights = 0.1 + 0.85 * np.exp(-0.5 * ((centers - mu) / sd) ** 2)
    heights = heights * rng.uniform(0.85, 1.0, size=18)[:k]
    shapes = []
    for i in range(k):
        m = R.rect(R.px(i / k), R.py(0.0), R.px((i + 1) / k), R.py(heights[i]))
        shapes.append((m, 0))
        # dark separator between adjacent bins
        shapes.append((R.segment((R.px(i / k), R.py(0.0)), (R.px(i / k), R.py(heights[i])), 1.0), "edge"))
    return shapes


def _series(rng, n, v):
    trend = rng.uniform(-0.5, 0.5)
    noise = rng.normal(0.0, 1.0, size=40)[:n]
    walk = np.cumsum(noise) / np.sqrt(n)
    wiggle = _knob(rng, 0.15, 0.05, 0.3, v)
    ys = 0.5 + trend * (np.linspace(0, 1, n) - 0.5) + wiggle * walk
    lo, hi = ys.min(), ys.max()
    span = max(hi - lo, 1e-6)
    top = rng.uniform(0.6, 0.9)
    bottom = rng.uniform(0.1, 0.4)
    return bottom + (ys - lo) / span * (top - bottom)


def _line(R, rng, v):
    n = _int_knob(rng, 12, 5, 30, v)
    width = _knob(rng, 1.5, 1.0, 3.0, v) * R.scale() / 50
    ys = _series(rng, n, v)
    xs = np.linspace(0.02, 0.98, n)
    return [(R.polyline(R.px(xs), R.py(ys), width), 0)]


def _step(R, rng, v):
    n = _int_knob(rng, 8, 4, 14, v)
    width = _knob(rng, 1.5, 1.0, 2.5, v) * R.scale() / 50
    ys = _series(rng, n, v)
    edges = np.linspace(0.02, 0.98, n + 1)
    px, py = [], []
    for i in range(n):
        px += [edges[i], edges[i + 1]]
        py += [ys[i], ys[i]]
    return [(R.polyline(R.px(np.array(px)), R.py(np.array(py)), width), 0)]


def _scatter(R, rng, v):
    m = _int_knob(rng, 25, 10, 45, v)
    radius = _knob(rng, 1.6, 1.0, 2.8, v) * R.scale() / 50
    square = rng.uniform() < 0.5 * v
    xs = rng.uniform(0.05, 0.95, size=45)[:m]
    ys = rng.uniform(0.05, 0.95, size=45)[:m]
    mask = np.zeros((R.h, R.w), dtype=bool)
    for x, y in zip(R.px(xs), R.py(ys)):
        if square:
            mask |= R.rect(x - radius, y - radius, x + radius, y + radius)
        else:
            mask |= R.disk(x, y, radius)
    return [(mask, 0)]


def _box(R, rng, v):
    k = _int_knob(rng, 3, 1, 5, v)
    width = _knob(rng, 0.5, 0.3, 0.7, v) / k
    lw = max(1.0, R.scale() / 50)
    filled = rng.uniform() < 0.5 * v
    shapes = []
    for i in range(k):
        c = (i + 0.5) / k
        q1 = rng.uniform(0.25, 0.45)
        q3 = q1 + rng.uniform(0.15, 0.3)
        med = rng.uniform(q1 + 0.03, q3 - 0.03)
        lo = max(0.03, q1 - rng.uniform(0.1, 0.22))
        hi = min(0.97, q3 + rng.uniform(0.1, 0.22))
        xa, xb = R.px(c - width / 2), R.px(c + width / 2)
        ya, yb = R.py(q1), R.py(q3)
        if filled:
            shapes.append((R.rect(xa, yb, xb, ya), 0))
        outline = (R.segment((xa, ya), (xb, ya), lw) | R.segment((xa, yb), (xb, yb), lw)
                   | R.segment((xa, ya), (xa, yb), lw) | R.segment((xb, ya), (xb, yb), lw))
        whisk = (R.segment((R.px(c), ya), (R.px(c), R.py(lo)), lw)
                 | R.segment((R.px(c), yb), (R.px(c), R.py(hi)), lw)
                 | R.segment((R.px(c - width / 4), R.py(lo)), (R.px(c + width / 4), R.py(lo)), lw)
                 | R.segment((R.px(c - width / 4), R.py(hi)), (R.px(c + width / 4), R.py(hi)), lw))
        shapes.append((outline | whisk, "dark"))
        shapes.append((R.segment((xa, R.py(med)), (xb, R.py(med)), lw * 1.5), 1))
    return shapes


def _pie(R, rng, v):
    k = _int_knob(rng, 4, 2, 7, v)
    fracs = rng.dirichlet(np.ones(7))[:k]
    fracs = fracs / fracs.sum()
    hole = _knob(rng, 0.0, 0.0, 0.6, v)
    start = _knob(rng, 0.0, 0.0, 2 * np.pi, v)
    r = 0.42 * R.scale()
    x = (R.x0 + R.x1) / 2
    y = (R.y0 + R.y1) / 2
    shapes, a = [], start
    for i, f in enumerate(fracs):
        a1 = a + 2 * np.pi * f
        shapes.append((R.wedge(x, y, r, np.mod(a, 2 * np.pi), np.mod(a, 2 * np.pi) + (a1 - a), hole * r), i))
        a = a1
    return shapes


def _errorbar(R, rng, v):
    n = _int_knob(rng, 7, 4, 12, v)
    lw = max(1.0, R.scale() / 60)
    ys = _series(rng, n, v)
    errs = rng.uniform(0.04, 0.12, size=12)[:n] * (0.5 + v)
    xs = np.linspace(0.08, 0.92, n)
    joined = rng.uniform() < 0.5
    cap = 0.35 / n
    mask = np.zeros((R.h, R.w), dtype=bool)
    for x, y, e in zip(xs, ys, errs):
        mask |= R.segment((R.px(x), R.py(y - e)), (R.px(x), R.py(y + e)), lw)
        mask |= R.segment((R.px(x - cap), R.py(y - e)), (R.px(x + cap), R.py(y - e)), lw)
        mask |= R.segment((R.px(x - cap), R.py(y + e)), (R.px(x + cap), R.py(y + e)), lw)
        mask |= R.disk(R.px(x), R.py(y), 1.2 * lw)
    if joined:
        mask |= R.polyline(R.px(xs), R.py(ys), lw)
    return [(mask, 0)]


def _stem(R, rng, v):
    n = _int_knob(rng, 10, 5, 18, v)
    lw = max(1.0, R.scale() / 60)
    base = _knob(rng, 0.05, 0.02, 0.3, v)
    ys = rng.uniform(0.2, 0.95, size=18)[:n]
    xs = np.linspace(0.05, 0.95, n)
    stems = np.zeros((R.h, R.w), dtype=bool)
    heads = np.zeros((R.h, R.w), dtype=bool)
    for x, y in zip(xs, ys):
        stems |= R.segment((R.px(x), R.py(base)), (R.px(x), R.py(y)), lw)
        heads |= R.disk(R.px(x), R.py(y), 2.0 * lw)
    stems |= R.segment((R.px(0.0), R.py(base)), (R.px(1.0), R.py(base)), lw)
    return [(stems, 0), (heads, 0)]


_DRAW = {
    "bar": _bar,
    "barh": lambda R, rng, v: _bar(R, rng, v, horizontal=True),
    "hist": _hist,
    "line": _line,
    "step": _step,
    "scatter": _scatter,
    "box": _box,
    "pie": _pie,
    "errorbar": _errorbar,
    "stem": _stem,
}


def _frame(R: Raster, fam: StyleFamily):
    R.pixels[:] = fam.background
    R.paint(R.axes, fam.panel)
    if fam.grid:
        for t in np.linspace(0, 1, 5)[1:-1]:
            R.paint(R.segment((R.px(t), R.y0), (R.px(t), R.y1), 1.0) & R.axes, fam.grid_color)
            R.paint(R.segment((R.x0, R.py(t)), (R.x1, R.py(t)), 1.0) & R.axes, fam.grid_color)


def _decorate(R: Raster, fam: StyleFamily, rng):
    ink = (0.15, 0.15, 0.15)
    if fam.spines == "box":
        frame = (R.rect(R.x0 - 1, R.y0 - 1, R.x1 + 1, R.y0) | R.rect(R.x0 - 1, R.y1, R.x1 + 1, R.y1 + 1)
                 | R.rect(R.x0 - 1, R.y0 - 1, R.x0, R.y1 + 1) | R.rect(R.x1, R.y0 - 1, R.x1 + 1, R.y1 + 1))
        R.paint(frame, ink)
    lo, hi = fam.label_band
    for t in np.linspace(0, 1, 5):
        tick_h = int(rng.integers(lo, hi + 1))
        x, y = R.px(t), R.py(t)
        R.paint(R.rect(x - 0.5, R.y1, x + 0.5, R.y1 + 2), ink)
        R.paint(R.rect(R.x0 - 2, y - 0.5, R.x0, y + 0.5), ink)
        # tick-label blocks standing in for text
        lw = int(rng.integers(2, 5))
        R.paint(R.rect(x - lw / 2, R.y1 + 3, x + lw / 2, R.y1 + 3 + tick_h), (0.3, 0.3, 0.3))
        R.paint(R.rect(R.x0 - 3 - lw, y - tick_h / 2, R.x0 - 3, y + tick_h / 2), (0.3, 0.3, 0.3))


def _words(rng_state: int) -> list[int]:
    rng_state = int(rng_state)
    return [rng_state & 0xFFFFFFFF, rng_state >> 32]


def _theme_rng(rng_state: int):
    return np.random.default_rng(_words(rng_state) + [0])


def _element_rng(rng_state: int, kind: str):
    # forked per kind so an element's shape does not depend on which other
    # elements share the plot, nor on the theme
    return np.random.default_rng(_words(rng_state) + [KINDS.index(kind) + 1])


def draw_kinds(kinds, family, rng_state: int, size=(64, 64), variation: float = 0.5):
    """Render element ``kinds`` and return ``(image, records)``.

    Records come back in painting order; ``n_pixels`` counts each element's
    own footprint inside the axes, before any later element paints over it.
    """
    fam = get_family(family)
    unknown = set(kinds) - set(KINDS)
    if unknown:
        raise InvalidSpec(f"unknown element kinds {sorted(unknown)}")
    if not kinds:
        raise InvalidSpec("at least one element kind is required")
    R = Raster(*size)
    style_rng = _theme_rng(rng_state)
    _frame(R, fam)
    records = []
    palette = fam.palette
    offset = int(style_rng.integers(len(palette)))
    for slot, kind in enumerate(k for k in Z_ORDER if k in kinds):
        shapes = _DRAW[kind](R, _element_rng(rng_state, kind), variation)
        footprint = np.zeros((R.h, R.w), dtype=bool)
        for mask, color_slot in shapes:
            mask = mask & R.axes
            if color_slot == "edge":
                color = tuple(0.6 * c for c in fam.panel)
            elif color_slot == "dark":
                color = (0.1, 0.1, 0.1)
            else:
                color = palette[(offset + slot + color_slot) % len(palette)]
            R.paint(mask, color)
            footprint |= mask
        rows, cols = np.nonzero(footprint)
        bbox = (int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max())) if rows.size else (0, 0, -1, -1)
        records.append(ElementRecord(kind, int(footprint.sum()), bbox))
    _decorate(R, fam, style_rng)
    return np.clip(R.pixels, 0.0, 1.0), records


def render_sample(labels, vocab: ApiVocabulary, family, rng_state: int, size=(64, 64), variation: float = 0.5):
    return render_sample_with_log(labels, vocab, family, rng_state, size, variation)[0]


def render_sample_with_log(labels, vocab: ApiVocabulary, family, rng_state: int, size=(64, 64), variation: float = 0.5):
    fam = get_family(family)
    names = vocab.decode(labels)
    if not names:
        raise InvalidSpec("labels must have at least one bit set")
    kinds = [kind_of(n, fam.name) for n in names]
    return draw_kinds(kinds, fam, rng_state, size, variation)


# --------------------------------------------------------------------------
# corpus


@dataclass
class CorpusSpec:
    """What to generate. ``samples_per_api`` order defines the vocabulary."""

    samples_per_api: dict
    max_labels_per_image: int = 2
    image_size: tuple = (64, 64)
    family: str = "A"
    seed: int = 0
    variation: float = 0.5
    metadata: dict = field(default_factory=dict)

    def validate(self):
        fam = get_family(self.family)
        if not self.samples_per_api or len(self.samples_per_api) < 2:
            raise InvalidSpec("samples_per_api must name at least 2 APIs")
        for name, count in self.samples_per_api.items():
            kind_of(name, fam.name)
            if not isinstance(count, (int, np.integer)) or count < 1:
                raise InvalidSpec(f"target count for {name!r} must be a positive integer, got {count!r}")
        if not 1 <= self.max_labels_per_image <= len(self.samples_per_api):
            raise InvalidSpec("max_labels_per_image must be in [1, number of APIs]")
        h, w = self.image_size
        if h < 16 or w < 16:
            raise InvalidSpec("image_size sides must be >= 16")
        if not 0.0 <= self.variation <= 1.0:
            raise InvalidSpec("variation must be in [0, 1]")

    def in_family(self, family: str) -> "CorpusSpec":
        """Same spec rendered in another family, with API names translated."""
        src, dst = get_family(self.family).name, get_family(family).name
        counts = {api_name(kind_of(name, src), dst): n for name, n in self.samples_per_api.items()}
        return CorpusSpec(counts, self.max_labels_per_image, self.image_size, dst, self.seed,
                          self.variation, dict(self.metadata))

    def vocabulary(self) -> ApiVocabulary:
        return ApiVocabulary(tuple(self.samples_per_api))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["image_size"] = list(self.image_size)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "CorpusSpec":
        d = dict(d)
        if "image_size" in d:
            d["image_size"] = tuple(d["image_size"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "CorpusSpec":
        from .errors import MissingFile
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"corpus spec not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"{path}: {exc}") from None

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def assign_label_sets(spec: CorpusSpec) -> list[list[str]]:
    """Group API occurrences into images so per-API totals match exactly.

    Each image draws a size in [1, max_labels] and then distinct APIs with
    probability proportional to their remaining count.
    """
    rng = np.random.default_rng([spec.seed, 0xC0])
    names = list(spec.samples_per_api)
    remaining = np.array([spec.samples_per_api[n] for n in names], dtype=np.int64)
    sets = []
    while remaining.sum() > 0:
        avail = np.flatnonzero(remaining > 0)
        k = min(int(rng.integers(1, spec.max_labels_per_image + 1)), len(avail))
        p = remaining[avail] / remaining[avail].sum()
        chosen = np.sort(rng.choice(avail, size=k, replace=False, p=p))
        remaining[chosen] -= 1
        sets.append([names[j] for j in chosen])
    return sets


def sample_state(seed: int, index: int) -> int:
    """Independent per-sample render seed, identical under serial or parallel use."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def generate_corpus(spec: CorpusSpec, out_dir) -> DatasetManifest:
    spec.validate()
    out_dir = Path(out_dir)
    img_dir = out_dir / "images"
    try:
        img_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UnwritableOutput(f"cannot create {img_dir}: {exc}") from None
    vocab = spec.vocabulary()
    samples = []
    for i, names in enumerate(assign_label_sets(spec)):
        labels = encode_labels(names, vocab)
        pixels = render_sample(labels, vocab, spec.family, sample_state(spec.seed, i), spec.image_size, spec.variation)
        sid = f"{spec.family.lower()}{i:05d}"
        path = img_dir / f"{sid}.png"
        try:
            images.save_png(pixels, path)
        except OSError as exc:
            raise UnwritableOutput(f"cannot write {path}: {exc}") from None
        samples.append(PlotSample(sid, path, labels))
    meta = {"family": spec.family, "seed": spec.seed, "variation": spec.variation,
            "corpus_spec": spec.fingerprint(), **spec.metadata}
    manifest = DatasetManifest(vocab, tuple(samples), meta)
    try:
        write_manifest(manifest, out_dir / "manifest.jsonl", out_dir / "vocab.txt")
        (out_dir / "corpus.json").write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise UnwritableOutput(str(exc)) from None
    return manifest
