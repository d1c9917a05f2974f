"""Plots, label vectors, manifests and the train/test split protocol.

A manifest is a UTF-8 file with one JSON record per line::

    {"id": "s0001", "image": "images/s0001.png", "apis": ["bar", "plot"]}

An optional first line ``{"metadata": {...}}`` carries provenance. Image
paths are resolved relative to the manifest's directory. The vocabulary is a
separate file holding one API name per line.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import images
from .errors import (
    EmptyLabelSet,
    InsufficientSamplesForApi,
    InvalidVocabulary,
    MalformedRow,
    MissingFile,
    UnknownApi,
)


@dataclass(frozen=True)
class ApiVocabulary:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 2:
            raise InvalidVocabulary(f"need at least 2 APIs, got {len(names)}")
        for name in names:
            if not isinstance(name, str) or not name or name != name.lower() or name.strip() != name:
                raise InvalidVocabulary(f"API names must be non-empty lowercase strings: {name!r}")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise InvalidVocabulary(f"duplicate API names: {dupes}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name):
        return name in self._index

    @property
    def c(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownApi(name) from None

    def decode(self, bits) -> list[str]:
        return [self.names[j] for j in np.flatnonzero(np.asarray(bits))]

    def fingerprint(self) -> str:
        return hashlib.sha256("\n".join(self.names).encode()).hexdigest()[:16]

    @classmethod
    def from_file(cls, path) -> "ApiVocabulary":
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"vocabulary file not found: {path}")
        lines = path.read_text(encoding="utf-8").splitlines()
        return cls(tuple(line.strip() for line in lines if line.strip()))

    def to_file(self, path) -> None:
        Path(path).write_text("\n".join(self.names) + "\n", encoding="utf-8")


def encode_labels(api_names: Iterable[str], vocab: ApiVocabulary) -> np.ndarray:
    """Binary label vector with bit ``j`` set iff ``vocab.names[j]`` is named.

    Duplicates collapse to a single bit.
    """
    api_names = list(api_names)
    if not api_names:
        raise EmptyLabelSet("label list is empty")
    bits = np.zeros(len(vocab), dtype=np.uint8)
    for name in api_names:
        bits[vocab.index(name)] = 1
    return bits


ImageRef = Union[str, Path, np.ndarray]


@dataclass(frozen=True)
class PlotSample:
    id: str
    image_ref: ImageRef
    labels: np.ndarray

    def load_image(self) -> np.ndarray:
        if isinstance(self.image_ref, np.ndarray):
            return images.check_image(self.image_ref)
        return images.load_image(self.image_ref)


@dataclass(frozen=True)
class DatasetManifest:
    vocabulary: ApiVocabulary
    samples: tuple[PlotSample, ...]
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        c = len(self.vocabulary)
        seen = set()
        for s in self.samples:
            if s.labels.shape != (c,):
                raise ValueError(f"sample {s.id!r}: label length {s.labels.shape} != {c}")
            if not s.labels.any():
                raise EmptyLabelSet(f"sample {s.id!r} has no labels")
            if s.id in seen:
                raise ValueError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)

    @property
    def n(self) -> int:
        return len(self.samples)

    def __len__(self):
        return len(self.samples)

    def label_matrix(self) -> np.ndarray:
        if not self.samples:
            return np.zeros((0, len(self.vocabulary)), dtype=np.uint8)
        return np.stack([s.labels for s in self.samples])

    def subset(self, indices: Sequence[int], **metadata) -> "DatasetManifest":
        return DatasetManifest(
            self.vocabulary,
            tuple(self.samples[i] for i in indices),
            {**self.metadata, **metadata},
        )

    def load_images(self) -> list[np.ndarray]:
        return [s.load_image() for s in self.samples]


def load_manifest(path, vocab_path) -> DatasetManifest:
    path = Path(path)
    vocab = ApiVocabulary.from_file(vocab_path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    root = path.parent
    samples = []
    metadata = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise MalformedRow(lineno, "record is not an object")
            if set(rec) == {"metadata"} and not samples:
                metadata = dict(rec["metadata"])
                continue
            missing = {"id", "image", "apis"} - set(rec)
            if missing:
                raise MalformedRow(lineno, f"missing field(s) {sorted(missing)}")
            if not isinstance(rec["apis"], list) or not all(isinstance(a, str) for a in rec["apis"]):
                raise MalformedRow(lineno, "'apis' must be a list of strings")
            if not rec["apis"]:
                raise EmptyLabelSet(f"line {lineno}: sample {rec['id']!r} has an empty API list")
            labels = encode_labels(rec["apis"], vocab)
            samples.append(PlotSample(str(rec["id"]), root / rec["image"], labels))
    return DatasetManifest(vocab, tuple(samples), metadata)


def write_manifest(manifest: DatasetManifest, path, vocab_path=None) -> None:
    """Write ``manifest`` as line-delimited records.

    In-memory images cannot be referenced from a file; every sample must
    carry a path. Paths are written relative to the manifest directory when
    possible.
    """
    path = Path(path)
    root = path.parent.resolve()
    lines = []
    if manifest.metadata:
        lines.append(json.dumps({"metadata": dict(manifest.metadata)}, sort_keys=True))
    for s in manifest.samples:
        if isinstance(s.image_ref, np.ndarray):
            raise ValueError(f"sample {s.id!r} has an in-memory image")
        ref = Path(s.image_ref).resolve()
        try:
            ref = ref.relative_to(root)
        except ValueError:
            pass
        rec = {"id": s.id, "image": ref.as_posix(), "apis": manifest.vocabulary.decode(s.labels)}
        lines.append(json.dumps(rec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if vocab_path is not None:
        manifest.vocabulary.to_file(vocab_path)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(
    manifest: DatasetManifest,
    test_fraction: float,
    seed: int,
    train_only: Iterable[str] = (),
) -> tuple[DatasetManifest, DatasetManifest]:
    """Split into (train, test) so that every API shows up in the test set.

    The test size is ``round_half_up(test_fraction * n)``. One test sample is
    first reserved per API, rarest API first (ties by vocabulary index); the
    remainder is filled uniformly at random. When a reservation is needed,
    candidates that would leave some API without any training sample are
    avoided if possible. APIs in ``train_only`` are exempt from the coverage
    requirement. If reservations exceed the target size the test set grows to
    hold them.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    vocab = manifest.vocabulary
    exempt = {vocab.index(name) for name in train_only}
    Y = manifest.label_matrix().astype(np.int64)
    counts = Y.sum(axis=0)
    for j in range(len(vocab)):
        if j not in exempt and counts[j] < 2:
            raise InsufficientSamplesForApi(vocab.names[j], int(counts[j]))

    n = manifest.n
    n_test = round_half_up(test_fraction * n)
    rng = np.random.default_rng(seed)
    in_test = np.zeros(n, dtype=bool)
    train_counts = counts.copy()

    order = sorted((j for j in range(len(vocab)) if j not in exempt), key=lambda j: (counts[j], j))
    for j in order:
        if (Y[in_test, j] > 0).any():
            continue
        candidates = np.flatnonzero((Y[:, j] > 0) & ~in_test)
        safe = [i for i in candidates if np.all(train_counts[Y[i] > 0] >= 2)]
        pool = np.asarray(safe if safe else candidates)
        pick = int(pool[rng.integers(len(pool))])
        in_test[pick] = True
        train_counts -= Y[pick]

    remaining = n_test - int(in_test.sum())
    if remaining > 0:
        free = np.flatnonzero(~in_test)
        in_test[rng.choice(free, size=remaining, replace=False)] = True

    train_idx = np.flatnonzero(~in_test).tolist()
    test_idx = np.flatnonzero(in_test).tolist()
    info = {"split_seed": seed, "test_fraction": test_fraction}
    return (
        manifest.subset(train_idx, split="train", **info),
        manifest.subset(test_idx, split="test", **info),
    )


def class_frequency_report(manifest: DatasetManifest) -> dict[str, int]:
    counts = manifest.label_matrix().sum(axis=0)
    order = sorted(range(len(manifest.vocabulary)), key=lambda j: (-int(counts[j]), j))
    return {manifest.vocabulary.names[j]: int(counts[j]) for j in order}


def format_frequency_table(freq: Mapping[str, int]) -> str:
    width = max([len("API")] + [len(k) for k in freq])
    rows = [f"{'API':<{width}}  {'#':>6}", "-" * (width + 8)]
    rows += [f"{name:<{width}}  {count:>6d}" for name, count in freq.items()]
    return "\n".join(rows)


def frequency_records(freq: Mapping[str, int]) -> list[dict]:
    return [{"api": name, "count": count} for name, count in freq.items()]
