"""Ground-truth API embeddings built from a word-embedding table."""

from __future__ import annotations

import hashlib
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import ApiVocabulary
from .errors import EmptyTable, InconsistentDimension, MalformedRow, MissingFile

DEFAULT_DIM = 400


@dataclass(frozen=True)
class WordEmbeddingTable:
    dim: int
    entries: Mapping[str, np.ndarray]
    duplicates: int = 0

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("embedding dimension must be positive")
        for tok, vec in self.entries.items():
            if vec.shape != (self.dim,):
                raise ValueError(f"vector for {tok!r} has shape {vec.shape}, expected ({self.dim},)")

    def __contains__(self, token):
        return token in self.entries

    def __getitem__(self, token):
        return self.entries[token]

    def __len__(self):
        return len(self.entries)


def _is_header(parts):
    return len(parts) == 2 and all(p.isdigit() for p in parts)


def load_embeddings(path) -> WordEmbeddingTable:
    """Read ``token v1 ... v_e`` lines; an optional ``count dim`` header is honoured.

    Duplicate tokens keep the last vector; how many were overwritten is
    reported as ``table.duplicates``.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"embedding file not found: {path}")
    dim = None
    entries = {}
    duplicates = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if dim is None and not entries and _is_header(parts):
                dim = int(parts[1])
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim:
                raise InconsistentDimension(lineno, dim, len(values))
            try:
                vec = np.array([float(v) for v in values])
            except ValueError:
                raise MalformedRow(lineno, "non-numeric vector component") from None
            if token in entries:
                duplicates += 1
            entries[token] = vec
    if not entries:
        raise EmptyTable(f"no embeddings in {path}")
    return WordEmbeddingTable(dim, entries, duplicates)


def save_embeddings(table: WordEmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tok, vec in table.entries.items():
            fh.write(tok + " " + " ".join(repr(float(x)) for x in vec) + "\n")


_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


def tokenize_api(name: str) -> list[str]:
    """``broken_barh`` -> [broken, barh]; ``densityTwo`` -> [density, two]."""
    tokens = []
    for chunk in name.split("_"):
        tokens += [t.lower() for t in _CAMEL.split(chunk) if t]
    return tokens


def fallback_vector(name: str, dim: int, seed: int = 0) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class ApiSemanticsMatrix:
    matrix: np.ndarray
    vocabulary: ApiVocabulary
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.matrix.shape[0] != len(self.vocabulary):
            raise ValueError("semantics rows must match the vocabulary size")
        if not np.all(np.abs(self.matrix).sum(axis=1) > 0):
            raise ValueError("semantics matrix has an all-zero row")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def fingerprint(self) -> str:
        h = hashlib.sha256(np.ascontiguousarray(self.matrix, dtype=np.float64).tobytes())
        h.update(self.vocabulary.fingerprint().encode())
        return h.hexdigest()[:16]

    def fallback_rows(self) -> list[str]:
        return [n for n, tag in self.provenance.items() if tag == "fallback"]


def build_api_semantics(vocab: ApiVocabulary, table: WordEmbeddingTable | None, *,
                        dim: int | None = None, fallback_seed: int = 0) -> ApiSemanticsMatrix:
    """Stack one embedding row per API.

    A single-token name present in the table is copied (``direct``); a
    multi-token name whose tokens are all present is their mean
    (``averaged``); anything else gets a unit-norm vector seeded by a hash of
    the name (``fallback``). With ``table=None`` every row is a fallback of
    size ``dim``.
    """
    if table is None:
        dim = dim or DEFAULT_DIM
    elif dim is not None and dim != table.dim:
        raise InconsistentDimension(0, dim, table.dim)
    else:
        dim = table.dim
    rows, provenance = [], {}
    for name in vocab.names:
        tokens = tokenize_api(name)
        if table is not None and tokens and all(t in table for t in tokens):
            vecs = [table[t] for t in tokens]
            row = vecs[0].copy() if len(vecs) == 1 else np.mean(vecs, axis=0)
            tag = "direct" if len(vecs) == 1 else "averaged"
        else:
            row, tag = fallback_vector(name, dim, fallback_seed), "fallback"
        if not np.any(row):
            row, tag = fallback_vector(name, dim, fallback_seed), "fallback"
        rows.append(row)
        provenance[name] = tag
    return ApiSemanticsMatrix(np.stack(rows), vocab, provenance)


def provenance_records(sem: ApiSemanticsMatrix) -> list[dict]:
    return [{"api": n, "source": sem.provenance[n]} for n in sem.vocabulary.names]
