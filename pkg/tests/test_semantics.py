import numpy as np
import pytest
from hypothesis import given, strategies as st

from plot2api.dataset import ApiVocabulary
from plot2api.errors import EmptyTable, InconsistentDimension, MissingFile
from plot2api.semantics import (
    WordEmbeddingTable,
    build_api_semantics,
    fallback_vector,
    load_embeddings,
    provenance_records,
    save_embeddings,
    tokenize_api,
)


@pytest.fixture
def table():
    rng = np.random.default_rng(0)
    return WordEmbeddingTable(4, {t: rng.standard_normal(4) for t in ("bar", "broken", "barh", "line")})


def test_load_three_lines(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("bar 1 2 3 4\nline 0 0 1 0\npie 0.5 0.5 0.5 0.5\n")
    t = load_embeddings(p)
    assert (len(t), t.dim) == (3, 4)
    assert t["bar"].tolist() == [1, 2, 3, 4]


def test_header_then_short_line(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("2 4\nbar 1 2 3\n")
    with pytest.raises(InconsistentDimension):
        load_embeddings(p)


def test_empty_and_missing(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("")
    with pytest.raises(EmptyTable):
        load_embeddings(p)
    with pytest.raises(MissingFile):
        load_embeddings(tmp_path / "none.txt")


def test_duplicates_last_wins(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("bar 1 1\nbar 2 2\n")
    t = load_embeddings(p)
    assert t["bar"].tolist() == [2, 2] and t.duplicates == 1


def test_save_load_round_trip(tmp_path, table):
    save_embeddings(table, tmp_path / "t.txt")
    again = load_embeddings(tmp_path / "t.txt")
    for tok in table.entries:
        assert np.array_equal(again[tok], table[tok])


@pytest.mark.parametrize("name, tokens", [
    ("broken_barh", ["broken", "barh"]),
    ("geom_histogram", ["geom", "histogram"]),
    ("fill_between", ["fill", "between"]),
    ("plotDensity", ["plot", "density"]),
    ("hist2d", ["hist2d"]),
])
def test_tokenize(name, tokens):
    assert tokenize_api(name) == tokens


def test_direct_averaged_fallback(table):
    vocab = ApiVocabulary(("bar", "broken_barh", "histogram"))
    sem = build_api_semantics(vocab, table)
    assert np.array_equal(sem.matrix[0], table["bar"])
    assert np.allclose(sem.matrix[1], (table["broken"] + table["barh"]) / 2, rtol=0, atol=1e-15)
    assert sem.provenance == {"bar": "direct", "broken_barh": "averaged", "histogram": "fallback"}
    assert sem.fallback_rows() == ["histogram"]
    assert np.isclose(np.linalg.norm(sem.matrix[2]), 1.0)
    again = build_api_semantics(vocab, table)
    assert np.array_equal(sem.matrix, again.matrix)
    assert provenance_records(sem)[2] == {"api": "histogram", "source": "fallback"}


def test_no_table_all_fallback():
    sem = build_api_semantics(ApiVocabulary(("bar", "line")), None, dim=16)
    assert sem.matrix.shape == (2, 16)
    assert set(sem.provenance.values()) == {"fallback"}


def test_dim_conflict(table):
    with pytest.raises(InconsistentDimension):
        build_api_semantics(ApiVocabulary(("bar", "line")), table, dim=8)


@given(st.text(min_size=1, max_size=12), st.text(min_size=1, max_size=12))
def test_fallback_distinct_names(a, b):
    va, vb = fallback_vector(a, 8), fallback_vector(b, 8)
    assert np.array_equal(va, fallback_vector(a, 8))
    if a != b:
        assert not np.array_equal(va, vb)
