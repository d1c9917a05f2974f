import hashlib

import numpy as np
import pytest

from plot2api.dataset import ApiVocabulary, class_frequency_report, encode_labels
from plot2api.errors import InvalidSpec
from plot2api.images import load_image
from plot2api.plotgen import (
    DIALECTS,
    KINDS,
    CorpusSpec,
    Raster,
    assign_label_sets,
    draw_kinds,
    generate_corpus,
    kind_of,
    render_sample,
    render_sample_with_log,
)


def _axes_area(size=(64, 64)):
    return Raster(*size).axes_area


def test_dialects_cover_every_kind():
    for fam in DIALECTS.values():
        assert set(fam) == set(KINDS)
        assert len(set(fam.values())) == len(KINDS)


def test_corpus_counts_exact(tmp_path):
    spec = CorpusSpec({"bar": 20, "plot": 20, "scatter": 10}, max_labels_per_image=2, seed=7)
    m = generate_corpus(spec, tmp_path)
    assert class_frequency_report(m) == {"bar": 20, "plot": 20, "scatter": 10}
    assert int(m.label_matrix().sum()) == 50
    assert (m.label_matrix().sum(axis=1) > 1).any()


def test_corpus_deterministic(tmp_path):
    spec = CorpusSpec({"bar": 6, "plot": 5, "hist": 4}, seed=3, image_size=(32, 32))
    generate_corpus(spec, tmp_path / "a")
    generate_corpus(spec, tmp_path / "b")
    for name in ("manifest.jsonl", "vocab.txt", "corpus.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    for p in sorted((tmp_path / "a" / "images").iterdir()):
        assert np.array_equal(load_image(p), load_image(tmp_path / "b" / "images" / p.name))


@pytest.mark.parametrize("counts", [{"bar": 0, "plot": 3}, {"bar": 3}, {"bar": 3, "sparkline": 2}])
def test_invalid_specs(tmp_path, counts):
    with pytest.raises(InvalidSpec):
        generate_corpus(CorpusSpec(counts), tmp_path)


def test_spec_rejects_bad_max_labels():
    with pytest.raises(InvalidSpec):
        CorpusSpec({"bar": 2, "plot": 2}, max_labels_per_image=3).validate()


def test_label_sets_have_distinct_apis():
    spec = CorpusSpec({"bar": 30, "plot": 25, "hist": 5, "pie": 12}, max_labels_per_image=3, seed=1)
    for s in assign_label_sets(spec):
        assert len(s) == len(set(s)) and 1 <= len(s) <= 3


@pytest.mark.parametrize("state", range(10))
def test_bar_region_covers_three_percent(state):
    _, records = draw_kinds(["bar"], "A", state, variation=1.0)
    assert records[0].coverage(_axes_area()) >= 0.03


@pytest.mark.parametrize("state", range(5))
def test_line_and_scatter_both_drawn(state):
    vocab = ApiVocabulary(("bar", "plot", "scatter"))
    _, records = render_sample_with_log(encode_labels(["plot", "scatter"], vocab), vocab, "A", state)
    assert {r.kind for r in records} == {"line", "scatter"}
    R = Raster(64, 64)
    for r in records:
        assert r.n_pixels > 0
        top, left, bottom, right = r.bbox
        assert R.axes[top:bottom + 1, left:right + 1].any()


def test_render_deterministic():
    vocab = ApiVocabulary(("bar", "plot", "pie"))
    y = encode_labels(["bar", "pie"], vocab)
    assert np.array_equal(render_sample(y, vocab, "A", 42), render_sample(y, vocab, "A", 42))
    assert not np.array_equal(render_sample(y, vocab, "A", 42), render_sample(y, vocab, "A", 43))


def test_families_share_geometry_but_not_pixels():
    a_img, a_rec = draw_kinds(["line", "box"], "A", 9)
    b_img, b_rec = draw_kinds(["line", "box"], "B", 9)
    assert [(r.kind, r.n_pixels, r.bbox) for r in a_rec] == [(r.kind, r.n_pixels, r.bbox) for r in b_rec]
    assert not np.array_equal(a_img, b_img)


def test_in_family_translates_names():
    spec = CorpusSpec({"bar": 3, "plot": 3, "hist": 2}).in_family("B")
    assert list(spec.samples_per_api) == ["bar", "line", "histogram"]
    assert kind_of("line", "B") == "line"


def test_every_kind_renders_in_range():
    for kind in KINDS:
        img, rec = draw_kinds([kind], "B", 0, size=(48, 40))
        assert img.shape == (48, 40, 3)
        assert 0.0 <= img.min() and img.max() <= 1.0
        assert rec[0].n_pixels > 0


def test_spec_fingerprint_stable():
    a = CorpusSpec({"bar": 3, "plot": 3}, seed=1)
    b = CorpusSpec.from_dict(a.to_dict())
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != CorpusSpec({"bar": 3, "plot": 3}, seed=2).fingerprint()


def test_manifest_hash_reproducible(tmp_path):
    spec = CorpusSpec({"bar": 4, "stem": 4}, image_size=(24, 24), seed=2)
    digests = []
    for d in ("x", "y"):
        generate_corpus(spec, tmp_path / d)
        digests.append(hashlib.sha256((tmp_path / d / "manifest.jsonl").read_bytes()).hexdigest())
    assert digests[0] == digests[1]
