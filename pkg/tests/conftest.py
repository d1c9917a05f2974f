import json

import numpy as np
import pytest

from plot2api.dataset import ApiVocabulary
from plot2api.model import ModelConfig
from plot2api.plotgen import CorpusSpec, generate_corpus
from plot2api.semantics import build_api_semantics
from plot2api.trainer import TrainConfig, train

TINY_COUNTS = {"bar": 12, "plot": 12, "scatter": 10, "boxplot": 8, "hist": 8}
OVERFIT_COUNTS = {"bar": 10, "plot": 10, "scatter": 10, "hist": 8, "boxplot": 8}

# per-criterion outcome lines, printed at the end of the session
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    n = marker.args[0]
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if rep.passed else "FAIL"
    prev = _CRITERIA.get(n)
    if prev is None or prev[0] == "PASS":
        _CRITERIA[n] = (status, detail or (prev[1] if prev else ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {detail}")


def tiny_model_config(c, seed=0):
    return ModelConfig(num_apis=c, feature_dim=32, embedding_dim=16, relation_hidden=16,
                       input_size=(32, 32), channels=(8, 16, 16), seed=seed)


def overfit_setup(out_dir):
    """32 images, 5 APIs; seed 1 is the first whose label grouping gives exactly 32."""
    spec = CorpusSpec(dict(OVERFIT_COUNTS), max_labels_per_image=2, image_size=(32, 32), seed=1, variation=0.5)
    manifest = generate_corpus(spec, out_dir)
    mcfg = ModelConfig(num_apis=5, feature_dim=64, embedding_dim=32, relation_hidden=32,
                       input_size=(32, 32), channels=(16, 32, 64))
    tcfg = TrainConfig(epochs=200, batch_size=32, augment=False)
    return manifest, mcfg, tcfg, build_api_semantics(manifest.vocabulary, None, dim=32)


@pytest.fixture
def vocab3():
    return ApiVocabulary(("bar", "barh", "plot"))


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_corpus")
    spec = CorpusSpec(dict(TINY_COUNTS), max_labels_per_image=2, image_size=(32, 32), seed=5, variation=0.3)
    return generate_corpus(spec, out), out


@pytest.fixture(scope="session")
def tiny_run(tiny_corpus):
    """A few epochs on the tiny corpus; shared by inference/service tests."""
    manifest, _ = tiny_corpus
    c = len(manifest.vocabulary)
    mcfg = tiny_model_config(c)
    tcfg = TrainConfig(epochs=3, batch_size=16, lr=3e-3, beta1=0.9, augment=False, seed=0)
    sem = build_api_semantics(manifest.vocabulary, None, dim=mcfg.embedding_dim)
    return train(mcfg, tcfg, manifest, manifest, sem)


@pytest.fixture
def write_vocab_manifest(tmp_path):
    """Write a vocabulary and manifest rows (dicts or raw strings) to tmp_path."""

    def _write(vocab, rows):
        vp = tmp_path / "vocab.txt"
        vp.write_text("\n".join(vocab) + "\n")
        mp = tmp_path / "manifest.jsonl"
        lines = [r if isinstance(r, str) else json.dumps(r) for r in rows]
        mp.write_text("\n".join(lines) + "\n")
        return mp, vp

    return _write


def random_image(rng, h=16, w=16):
    return rng.random((h, w, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
