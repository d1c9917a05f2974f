from dataclasses import replace

import numpy as np
import pytest
import torch

from conftest import overfit_setup, tiny_model_config
from plot2api.dataset import ApiVocabulary, DatasetManifest, PlotSample, encode_labels
from plot2api.errors import InvalidConfig, NonFiniteLoss, UnmappableApi, VocabularyMismatch
from plot2api.model import ModelConfig, init_parameters
from plot2api.objective import cross_entropy_with_logits
from plot2api.plotgen import CorpusSpec, generate_corpus
from plot2api.semantics import build_api_semantics
from plot2api.trainer import (
    Checkpoint,
    TrainConfig,
    TrainingHistory,
    alpha_sweep,
    augmentation_ablation,
    cross_family_evaluate,
    evaluate,
    load_arrays,
    train,
)

@pytest.fixture(scope="module")
def overfit(tmp_path_factory):
    manifest, mcfg, tcfg, sem = overfit_setup(tmp_path_factory.mktemp("overfit"))
    return manifest, train(mcfg, tcfg, manifest, None, sem)


def test_overfit_fixture_size(overfit):
    manifest, result = overfit
    assert manifest.n == 32 and len(manifest.vocabulary) == 5
    assert len(result.history.steps) == 200


def test_overfit_loss_and_map(overfit):
    manifest, result = overfit
    steps = result.history.steps
    assert steps[-1]["total"] < steps[0]["total"]
    assert steps[-1]["total"] < 0.05 * steps[0]["total"]
    assert evaluate(result.final, manifest).map > 0.95


def test_history_monotone_and_finite(overfit):
    steps = overfit[1].history.steps
    assert [s["step"] for s in steps] == list(range(len(steps)))
    assert all(np.isfinite([s["l_vis"], s["l_sem"], s["total"]]).all() for s in steps)


def _sem(manifest, mcfg):
    return build_api_semantics(manifest.vocabulary, None, dim=mcfg.embedding_dim)


def test_alpha_zero_isolates_semantic_path(tiny_corpus):
    manifest, _ = tiny_corpus
    mcfg = tiny_model_config(len(manifest.vocabulary))
    model = init_parameters(mcfg)
    X, Y = load_arrays(manifest, mcfg.input_size)
    V = torch.as_tensor(_sem(manifest, mcfg).matrix, dtype=torch.float32)
    out = model(torch.as_tensor(X[:8].transpose(0, 3, 1, 2), dtype=torch.float32), V)
    y = torch.as_tensor(Y[:8], dtype=torch.float32)
    loss = cross_entropy_with_logits(out["head_logits"], y) + 0.0 * cross_entropy_with_logits(out["relation_logits"], y)
    loss.backward()
    groups = model.parameter_groups()
    for name in ("psi", "vartheta"):
        assert all(not p.grad.any() for p in groups[name])
    assert any(p.grad.any() for p in groups["omega"])

    # a whole run at alpha=0 leaves psi and vartheta at their initial values
    result = train(mcfg, TrainConfig(epochs=2, batch_size=16, alpha=0.0, augment=False), manifest, None,
                   _sem(manifest, mcfg))
    init = init_parameters(mcfg).state_dict()
    for k, v in result.final.state_dict.items():
        if k.startswith(("translator.", "relation.")):
            assert torch.equal(v, init[k]), k


def test_training_deterministic(tiny_corpus):
    manifest, _ = tiny_corpus
    mcfg = tiny_model_config(len(manifest.vocabulary))
    tcfg = TrainConfig(epochs=2, batch_size=16, seed=4)
    a = train(mcfg, tcfg, manifest, manifest, _sem(manifest, mcfg))
    b = train(mcfg, tcfg, manifest, manifest, _sem(manifest, mcfg))
    assert a.history == b.history
    assert a.final.fingerprint == b.final.fingerprint
    c = train(mcfg, replace(tcfg, seed=5), manifest, manifest, _sem(manifest, mcfg))
    assert c.history != a.history


def test_checkpoint_round_trip(tiny_run, tiny_corpus, tmp_path):
    manifest, _ = tiny_corpus
    ckpt = tiny_run.final
    ckpt.save(tmp_path / "c.pt")
    again = Checkpoint.load(tmp_path / "c.pt")
    X, _ = load_arrays(manifest, ckpt.model_config.input_size)
    x = torch.as_tensor(X[:6].transpose(0, 3, 1, 2), dtype=torch.float32)
    assert torch.equal(ckpt.model(x)["head_logits"], again.model(x)["head_logits"])
    assert again.fingerprint == ckpt.fingerprint
    assert again.vocabulary == ckpt.vocabulary
    assert again.train_config == ckpt.train_config
    assert again.semantics_fingerprint == ckpt.semantics_fingerprint


def test_checkpoint_load_rejects_other_files(tmp_path):
    torch.save({"weights": 1}, tmp_path / "x.pt")
    with pytest.raises(InvalidConfig):
        Checkpoint.load(tmp_path / "x.pt")


def test_best_checkpoint_tracks_eval(tiny_run):
    evals = tiny_run.history.evals
    assert len(evals) == 3
    best = max(evals, key=lambda e: e["map"])
    assert tiny_run.best.epoch == best["epoch"]


def test_history_jsonl_round_trip(tiny_run, tmp_path):
    tiny_run.history.write_jsonl(tmp_path / "h.jsonl")
    assert TrainingHistory.read_jsonl(tmp_path / "h.jsonl") == tiny_run.history


def test_vocabulary_mismatch(tmp_path):
    names5 = ("bar", "plot", "scatter", "hist", "pie")
    names7 = names5 + ("stem", "step")
    cfg = ModelConfig(num_apis=5, feature_dim=16, embedding_dim=8, relation_hidden=8, input_size=(16, 16),
                      channels=(4, 4, 4))
    ckpt = Checkpoint(cfg, ApiVocabulary(names5), init_parameters(cfg).state_dict(), 0)
    v7 = ApiVocabulary(names7)
    eval_set = DatasetManifest(v7, (PlotSample("x", np.zeros((16, 16, 3)), encode_labels(["bar"], v7)),))
    with pytest.raises(VocabularyMismatch):
        evaluate(ckpt, eval_set)


def test_semantics_vocabulary_mismatch(tiny_corpus):
    manifest, _ = tiny_corpus
    mcfg = tiny_model_config(len(manifest.vocabulary))
    other = build_api_semantics(ApiVocabulary(("a", "b", "c", "d", "e")), None, dim=mcfg.embedding_dim)
    with pytest.raises(VocabularyMismatch):
        train(mcfg, TrainConfig(epochs=1), manifest, None, other)


def test_non_finite_loss_aborts(tiny_corpus):
    manifest, _ = tiny_corpus
    mcfg = tiny_model_config(len(manifest.vocabulary))
    X, Y = load_arrays(manifest, mcfg.input_size)
    X[3] = np.nan
    with pytest.raises(NonFiniteLoss) as exc:
        train(mcfg, TrainConfig(epochs=1, batch_size=64, augment=False), manifest, None, _sem(manifest, mcfg),
              arrays=(X, Y))
    assert exc.value.step == 0
    assert set(exc.value.components) == {"l_vis", "l_sem", "total"}


def test_config_invariants():
    for bad in (dict(epochs=0), dict(batch_size=0), dict(alpha=-1.0)):
        with pytest.raises(InvalidConfig):
            TrainConfig(**bad)


def test_chance_band(tmp_path):
    spec = CorpusSpec({"bar": 40, "plot": 40}, max_labels_per_image=1, image_size=(32, 32), seed=0)
    manifest = generate_corpus(spec, tmp_path)
    arrays = load_arrays(manifest, (32, 32))
    maps = []
    for seed in range(20):
        cfg = ModelConfig(num_apis=2, feature_dim=32, embedding_dim=8, relation_hidden=8, input_size=(32, 32),
                          channels=(8, 16, 16), seed=seed)
        ckpt = Checkpoint(cfg, manifest.vocabulary, init_parameters(cfg).state_dict(), 0)
        maps.append(evaluate(ckpt, manifest, arrays=arrays).map)
    assert 0.35 <= float(np.mean(maps)) <= 0.65


class TestHarnesses:
    def test_alpha_sweep_shapes(self, tiny_corpus):
        manifest, _ = tiny_corpus
        mcfg = tiny_model_config(len(manifest.vocabulary))
        tcfg = TrainConfig(epochs=1, batch_size=16, augment=False)
        res = alpha_sweep(mcfg, tcfg, manifest, [1])
        assert list(res) == [1.0]
        res = alpha_sweep(mcfg, tcfg, manifest, [0, 1])
        assert list(res) == [0.0, 1.0]
        assert all(len(r.per_api) == 5 for r in res.values())
        with pytest.raises(InvalidConfig):
            alpha_sweep(mcfg, tcfg, manifest, [])

    def test_ablation_two_reports(self, tiny_corpus):
        manifest, _ = tiny_corpus
        mcfg = tiny_model_config(len(manifest.vocabulary))
        res = augmentation_ablation(mcfg, TrainConfig(epochs=1, batch_size=16), manifest)
        assert list(res) == ["off", "on"]
        assert all(len(r.per_api) == 5 for r in res.values())


class TestCrossFamily:
    def test_three_api_map(self, tiny_run, tmp_path):
        spec_b = CorpusSpec({"bar": 6, "boxplot": 6, "line": 6, "point": 4}, image_size=(32, 32), family="B", seed=8)
        eval_b = generate_corpus(spec_b, tmp_path)
        rep = cross_family_evaluate(tiny_run.final, eval_b, {"bar": "bar", "boxplot": "boxplot", "plot": "line"})
        assert list(rep.per_api) == ["bar", "boxplot", "plot"]
        assert rep.counts == {"bar": 6, "boxplot": 6, "plot": 6}

    def test_identity_matches_plain(self, tiny_run, tiny_corpus):
        manifest, _ = tiny_corpus
        names = list(manifest.vocabulary.names)
        plain = evaluate(tiny_run.final, manifest)
        same = cross_family_evaluate(tiny_run.final, manifest, {n: n for n in names})
        assert same == plain
        sub = cross_family_evaluate(tiny_run.final, manifest, {"bar": "bar", "hist": "hist"})
        assert sub.per_api == {k: plain.per_api[k] for k in ("bar", "hist")}

    def test_unmappable(self, tiny_run, tiny_corpus):
        manifest, _ = tiny_corpus
        with pytest.raises(UnmappableApi):
            cross_family_evaluate(tiny_run.final, manifest, {"plot": "line"})
        with pytest.raises(UnmappableApi):
            cross_family_evaluate(tiny_run.final, manifest, {"pie": "bar"})
