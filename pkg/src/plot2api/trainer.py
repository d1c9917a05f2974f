"""Training loop, checkpoints, evaluation and the comparison harnesses."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import torch

from .augment import AugmentConfig, eval_transform, sample_rng, train_transform
from .dataset import ApiVocabulary, DatasetManifest, stratified_split
from .errors import InvalidConfig, MissingFile, NonFiniteLoss, UnmappableApi, VocabularyMismatch
from .metrics import ApReport, evaluate_map
from .model import SPGNN, ModelConfig, images_to_tensor, init_parameters, parameter_checksum
from .objective import cross_entropy_with_logits
from .semantics import ApiSemanticsMatrix, build_api_semantics

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "plot2api-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.99
    beta2: float = 0.999
    weight_decay: float = 0.0
    alpha: float = 1.0
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    seed: int = 0
    eval_every: int = 1
    max_steps: int | None = None
    eval_batch_size: int = 64

    def __post_init__(self):
        if isinstance(self.augment, Mapping):
            self.augment = AugmentConfig.from_dict(self.augment)
        elif isinstance(self.augment, bool):
            self.augment = AugmentConfig(enabled=self.augment)
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfig("epochs and batch_size must be >= 1")
        if self.alpha < 0:
            raise InvalidConfig("alpha must be >= 0")
        if self.eval_every < 1:
            raise InvalidConfig("eval_every must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["augment"]["erase"]["area_range"] = list(self.augment.erase.area_range)
        d["augment"]["erase"]["aspect_range"] = list(self.augment.erase.aspect_range)
        return d

    @classmethod
    def from_dict(cls, d) -> "TrainConfig":
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None


def desk_profile(num_apis: int, seed: int = 0) -> tuple[ModelConfig, TrainConfig]:
    """Small configuration that trains on a CPU in well under a minute."""
    return (
        ModelConfig(num_apis=num_apis, feature_dim=128, embedding_dim=64, relation_hidden=64,
                    input_size=(64, 64), channels=(16, 32, 64), seed=seed),
        TrainConfig(epochs=20, batch_size=32, lr=1e-3, seed=seed),
    )


def paper_profile(num_apis: int, seed: int = 0) -> tuple[ModelConfig, TrainConfig]:
    return ModelConfig(num_apis=num_apis, seed=seed), TrainConfig(seed=seed)


def load_run_config(path) -> tuple[dict, dict]:
    """Read ``{"model": {...}, "train": {...}}`` from a JSON file."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"config not found: {path}")
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
    return dict(d.get("model", {})), dict(d.get("train", {}))


# --------------------------------------------------------------------------
# checkpoints


@dataclass
class Checkpoint:
    model_config: ModelConfig
    vocabulary: ApiVocabulary
    state_dict: dict
    epoch: int
    train_config: dict = field(default_factory=dict)
    semantics_fingerprint: str = ""
    semantics_provenance: dict = field(default_factory=dict)
    version: int = CHECKPOINT_VERSION

    @cached_property
    def model(self) -> SPGNN:
        m = init_parameters(replace(self.model_config))
        m.load_state_dict(self.state_dict)
        m.eval()
        for p in m.parameters():
            p.requires_grad_(False)
        return m

    @cached_property
    def fingerprint(self) -> str:
        return parameter_checksum(self.model)[:16]

    def save(self, path) -> None:
        torch.save({
            "format": CHECKPOINT_FORMAT,
            "version": self.version,
            "model_config": self.model_config.to_dict(),
            "train_config": json.dumps(self.train_config),
            "vocabulary": list(self.vocabulary.names),
            "vocabulary_hash": self.vocabulary.fingerprint(),
            "semantics_fingerprint": self.semantics_fingerprint,
            "semantics_provenance": json.dumps(self.semantics_provenance),
            "epoch": self.epoch,
            "state_dict": self.state_dict,
        }, path)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"checkpoint not found: {path}")
        d = torch.load(path, map_location="cpu", weights_only=True)
        if d.get("format") != CHECKPOINT_FORMAT:
            raise InvalidConfig(f"{path} is not a checkpoint file")
        if d["version"] > CHECKPOINT_VERSION:
            raise InvalidConfig(f"checkpoint version {d['version']} is newer than supported {CHECKPOINT_VERSION}")
        return cls(
            model_config=ModelConfig.from_dict(d["model_config"]),
            vocabulary=ApiVocabulary(tuple(d["vocabulary"])),
            state_dict=d["state_dict"],
            epoch=d["epoch"],
            train_config=json.loads(d["train_config"]),
            semantics_fingerprint=d["semantics_fingerprint"],
            semantics_provenance=json.loads(d["semantics_provenance"]),
            version=d["version"],
        )


@dataclass
class TrainingHistory:
    steps: list = field(default_factory=list)
    evals: list = field(default_factory=list)

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.steps:
                fh.write(json.dumps({"type": "step", **rec}) + "\n")
            for rec in self.evals:
                fh.write(json.dumps({"type": "eval", **rec}) + "\n")

    @classmethod
    def read_jsonl(cls, path) -> "TrainingHistory":
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"history not found: {path}")
        hist = cls()
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                kind = rec.pop("type")
                (hist.steps if kind == "step" else hist.evals).append(rec)
        return hist


@dataclass
class TrainResult:
    final: Checkpoint
    best: Checkpoint | None
    history: TrainingHistory


# --------------------------------------------------------------------------
# data


def load_arrays(manifest: DatasetManifest, size) -> tuple[np.ndarray, np.ndarray]:
    """All images resized to ``size`` as one ``(N, H, W, 3)`` array, plus labels."""
    h, w = size
    imgs = np.empty((manifest.n, h, w, 3))
    for i, s in enumerate(manifest.samples):
        imgs[i] = eval_transform(s.load_image(), size)
    return imgs, manifest.label_matrix().astype(np.float64)


@torch.no_grad()
def predict_scores(model: SPGNN, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Recommendation-path probabilities; the relation path is not used."""
    model.eval()
    dtype = next(model.parameters()).dtype
    out = []
    for i in range(0, len(images), batch_size):
        x = images_to_tensor(images[i:i + batch_size], dtype)
        out.append(torch.sigmoid(model.head_logits(model.features(x))).double().numpy())
    if not out:
        return np.zeros((0, model.config.num_apis))
    return np.concatenate(out)


def _check_finite(step, l_vis, l_sem, total):
    vals = {"l_vis": l_vis.item(), "l_sem": l_sem.item(), "total": total.item()}
    if not all(math.isfinite(v) for v in vals.values()):
        raise NonFiniteLoss(step, vals)


def train(model_cfg: ModelConfig, train_cfg: TrainConfig, train_set: DatasetManifest,
          eval_set: DatasetManifest | None, semantics: ApiSemanticsMatrix, *,
          arrays=None, eval_arrays=None) -> TrainResult:
    """Optimise both losses jointly with Adam.

    Every epoch visits the training set once in a seeded order, each batch
    takes one optimiser step, and evaluation on ``eval_set`` (if given) runs
    every ``eval_every`` epochs and after the last one. Returns the final
    checkpoint and the one with the best evaluation mAP.
    """
    vocab = train_set.vocabulary
    if semantics.vocabulary != vocab:
        raise VocabularyMismatch("semantics matrix was built for a different vocabulary")
    if eval_set is not None and eval_set.vocabulary != vocab:
        raise VocabularyMismatch("train and eval sets use different vocabularies")
    if model_cfg.num_apis != len(vocab):
        raise InvalidConfig(f"model has {model_cfg.num_apis} outputs but the vocabulary has {len(vocab)} APIs")
    if semantics.dim != model_cfg.embedding_dim:
        raise InvalidConfig(f"semantics dimension {semantics.dim} != embedding_dim {model_cfg.embedding_dim}")

    size = model_cfg.input_size
    X, Y = arrays if arrays is not None else load_arrays(train_set, size)
    if eval_set is not None:
        eval_arrays = eval_arrays if eval_arrays is not None else load_arrays(eval_set, size)

    model = init_parameters(model_cfg)
    V = torch.as_tensor(semantics.matrix, dtype=torch.float32)
    opt = torch.optim.Adam(model.parameters(), lr=train_cfg.lr, betas=(train_cfg.beta1, train_cfg.beta2),
                           weight_decay=train_cfg.weight_decay)
    alpha = train_cfg.alpha
    aug = train_cfg.augment
    hist = TrainingHistory()
    best_map, best_state, best_epoch = -1.0, None, None
    n = len(X)
    step = 0
    meta = dict(train_config=train_cfg.to_dict(), semantics_fingerprint=semantics.fingerprint(),
                semantics_provenance=dict(semantics.provenance))

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(train_cfg.seed)
        for epoch in range(train_cfg.epochs):
            model.train()
            order = np.random.default_rng([train_cfg.seed, epoch, 0x5EED]).permutation(n)
            for start in range(0, n, train_cfg.batch_size):
                idx = order[start:start + train_cfg.batch_size]
                batch = np.stack([train_transform(X[i], size, aug, sample_rng(train_cfg.seed, epoch, int(i)))
                                  for i in idx])
                x = images_to_tensor(batch)
                y = torch.as_tensor(Y[idx], dtype=torch.float32)
                out = model(x, V)
                l_vis = cross_entropy_with_logits(out["head_logits"], y, check_finite=False)
                l_sem = cross_entropy_with_logits(out["relation_logits"], y, check_finite=False)
                total = l_vis + alpha * l_sem
                _check_finite(step, l_vis, l_sem, total)
                opt.zero_grad(set_to_none=False)
                total.backward()
                opt.step()
                hist.steps.append({"step": step, "epoch": epoch, "l_vis": l_vis.item(),
                                   "l_sem": l_sem.item(), "total": total.item()})
                step += 1
                if train_cfg.max_steps is not None and step >= train_cfg.max_steps:
                    break
            done = train_cfg.max_steps is not None and step >= train_cfg.max_steps
            last = done or epoch == train_cfg.epochs - 1
            if eval_set is not None and ((epoch + 1) % train_cfg.eval_every == 0 or last):
                rep = evaluate_map(predict_scores(model, eval_arrays[0], train_cfg.eval_batch_size),
                                   eval_arrays[1], vocab)
                hist.evals.append({"epoch": epoch, "step": step, **rep.to_dict()})
                log.info("epoch %d step %d mAP %.4f", epoch, step, rep.map)
                if rep.map > best_map:
                    best_map, best_epoch = rep.map, epoch
                    best_state = copy.deepcopy(model.state_dict())
            if done:
                break

    final = Checkpoint(model_cfg, vocab, copy.deepcopy(model.state_dict()), epoch, **meta)
    best = Checkpoint(model_cfg, vocab, best_state, best_epoch, **meta) if best_state is not None else None
    return TrainResult(final, best, hist)


# --------------------------------------------------------------------------
# evaluation


def _scores(checkpoint: Checkpoint, eval_set: DatasetManifest, arrays=None):
    X, Y = arrays if arrays is not None else load_arrays(eval_set, checkpoint.model_config.input_size)
    return predict_scores(checkpoint.model, X), Y


def evaluate(checkpoint: Checkpoint, eval_set: DatasetManifest, arrays=None) -> ApReport:
    if checkpoint.vocabulary != eval_set.vocabulary:
        raise VocabularyMismatch(
            f"checkpoint has {len(checkpoint.vocabulary)} APIs {list(checkpoint.vocabulary)}, "
            f"eval set has {len(eval_set.vocabulary)} {list(eval_set.vocabulary)}")
    P, Y = _scores(checkpoint, eval_set, arrays)
    return evaluate_map(P, Y, eval_set.vocabulary)


def cross_family_evaluate(checkpoint: Checkpoint, eval_set: DatasetManifest,
                          shared_api_map: Mapping[str, str], arrays=None) -> ApReport:
    """Score checkpoint APIs against differently named eval-set APIs.

    ``shared_api_map`` sends checkpoint API names to eval-set API names; the
    report covers the mapped APIs only, keyed by checkpoint name.
    """
    if not shared_api_map:
        raise UnmappableApi("empty API map")
    for src, dst in shared_api_map.items():
        if src not in checkpoint.vocabulary:
            raise UnmappableApi(src)
        if dst not in eval_set.vocabulary:
            raise UnmappableApi(dst)
    P, Y = _scores(checkpoint, eval_set, arrays)
    src = [checkpoint.vocabulary.index(s) for s in shared_api_map]
    dst = [eval_set.vocabulary.index(d) for d in shared_api_map.values()]
    return evaluate_map(P[:, src], Y[:, dst], list(shared_api_map))


# --------------------------------------------------------------------------
# comparisons


def _prepare(model_cfg, dataset, test_fraction, split_seed, semantics):
    train_set, test_set = stratified_split(dataset, test_fraction, split_seed)
    if semantics is None:
        semantics = build_api_semantics(dataset.vocabulary, None, dim=model_cfg.embedding_dim)
    size = model_cfg.input_size
    return train_set, test_set, semantics, load_arrays(train_set, size), load_arrays(test_set, size)


def _fit_and_score(model_cfg, train_cfg, prepared) -> ApReport:
    train_set, test_set, semantics, tr_arrays, te_arrays = prepared
    result = train(model_cfg, train_cfg, train_set, None, semantics, arrays=tr_arrays)
    return evaluate(result.final, test_set, arrays=te_arrays)


def alpha_sweep(model_cfg: ModelConfig, train_cfg: TrainConfig, dataset: DatasetManifest,
                alphas: Sequence[float], *, test_fraction: float = 0.2, split_seed: int | None = None,
                semantics: ApiSemanticsMatrix | None = None) -> dict[float, ApReport]:
    """Train once per alpha on the same split and seeds; score the final model on held-out data."""
    alphas = list(alphas)
    if not alphas:
        raise InvalidConfig("alphas must not be empty")
    if any(a < 0 for a in alphas):
        raise InvalidConfig("alphas must be >= 0")
    split_seed = train_cfg.seed if split_seed is None else split_seed
    prepared = _prepare(model_cfg, dataset, test_fraction, split_seed, semantics)
    return {float(a): _fit_and_score(model_cfg, replace(train_cfg, alpha=float(a)), prepared) for a in alphas}


def augmentation_ablation(model_cfg: ModelConfig, train_cfg: TrainConfig, dataset: DatasetManifest, *,
                          test_fraction: float = 0.2, split_seed: int | None = None,
                          semantics: ApiSemanticsMatrix | None = None) -> dict[str, ApReport]:
    """Same run with augmentation off and on."""
    split_seed = train_cfg.seed if split_seed is None else split_seed
    prepared = _prepare(model_cfg, dataset, test_fraction, split_seed, semantics)
    out = {}
    for label, enabled in (("off", False), ("on", True)):
        cfg = replace(train_cfg, augment=replace(train_cfg.augment, enabled=enabled))
        out[label] = _fit_and_score(model_cfg, cfg, prepared)
    return out


def config_digest(*objs) -> str:
    blob = json.dumps([o.to_dict() if hasattr(o, "to_dict") else o for o in objs], sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
