"""The network: feature learner, recommendation head, semantic translator
and relation comparator.

``SPGNN`` holds the four parameter groups as submodules ``backbone`` (phi),
``translator`` (psi), ``relation`` (vartheta) and ``head`` (omega). The
module-level functions are thin, shape-checked entry points used by the
trainer, the tests and the inference code.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import torch
from torch import nn

from .errors import DimensionMismatch, InvalidConfig, MissingFile, ShapeMismatch, WrongInputSize


@dataclass
class ModelConfig:
    num_apis: int
    feature_dim: int = 1536
    embedding_dim: int = 400
    relation_hidden: int = 256
    input_size: tuple = (300, 300)
    backbone: str = "small-cnn"
    channels: tuple = (32, 64, 128)
    translator_relu: bool = True
    seed: int = 0

    def __post_init__(self):
        self.input_size = tuple(self.input_size)
        self.channels = tuple(self.channels)
        for name in ("num_apis", "feature_dim", "embedding_dim", "relation_hidden"):
            if int(getattr(self, name)) <= 0:
                raise InvalidConfig(f"{name} must be positive")
        if self.backbone not in BACKBONES:
            raise InvalidConfig(f"unknown backbone {self.backbone!r}; registered: {sorted(BACKBONES)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input_size"] = list(self.input_size)
        d["channels"] = list(self.channels)
        return d

    @classmethod
    def from_dict(cls, d) -> "ModelConfig":
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None


class SmallCNN(nn.Module):
    """Four stride-2 conv/batch-norm/ReLU blocks and global average pooling."""

    def __init__(self, feature_dim: int, channels=(32, 64, 128)):
        super().__init__()
        widths = [3, *channels, feature_dim]
        layers = []
        for cin, cout in zip(widths[:-1], widths[1:]):
            layers += [nn.Conv2d(cin, cout, 3, stride=2, padding=1, bias=False), nn.BatchNorm2d(cout), nn.ReLU()]
        self.convs = nn.Sequential(*layers)
        self.feature_dim = feature_dim

    def forward(self, x):
        return self.convs(x).mean(dim=(2, 3))


BACKBONES: dict[str, Callable[["ModelConfig"], nn.Module]] = {
    "small-cnn": lambda cfg: SmallCNN(cfg.feature_dim, cfg.channels),
}


def register_backbone(name: str, factory: Callable[["ModelConfig"], nn.Module]) -> None:
    """Make an external feature extractor available as ``ModelConfig.backbone``.

    ``factory(config)`` must return a module mapping ``(B, 3, H, W)`` images
    to ``(B, config.feature_dim)`` pooled features.
    """
    BACKBONES[name] = factory


class RelationNet(nn.Module):
    """Scores each (true, translated) embedding pair with one shared MLP."""

    def __init__(self, embedding_dim: int, hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(2 * embedding_dim, hidden)
        self.fc2 = nn.Linear(hidden, 1)

    def forward(self, V, V_hat):
        pairs = torch.cat([V.expand_as(V_hat), V_hat], dim=-1)
        # One call per API rather than one GEMM over all rows: BLAS tail
        # handling depends on row position, which would make scores differ in
        # the last bits when APIs are permuted.
        scores = [self.fc2(torch.relu(self.fc1(pairs[..., j, :]))) for j in range(pairs.shape[-2])]
        return torch.cat(scores, dim=-1)


class SPGNN(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c, e, d = config.num_apis, config.embedding_dim, config.feature_dim
        self.backbone = BACKBONES[config.backbone](config)
        self.translator = nn.Linear(d, c * e)
        self.relation = RelationNet(e, config.relation_hidden)
        self.head = nn.Linear(d, c)

    def parameter_groups(self) -> dict[str, list[nn.Parameter]]:
        return {
            "phi": list(self.backbone.parameters()),
            "psi": list(self.translator.parameters()),
            "vartheta": list(self.relation.parameters()),
            "omega": list(self.head.parameters()),
        }

    def features(self, x):
        return self.backbone(x)

    def head_logits(self, f):
        return self.head(f)

    def translate(self, f):
        cfg = self.config
        v = self.translator(f)
        if cfg.translator_relu:
            v = torch.relu(v)
        return v.view(*f.shape[:-1], cfg.num_apis, cfg.embedding_dim)

    def relation_logits(self, V, V_hat):
        return self.relation(V, V_hat)

    def forward(self, x, V=None):
        """Both paths at once; the relation path is skipped without ``V``."""
        f = self.features(x)
        out = {"features": f, "head_logits": self.head_logits(f)}
        if V is not None:
            V_hat = self.translate(f)
            out["semantics"] = V_hat
            out["relation_logits"] = self.relation_logits(V, V_hat)
        return out


class RelationScores(NamedTuple):
    raw: torch.Tensor
    normalized: torch.Tensor


def init_parameters(config: ModelConfig, backbone_weights=None, dtype=torch.float32) -> SPGNN:
    """Build a model whose weights depend only on ``config.seed``."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        model = SPGNN(config)
    model.to(dtype)
    if backbone_weights is not None:
        load_backbone_weights(model, backbone_weights)
    return model


def load_backbone_weights(model: SPGNN, source) -> None:
    """Load phi from a state dict or a ``torch.save``-d file of one."""
    if not isinstance(source, dict):
        try:
            source = torch.load(source, map_location="cpu", weights_only=True)
        except FileNotFoundError:
            raise MissingFile(f"backbone weights not found: {source}") from None
    own = model.backbone.state_dict()
    if set(source) != set(own):
        raise ShapeMismatch(f"backbone keys differ: missing {sorted(set(own) - set(source))}, "
                            f"unexpected {sorted(set(source) - set(own))}")
    for k, v in own.items():
        if tuple(source[k].shape) != tuple(v.shape):
            raise ShapeMismatch(f"{k}: expected {tuple(v.shape)}, got {tuple(source[k].shape)}")
    model.backbone.load_state_dict(source)


def parameter_checksum(model: nn.Module) -> str:
    h = hashlib.sha256()
    for k, v in sorted(model.state_dict().items()):
        h.update(k.encode())
        h.update(v.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def images_to_tensor(images, dtype=torch.float32) -> torch.Tensor:
    """``(B, H, W, 3)`` numpy batch (or list of images) -> ``(B, 3, H, W)`` tensor."""
    if isinstance(images, torch.Tensor):
        return images.to(dtype)
    arr = np.stack([np.asarray(im) for im in images]) if isinstance(images, (list, tuple)) else np.asarray(images)
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2))).to(dtype)


def forward_features(model: SPGNN, images) -> torch.Tensor:
    x = images_to_tensor(images, dtype=next(model.parameters()).dtype)
    if tuple(x.shape[-2:]) != tuple(model.config.input_size) or x.shape[1] != 3:
        raise WrongInputSize(f"expected (B, 3, {model.config.input_size[0]}, {model.config.input_size[1]}) input, "
                             f"got {tuple(x.shape)}")
    return model.features(x)


def _check_features(model, f):
    if f.shape[-1] != model.config.feature_dim:
        raise ShapeMismatch(f"feature length {f.shape[-1]} != {model.config.feature_dim}")


def recommend_head(model: SPGNN, f: torch.Tensor) -> torch.Tensor:
    _check_features(model, f)
    return torch.sigmoid(model.head_logits(f))


def translate_semantics(model: SPGNN, f: torch.Tensor) -> torch.Tensor:
    _check_features(model, f)
    return model.translate(f)


def relation_scores(model: SPGNN, V, V_hat: torch.Tensor) -> RelationScores:
    V = torch.as_tensor(np.asarray(V) if not isinstance(V, torch.Tensor) else V, dtype=V_hat.dtype)
    if V.shape[-1] != V_hat.shape[-1] or V.shape[-1] != model.config.embedding_dim:
        raise DimensionMismatch(f"embedding sizes differ: V {tuple(V.shape)}, V_hat {tuple(V_hat.shape)}, "
                                f"model e={model.config.embedding_dim}")
    if V.shape[-2] != V_hat.shape[-2]:
        raise DimensionMismatch(f"API counts differ: V {tuple(V.shape)}, V_hat {tuple(V_hat.shape)}")
    s = model.relation_logits(V, V_hat)
    return RelationScores(s, torch.sigmoid(s))
