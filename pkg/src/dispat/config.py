"""Training configuration and the shipped ``paper`` / ``desk`` profiles."""
import dataclasses
import json
from dataclasses import dataclass
from importlib import resources

from .errors import ConfigError

ABLATIONS = ("no_brr", "no_drl", "zero_ref_bias", "fc_graph", "no_hier_emb")


@dataclass
class TrainConfig:
    k: int = 3
    n_max: int = 8
    w: int = 64
    d_h: int = 64
    heads: int = 4
    n_layers: int = 2
    d_g: int = None  # gate hidden width; None means d_h
    lr: float = 1e-3
    dropout: float = 0.1
    batch_size: int = 4
    max_steps: int = 3000
    eval_every: int = 500
    seed: int = 1
    max_level: int = 8
    ffn: bool = False
    ln_affine: bool = False
    detach_refs: bool = False
    w_sim: float = 1.0
    w_spe: float = 1.0
    w_clf: float = 1.0
    strict_claims: bool = False
    embedding: str = "hashed_ngram"
    embedding_path: str = None
    embedding_seed: int = 0
    bm25_k1: float = 1.5
    bm25_b: float = 0.75
    no_brr: bool = False
    no_drl: bool = False
    zero_ref_bias: bool = False
    fc_graph: bool = False
    no_hier_emb: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.d_h <= 0 or self.heads <= 0 or self.d_h % self.heads:
            raise ConfigError(f"d_h={self.d_h} must be a positive multiple of heads={self.heads}")
        for name in ("k", "n_max", "w", "batch_size"):
            if getattr(self, name) < (0 if name == "k" else 1):
                raise ConfigError(f"{name} out of range")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.n_layers < 0 or self.max_level < 0:
            raise ConfigError("n_layers and max_level must be non-negative")

    @property
    def gate_width(self):
        return self.d_g or self.d_h

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def profile(name):
    """Load a named profile (``paper`` or ``desk``) as a :class:`TrainConfig`."""
    try:
        text = resources.files("dispat").joinpath(f"data/profiles/{name}.json").read_text("utf-8")
    except FileNotFoundError:
        raise ConfigError(f"unknown profile {name!r}") from None
    return TrainConfig.from_dict(json.loads(text))


def load_config(path=None, profile_name=None, **overrides):
    """Profile values, then the JSON file, then explicit overrides."""
    data = profile(profile_name).to_dict() if profile_name else {}
    if path:
        with open(path, encoding="utf-8") as fh:
            data.update(json.load(fh))
    data.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig.from_dict(data)
