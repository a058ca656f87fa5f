"""Model and training configuration."""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field

VARIANTS = ("dual", "pureloop", "purewide")


class ConfigError(ValueError):
    """A configuration value violates its contract."""


@dataclass
class ModelConfig:
    """Backbone geometry plus the block variant that fills each layer."""

    L: int = 4
    d: int = 64
    h_q: int = 4
    h_kv: int = 4
    vocab: int = 256
    t_max: int = 128
    rope_base: float = 10000.0
    tie_embeddings: bool = False
    variant: str = "dual"
    k: int = 4
    d_ffn_deep: int | None = 128
    d_ffn_wide: int | None = 256
    eps: float = 1e-6

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.d % self.h_q != 0:
            raise ConfigError(f"d={self.d} not divisible by h_q={self.h_q}")
        if self.h_q % self.h_kv != 0:
            raise ConfigError(f"h_q={self.h_q} not divisible by h_kv={self.h_kv}")
        if self.L < 1 or self.k < 1 or self.vocab < 1 or self.t_max < 1:
            raise ConfigError("L, k, vocab, and t_max must be positive")
        if self.variant in ("dual", "pureloop"):
            self._check_width("d_ffn_deep", self.d_ffn_deep)
        if self.variant in ("dual", "purewide"):
            self._check_width("d_ffn_wide", self.d_ffn_wide)
        if self.variant == "purewide" and self.k != 1:
            raise ConfigError("purewide has no loop; k must be 1")

    @staticmethod
    def _check_width(name: str, value) -> None:
        if value is None or value <= 0 or value % 64 != 0:
            raise ConfigError(f"{name} must be a positive multiple of 64, got {value}")

    @property
    def n_rep(self) -> int:
        return self.h_q // self.h_kv

    @property
    def d_head(self) -> int:
        return self.d // self.h_q

    def hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class TrainConfig:
    """Optimizer, schedule, batching, and run bookkeeping."""

    total_steps: int = 2000
    warmup_steps: int = 100
    init_lr: float = 5e-6
    peak_lr: float = 5e-4
    final_lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.95
    eps: float = 1e-8
    weight_decay: float = 0.3
    grad_clip: float = 1.0
    batch_size: int = 8
    seq_len: int = 128
    seed: int = 0
    precision: str = "float32"
    checkpoint_every: int = 500
    log_every: int = 10
    holdout_bytes: int = 65536

    def __post_init__(self):
        if self.precision not in ("float32", "float64"):
            raise ConfigError(f"precision must be float32 or float64, got {self.precision!r}")
        if not (0 < self.warmup_steps <= self.total_steps):
            raise ConfigError("need 0 < warmup_steps <= total_steps")
        if self.batch_size < 1 or self.seq_len < 1:
            raise ConfigError("batch_size and seq_len must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce_field(cls, name: str, raw: str):
    hints = cls.__dataclass_fields__
    if name not in hints:
        raise ConfigError(f"unknown {cls.__name__} option {name!r}")
    target = hints[name].type
    raw = raw.strip()
    if "bool" in target:
        if raw.lower() not in _BOOL:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if "int" in target:
        if raw.lower() in ("none", ""):
            return None
        return int(float(raw)) if ("e" in raw.lower() or "." in raw) else int(raw)
    if "float" in target:
        return float(raw)
    return raw


def load_config_file(path: str) -> tuple[ModelConfig, TrainConfig, dict]:
    """Parse an INI file with [model], [train], and optional [budget] sections.

    [budget] (keys: budget, alpha) asks the width solver to fill any widths
    the [model] section leaves out; the caller applies it.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    model_kwargs = {}
    if parser.has_section("model"):
        for key, raw in parser.items("model"):
            model_kwargs[key] = _coerce_field(ModelConfig, key, raw)
    train_kwargs = {}
    if parser.has_section("train"):
        for key, raw in parser.items("train"):
            train_kwargs[key] = _coerce_field(TrainConfig, key, raw)
    budget = {}
    if parser.has_section("budget"):
        for key, raw in parser.items("budget"):
            if key not in ("budget", "alpha"):
                raise ConfigError(f"unknown [budget] option {key!r}")
            budget[key] = float(raw)
    if "d_ffn_deep" not in model_kwargs and budget:
        model_kwargs.setdefault("d_ffn_deep", None)
    if "d_ffn_wide" not in model_kwargs and budget:
        model_kwargs.setdefault("d_ffn_wide", None)
    if budget:
        from .flops import solve_widths

        variant = model_kwargs.get("variant", "dual")
        sol = solve_widths(
            budget=budget["budget"],
            variant=variant,
            k=model_kwargs.get("k", 1),
            alpha=budget.get("alpha"),
            d=model_kwargs.get("d", ModelConfig.d),
            n_rep=1,
        )
        if model_kwargs.get("d_ffn_deep") is None and "d_ffn" in sol:
            model_kwargs["d_ffn_deep"] = sol["d_ffn"]
        if model_kwargs.get("d_ffn_wide") is None and "d_ffn_wide" in sol:
            model_kwargs["d_ffn_wide"] = sol["d_ffn_wide"]
    model = ModelConfig(**model_kwargs)
    train = TrainConfig(**train_kwargs)
    return model, train, budget
