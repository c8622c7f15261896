"""Pipeline configuration: one JSON document, one section per stage."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import DEFAULT_TICKER_PATTERN
from .embedder import TrainConfig
from .errors import ConfigurationError
from .synth import SyntheticSpec


@dataclass(frozen=True)
class PathsConfig:
    prices: str = "data/prices.csv"
    news: str = "data/news.jsonl"
    labels: str = "data/labels.csv"
    output_dir: str = "run"
    price_format: str = "auto"


@dataclass(frozen=True)
class UniverseConfig:
    min_mentions: int = 50
    ticker_pattern: str = DEFAULT_TICKER_PATTERN


@dataclass(frozen=True)
class ContextsConfig:
    context_size: int = 3
    iqr_filter: bool = True


@dataclass(frozen=True)
class MultimodalConfig:
    normalize: bool = False


@dataclass(frozen=True)
class AnalyticsConfig:
    graph_threshold: float = 0.6
    knn_k: int = 3
    query: str | None = None
    metric: str = "cosine"
    mismatch_min_sim: float = 0.6
    mismatch_level: str = "sector1"
    gexf: bool = False


@dataclass(frozen=True)
class ClassifyConfig:
    k_folds: int = 4
    use_smote: bool = True
    smote_k: int = 5
    seed: int = 0
    reg_lambda: float = 1e-3
    lr: float = 0.01
    epochs: int = 200
    standardize: bool = True
    holdout: bool = True
    test_fraction: float = 0.25


@dataclass(frozen=True)
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    universe: UniverseConfig = field(default_factory=UniverseConfig)
    contexts: ContextsConfig = field(default_factory=ContextsConfig)
    train_returns: TrainConfig = field(default_factory=lambda: TrainConfig(seed=0))
    train_news: TrainConfig = field(default_factory=lambda: TrainConfig(seed=1))
    multimodal: MultimodalConfig = field(default_factory=MultimodalConfig)
    analytics: AnalyticsConfig = field(default_factory=AnalyticsConfig)
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    synth: SyntheticSpec = field(default_factory=SyntheticSpec)
    base_dir: str = field(default=".", compare=False)

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    @property
    def output_dir(self) -> Path:
        return self.resolve(self.paths.output_dir)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


SECTIONS = {f.name: f for f in dataclasses.fields(PipelineConfig) if f.name != "base_dir"}


def _section_type(name: str) -> type:
    return typing.get_type_hints(PipelineConfig)[name]


def _coerce(value, tp, where: str):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        tp = next(a for a in args if a is not type(None))
    if tp is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
    elif tp is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
    elif tp is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
    elif tp is str:
        if isinstance(value, str):
            return value
        return json.dumps(value) if not isinstance(value, (int, float)) else str(value)
    raise ConfigurationError(f"{where}: expected {getattr(tp, '__name__', tp)}, got {value!r}")


def _build_section(name: str, values: dict):
    cls = _section_type(name)
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(f"unknown keys in [{name}]: {unknown}")
    kwargs = {k: _coerce(v, hints[k], f"{name}.{k}") for k, v in values.items()}
    try:
        return cls(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"[{name}] {exc}") from None


def config_from_dict(data: dict, base_dir=".") -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigurationError(f"unknown config sections: {unknown}")
    sections = {}
    for name in SECTIONS:
        given = data.get(name, {})
        if not isinstance(given, dict):
            raise ConfigurationError(f"section [{name}] must be an object")
        default = SECTIONS[name].default_factory()
        merged = {**dataclasses.asdict(default), **given}
        sections[name] = _build_section(name, merged)
    return PipelineConfig(**sections, base_dir=str(base_dir))


def apply_overrides(data: dict, overrides: dict[str, object]) -> dict:
    """Return a copy of ``data`` with ``section.key`` overrides applied."""
    out = {k: dict(v) for k, v in data.items()}
    for dotted, value in overrides.items():
        section, _, key = dotted.partition(".")
        if section not in SECTIONS or not key:
            raise ConfigurationError(f"unknown config key {dotted!r}")
        out.setdefault(section, {})[key] = value
    return out


def load_config(path=None, overrides: dict[str, object] | None = None) -> PipelineConfig:
    """Read and fully validate a config file; ``path=None`` starts from defaults."""
    data: dict = {}
    base = Path(".")
    if path is not None:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        base = path.parent
    return config_from_dict(apply_overrides(data, overrides or {}), base)


def config_keys() -> list[tuple[str, type]]:
    """All ``section.key`` names with their declared types."""
    keys = []
    for name in SECTIONS:
        cls = _section_type(name)
        for f, tp in typing.get_type_hints(cls).items():
            keys.append((f"{name}.{f}", tp))
    return keys
