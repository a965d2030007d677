"""Flat key=value pipeline configuration."""

from dataclasses import dataclass, fields

from .downstream import MODE_MULTI, MODE_SINGLE
from .errors import ConfigError

_REQUIRED = ("corpus", "descriptions", "output_dir", "seed")


@dataclass
class PipelineConfig:
    """Every knob of the end-to-end run; the seed is mandatory."""

    corpus: str
    descriptions: str
    output_dir: str
    seed: int
    labels: str = None
    provider: str = "hash"
    embeddings: str = None
    keyword_embeddings: str = None
    description_embeddings: str = None
    tfidf_keep: int = None
    min_df: float = 0.001
    max_n: int = 3
    top_k: int = 300
    confident_fraction: float = 0.5
    hidden: int = 256
    learning_rate: float = 0.001
    batch_size: int = 128
    max_epochs: int = 20
    patience: int = 2
    dropout: float = 0.5
    self_train_epochs: int = 2
    label_model_lr: float = 0.01
    label_model_steps: int = 500
    prior: str = "uniform"
    mode: str = MODE_SINGLE
    threshold: float = 0.5
    bootstrap: int = 1000
    dims: int = 768
    hash_seed: int = 0

    def validate(self):
        checks = [
            (0 <= self.min_df < 1, "min_df must be in [0, 1)"),
            (1 <= self.max_n <= 3, "max_n must be 1, 2, or 3"),
            (self.top_k >= 1, "top_k must be >= 1"),
            (
                0 < self.confident_fraction <= 1,
                "confident_fraction must be in (0, 1]",
            ),
            (self.hidden >= 1, "hidden must be >= 1"),
            (self.learning_rate > 0, "learning_rate must be positive"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.max_epochs >= 1, "max_epochs must be >= 1"),
            (self.patience >= 1, "patience must be >= 1"),
            (0 <= self.dropout < 1, "dropout must be in [0, 1)"),
            (self.self_train_epochs >= 0, "self_train_epochs must be >= 0"),
            (self.label_model_lr > 0, "label_model_lr must be positive"),
            (self.label_model_steps >= 1, "label_model_steps must be >= 1"),
            (self.prior in ("uniform", "majority"), "prior must be uniform or majority"),
            (
                self.mode in (MODE_SINGLE, MODE_MULTI),
                f"mode must be {MODE_SINGLE} or {MODE_MULTI}",
            ),
            (0 <= self.threshold <= 1, "threshold must be in [0, 1]"),
            (self.bootstrap >= 1, "bootstrap must be >= 1"),
            (
                self.tfidf_keep is None or self.tfidf_keep >= 1,
                "tfidf_keep must be >= 1 when set",
            ),
            (self.dims >= 1, "dims must be >= 1"),
            (self.provider in ("hash", "file"), "provider must be hash or file"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if self.provider == "file":
            missing = [
                name
                for name in ("embeddings", "keyword_embeddings", "description_embeddings")
                if getattr(self, name) is None
            ]
            if missing:
                raise ConfigError(
                    f"provider=file requires {', '.join(missing)}"
                )
        return self

    def dumps(self):
        """Render back to the key=value format, omitting unset paths."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}
_INT_FIELDS = {
    name for name, t in _FIELD_TYPES.items() if t in (int, "int")
} | {"tfidf_keep"}
_FLOAT_FIELDS = {name for name, t in _FIELD_TYPES.items() if t in (float, "float")}


def parse_config_text(text, path="<config>"):
    """Parse "key = value" lines with # comments into a raw string dict."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path} line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path} line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path} line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def coerce_config(raw):
    """Coerce raw strings to field types and build a validated config."""
    kwargs = {}
    for key, value in raw.items():
        if value is None or not isinstance(value, str):
            kwargs[key] = value
            continue
        try:
            if key in _INT_FIELDS:
                kwargs[key] = int(value)
            elif key in _FLOAT_FIELDS:
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    missing = [name for name in _REQUIRED if kwargs.get(name) is None]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    return PipelineConfig(**kwargs).validate()


def load_config(path, overrides=None):
    """Read a config file, apply non-None overrides, validate."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = parse_config_text(fh.read(), path=str(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            raw[key] = value
    return coerce_config(raw)
