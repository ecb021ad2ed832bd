"""Pipeline configuration: a flat sectioned key=value file.

Format: `[section]` headers, `key = value` lines, `#` comments, blank
lines ignored. Every key belongs to a fixed schema; unknown sections or
keys are rejected with their line number. parse(render(config)) is the
identity, and a freshly rendered default config carries the training
hyper-parameters verbatim so manifests can echo them bit-for-bit even
though training itself happens outside this toolkit.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any

from .errors import ConfigError


@dataclass
class PipelineConfig:
    # [data]
    src_lang: str = "zh"
    tgt_lang: str = "vi"
    bitext_src: str = ""
    bitext_tgt: str = ""
    mono: str = ""
    eval_src: str = ""
    valid_hyp: str = ""
    valid_ref: str = ""
    test_hyp: str = ""
    test_ref: str = ""
    workdir: str = "runs"
    # [pipeline]
    stages: tuple[str, ...] = ("stats",)
    threads: int = 1
    backend: str = "cipher"
    upsample_bitext: int = 1
    # [filter]
    min_len: int = 10
    max_len: int = 60
    # [sample]
    sample_size: int = 0
    sample_seed: int = 1
    # [subword]
    n_merges: int = 0
    spm_model: str = ""
    # [checkpoint]
    checkpoint: str = ""
    embed_name: str = "embed_tokens"
    n_last: int = 5
    # [backtranslation]
    k: int = 5
    seed: int = 1
    pf_min_len: int = 1
    pf_max_len: int = 0
    pf_max_len_ratio: float = 1.5
    pf_drop_empty: bool = True
    pf_drop_src_eq_tgt: bool = True
    # [training] passthrough block, recorded in manifests
    max_updates: int = 120000
    patience: int = 10
    optimizer: str = "adam"
    adam_eps: float = 1e-06
    adam_betas: tuple[float, float] = (0.9, 0.98)
    warmup_updates: int = 2500
    learning_rate: float = 3e-05
    dropout: float = 0.3
    attention_dropout: float = 0.1
    max_tokens: int = 1024
    save_interval_updates: int = 5000


# section -> ordered keys; every key is a PipelineConfig field of the same name.
SCHEMA: dict[str, tuple[str, ...]] = {
    "data": (
        "src_lang", "tgt_lang", "bitext_src", "bitext_tgt", "mono", "eval_src",
        "valid_hyp", "valid_ref", "test_hyp", "test_ref", "workdir",
    ),
    "pipeline": ("stages", "threads", "backend", "upsample_bitext"),
    "filter": ("min_len", "max_len"),
    "sample": ("sample_size", "sample_seed"),
    "subword": ("n_merges", "spm_model"),
    "checkpoint": ("checkpoint", "embed_name", "n_last"),
    "backtranslation": (
        "k", "seed", "pf_min_len", "pf_max_len", "pf_max_len_ratio",
        "pf_drop_empty", "pf_drop_src_eq_tgt",
    ),
    "training": (
        "max_updates", "patience", "optimizer", "adam_eps", "adam_betas",
        "warmup_updates", "learning_rate", "dropout", "attention_dropout",
        "max_tokens", "save_interval_updates",
    ),
}

KNOWN_STAGES = ("stats", "filter", "sample", "backtranslate", "merge", "prune", "score", "postedit")

_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_render_value(v) for v in value)
    if isinstance(value, str):
        return value
    raise ConfigError(f"cannot render config value {value!r}")


def _parse_value(key: str, raw: str, line_no: int) -> Any:
    kind = _FIELD_TYPES[key]
    try:
        if kind == "bool":
            if raw not in ("true", "false"):
                raise ValueError("expected true or false")
            return raw == "true"
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "tuple[str, ...]":
            return tuple(part.strip() for part in raw.split(",") if part.strip())
        if kind == "tuple[float, float]":
            parts = [part.strip() for part in raw.split(",")]
            if len(parts) != 2:
                raise ValueError("expected two comma-separated numbers")
            return (float(parts[0]), float(parts[1]))
        return raw
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: field '{key}': {exc}") from exc


def render_config(cfg: PipelineConfig) -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_render_value(getattr(cfg, key))}")
        lines.append("")
    return "\n".join(lines)


def parse_config(text: str, origin: str = "<config>") -> PipelineConfig:
    values: dict[str, Any] = {}
    section: str | None = None
    seen: set[str] = set()
    for line_no, raw_line in enumerate(text.split("\n"), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"{origin}: line {line_no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}: line {line_no}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"{origin}: line {line_no}: key outside any [section]")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(f"{origin}: line {line_no}: unknown key '{key}' in section [{section}]")
        if key in seen:
            raise ConfigError(f"{origin}: line {line_no}: duplicate key '{key}'")
        seen.add(key)
        values[key] = _parse_value(key, raw_value, line_no)
    cfg = PipelineConfig(**values)
    for stage in cfg.stages:
        if stage not in KNOWN_STAGES:
            raise ConfigError(f"{origin}: unknown stage '{stage}' (known: {', '.join(KNOWN_STAGES)})")
    return cfg


def load_config(path: str) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, origin=path)


def save_config(cfg: PipelineConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_config(cfg))
