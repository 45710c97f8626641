"""Sectioned ``key = value`` run configuration.

Sections map onto dataclasses: ``[data]``, ``[synth]``, ``[features]``,
``[train]``, ``[split]`` and ``[eval]``. Unknown sections or keys and
unparsable values raise :class:`ConfigError` naming the key and its line.
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .evaluation import SplitSpec
from .features import LEARNED
from .synth import SynthConfig
from .training import TrainConfig


@dataclass(frozen=True)
class DataConfig:
    edges: str | None = None
    attributes: str | None = None


@dataclass(frozen=True)
class FeatureConfig:
    mode: str = LEARNED
    token_seed: int = 0
    precomputed: str | None = None


@dataclass(frozen=True)
class EvalConfig:
    use_case: str = "both"
    directions: str = "tail"
    write_ranks: bool = False


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def with_seed(self, seed: int) -> RunConfig:
        """Every seed in the run replaced by ``seed``."""
        return RunConfig(
            self.data,
            dataclasses.replace(self.synth, seed=seed),
            dataclasses.replace(self.features, token_seed=seed),
            dataclasses.replace(self.train, seed=seed),
            dataclasses.replace(self.split, seed=seed),
            self.eval,
        )

    def seeds(self) -> dict[str, int]:
        return {"synth": self.synth.seed, "features": self.features.token_seed,
                "train": self.train.seed, "split": self.split.seed}


SECTIONS = {f.name: f.default_factory for f in dataclasses.fields(RunConfig)}


def _coerce(raw: str, annotation: str, key: str):
    text = raw.strip()
    optional = "None" in annotation
    if optional and text.lower() in ("", "none"):
        return None
    if "bool" in annotation:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key} expects a boolean")
    if "int" in annotation:
        return int(text, 0)
    if "float" in annotation:
        return float(text)
    return text


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines[(section, "")] = no
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


def _blame(where, section: str, values: dict, message: str):
    """Line of the first key the validation message mentions, else the section header."""
    hits = [(m.start(), k) for k in values for m in [re.search(rf"\b{re.escape(k)}\b", message)] if m]
    key = min(hits)[1] if hits else ""
    return where.get((section, key), "?")


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from None
    where = _line_numbers(text)
    parts = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{source}:{where.get((section, ''), '?')}: unknown section [{section}]")
        cls = type(SECTIONS[section]())
        types = {f.name: f.type for f in dataclasses.fields(cls) if f.init}
        values = {}
        for key, raw in parser.items(section):
            line = where.get((section, key), "?")
            if key not in types:
                raise ConfigError(f"{source}:{line}: unknown key {key!r} in [{section}]")
            try:
                values[key] = _coerce(raw, str(types[key]), key)
            except ValueError:
                raise ConfigError(f"{source}:{line}: cannot parse {key} = {raw!r}") from None
        try:
            parts[section] = cls(**values)
        except ConfigError as e:
            raise ConfigError(f"{source}:{_blame(where, section, values, str(e))}: [{section}] {e}") from None
    return RunConfig(**parts)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text, str(path))


def format_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config`; used for the manifest snapshot."""
    out = []
    for name in SECTIONS:
        section = getattr(cfg, name)
        out.append(f"[{name}]")
        for f in dataclasses.fields(section):
            if not f.init:
                continue
            v = getattr(section, f.name)
            out.append(f"{f.name} = {'none' if v is None else v}")
        out.append("")
    return "\n".join(out)
