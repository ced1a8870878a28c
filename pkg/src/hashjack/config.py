"""Run configuration: a flat ``key = value`` file plus command-line overrides."""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import os
import zlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .community import LouvainParams
from .errors import ConfigError
from .ingest import PARTY_TAGS, CorpusWindow, normalize_hashtag, utc
from .layout import LayoutParams

OUTPUT_ENV = "HASHJACK_OUTPUT_DIR"

PATH_KEYS = ("inputs", "alias_file", "seeds_path", "annotations_path", "output_dir")


@dataclass
class PipelineConfig:
    inputs: tuple = ()
    tags: tuple = PARTY_TAGS
    alias_file: str | None = None
    window_start: str = "2018-05-27T22:00:00+00:00"
    window_end: str = "2018-06-04T21:59:59+00:00"
    seed: int = 0
    resolution: float = 1.0
    max_passes: int = 100
    min_gain: float = 1e-9
    restarts: int = 8
    giant_only: bool = False
    seeds_path: str | None = None
    top_k: int = 50
    annotations_path: str | None = None
    sentiment_hashtag: str = "afd"
    level: float = 0.99
    universe: str = "labeled"
    layout: bool = True
    layout_iterations: int = 1000
    layout_scaling: float = 2.0
    layout_gravity: float = 1.0
    layout_linlog: bool = False
    layout_tolerance: float = 1.0
    layout_barnes_hut: str = "auto"
    output_dir: str = "out"

    def validate(self) -> "PipelineConfig":
        try:
            self.window
            self.louvain_params(0)
            self.layout_params(0)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(str(exc)) from exc
        if not self.tags:
            raise ConfigError("no tracked hashtags configured")
        if self.universe not in ("labeled", "pair"):
            raise ConfigError(f"universe must be 'labeled' or 'pair', not {self.universe!r}")
        if not 0 < self.level < 1:
            raise ConfigError("level must lie in (0, 1)")
        if self.top_k < 1:
            raise ConfigError("top_k must be at least 1")
        if self.layout_barnes_hut not in ("auto", "on", "off"):
            raise ConfigError("layout_barnes_hut must be auto, on or off")
        return self

    @property
    def window(self) -> CorpusWindow:
        try:
            return CorpusWindow(utc(self.window_start), utc(self.window_end))
        except ValueError as exc:
            raise ConfigError(f"bad window: {exc}") from exc

    def louvain_params(self, seed: int) -> LouvainParams:
        return LouvainParams(self.resolution, seed, self.max_passes, self.min_gain, self.restarts)

    def layout_params(self, seed: int) -> LayoutParams:
        bh = {"auto": None, "on": True, "off": False}.get(self.layout_barnes_hut)
        return LayoutParams(self.layout_scaling, self.layout_gravity, self.layout_linlog,
                            self.layout_iterations, seed, self.layout_tolerance, bh)

    def echo(self) -> dict:
        """Config for the run manifest; paths reduced to file names."""
        out = {}
        for f in fields(self):
            if f.name == "output_dir":
                continue
            value = getattr(self, f.name)
            if f.name == "inputs":
                value = [os.path.basename(p) for p in value]
            elif f.name in PATH_KEYS and value is not None:
                value = os.path.basename(value)
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


def _coerce(name: str, text: str, default):
    text = text.strip()
    if name in ("alias_file", "seeds_path", "annotations_path"):
        return text or None
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(x.strip() for x in text.split(",") if x.strip())
    return text


def apply_overrides(cfg: PipelineConfig, values: dict, base_dir: Path | None = None) -> PipelineConfig:
    """Return ``cfg`` updated with string or typed values; relative paths resolve against ``base_dir``."""
    defaults = {f.name: getattr(PipelineConfig(), f.name) for f in fields(PipelineConfig)}
    changes = {}
    for name, value in values.items():
        if value is None:
            continue
        if name not in defaults:
            raise ConfigError(f"unknown config key {name!r}")
        try:
            if isinstance(value, str):
                value = _coerce(name, value, defaults[name])
            elif isinstance(defaults[name], tuple):
                value = tuple(value)
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from exc
        if base_dir is not None and name in PATH_KEYS and value is not None:
            if name == "inputs":
                value = tuple(str(base_dir / p) for p in value)
            else:
                value = str(base_dir / value)
        changes[name] = value
    cfg = dataclasses.replace(cfg, **changes)
    cfg.tags = tuple(normalize_hashtag(t) for t in cfg.tags)
    cfg.sentiment_hashtag = normalize_hashtag(cfg.sentiment_hashtag)
    return cfg


def read_config(path) -> PipelineConfig:
    """Parse a flat ``key = value`` file (``#`` comments, lists comma-separated)."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return apply_overrides(PipelineConfig(), dict(parser["run"]), path.parent)


def derive_seed(seed: int, *keys: str) -> int:
    """Independent 63-bit seed for a named stage, split from the run seed.

    The stream is ``SeedSequence(seed, spawn_key=crc32 of each key)``, so each
    (stage, hashtag) pair gets its own reproducible generator.
    """
    spawn = tuple(zlib.crc32(k.encode("utf-8")) for k in keys)
    state = np.random.SeedSequence(seed, spawn_key=spawn).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
