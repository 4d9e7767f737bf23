"""Declarative run configuration (TOML) and problem assembly."""

from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .game import InvalidInputError, make_source_ids
from .oracle import (KINDS, BuiltinOracle, ExternalOracle, Oracle, SourceCorpus, TabularGame,
                     TabularOracle, TargetCorpus, load_jsonl)
from .oracle.corpus import content_hash
from .ranker import FeatureTable
from .sampler import SampleSpec
from .shapley.engine import RHO_POLICIES, EngineConfig, Rho

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

GAMES = ("additive", "glove", "dummy", "table", "concave", "random", "feature-linear")


class ConfigError(InvalidInputError):
    def __init__(self, message: str, path: Path | None = None, line: int | None = None):
        where = f"{path}:{line}: " if path is not None and line else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.line = line


@dataclass
class RunConfig:
    path: Path
    raw: dict
    text: str
    seed: int
    engine: EngineConfig
    cache_path: Path | None
    out_dir: Path
    sources: list[dict] = field(default_factory=list)
    targets: list[dict] = field(default_factory=list)

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.path.parent / p

    def line_of(self, key: str) -> int | None:
        pat = re.compile(rf"^[ \t]*(\[+[ \t]*)?{re.escape(key)}\b", re.M)
        mt = pat.search(self.text)
        return self.text.count("\n", 0, mt.start()) + 1 if mt else None

    def error(self, message: str, key: str | None = None) -> ConfigError:
        return ConfigError(message, self.path, self.line_of(key) if key else None)

    def hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def _typed(cfg_path, text, table, key, kind, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"missing required key {key!r}", cfg_path, None)
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(f"{key!r} must be {getattr(kind, '__name__', kind)}, got {value!r}", cfg_path, _line(text, key))
    return value


def load_config(path: str | Path, seed: int | None = None, cache: str | None = None,
                out: str | None = None) -> RunConfig:
    """Parse and validate a run configuration; CLI overrides take precedence."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        mt = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", path, int(mt.group(1)) if mt else None) from None

    known = {"seed", "problem", "sources", "targets", "oracle", "engine", "cache", "output",
             "baselines", "select", "rank"}
    for key in raw:
        if key not in known:
            mt = re.search(rf"^[ \t]*\[*[ \t]*{re.escape(key)}\b", text, re.M)
            raise ConfigError(f"unknown section or key {key!r}", path,
                              text.count("\n", 0, mt.start()) + 1 if mt else None)

    s = seed if seed is not None else _typed(path, text, raw, "seed", int, 0)
    if not 0 <= s < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {s}", path)

    eng = raw.get("engine", {})
    rho_name = _typed(path, text, eng, "rho", str, "EmptyScore")
    if rho_name not in RHO_POLICIES:
        raise ConfigError(f"rho must be one of {RHO_POLICIES}, got {rho_name!r}", path,
                          _line(text, "rho"))
    rho = Rho.const(_typed(path, text, eng, "rho_value", float, required=True)) if rho_name == "Const" \
        else Rho(rho_name)
    try:
        engine = EngineConfig(
            nepoch=_typed(path, text, eng, "nepoch", int, 100),
            tolerance=_typed(path, text, eng, "tolerance", float, 0.0),
            rho=rho,
            sample_spec=SampleSpec(_typed(path, text, eng, "sample_rate", float, 1.0), s),
            window=_typed(path, text, eng, "window", int, 10),
            epsilon=_typed(path, text, eng, "epsilon", float, None),
            seed=s,
            use_cache=_typed(path, text, eng, "use_cache", bool, True),
            epoch_block=_typed(path, text, eng, "epoch_block", int, 16),
        )
    except InvalidInputError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[engine] {exc}", path, _line(text, "engine")) from None

    cache_cfg = raw.get("cache", {})
    cache_path = cache if cache is not None else _typed(path, text, cache_cfg, "path", str, None)
    out_dir = out if out is not None else _typed(path, text, raw.get("output", {}), "dir", str, "out")

    cfg = RunConfig(path=path, raw=raw, text=text, seed=s, engine=engine,
                    cache_path=None, out_dir=Path(out_dir))
    cfg.cache_path = cfg.resolve(cache_path) if cache_path else None
    if out is None:
        cfg.out_dir = cfg.resolve(out_dir)
    for section in ("sources", "targets"):
        entries = raw.get(section, [])
        if not isinstance(entries, list):
            raise cfg.error(f"[[{section}]] must be an array of tables", section)
        for e in entries:
            if "name" not in e or not isinstance(e["name"], str) or not e["name"]:
                raise cfg.error(f"every [[{section}]] entry needs a non-empty name", section)
        getattr(cfg, section).extend(entries)
    return cfg


def _line(text: str, key: str) -> int | None:
    mt = re.search(rf"^[ \t]*\[*[ \t]*{re.escape(key)}\b", text, re.M)
    return text.count("\n", 0, mt.start()) + 1 if mt else None


# -- problem assembly -------------------------------------------------------


@dataclass
class Problem:
    oracle: Oracle
    fingerprint: str
    corpus_hashes: dict[str, str]
    sources: list[SourceCorpus] = field(default_factory=list)
    targets: list[TargetCorpus] = field(default_factory=list)
    game_spec: dict | None = None
    features: FeatureTable | None = None


def _game(cfg: RunConfig, prob: dict, features: FeatureTable | None) -> tuple[TabularGame, list[str], list[str]]:
    kind = prob.get("game")
    if kind not in GAMES:
        raise cfg.error(f"problem.game must be one of {GAMES}, got {kind!r}", "game")
    empty = float(prob.get("empty", 0.0))
    if kind == "additive":
        if "weights" not in prob:
            raise cfg.error("additive game needs 'weights'", "game")
        game = TabularGame.additive(prob["weights"], empty)
    elif kind == "glove":
        game = TabularGame.glove()
    elif kind == "dummy":
        game = TabularGame.dummy(int(prob.get("m", 2)), int(prob.get("carrier", 0)))
    elif kind == "concave":
        game = TabularGame.concave(prob["weights"], float(prob.get("scale", 1.0)), float(prob.get("rate", 3.0)))
    elif kind == "random":
        rng = np.random.Generator(np.random.PCG64(int(prob.get("game_seed", 0))))
        game = TabularGame.random(int(prob["m"]), rng, int(prob.get("n_targets", 1)))
    elif kind == "table":
        if "m" not in prob or "table" not in prob:
            raise cfg.error("table game needs 'm' and a [problem.table]", "game")
        try:
            game = TabularGame.from_table(int(prob["m"]), prob["table"])
        except InvalidInputError as exc:
            raise cfg.error(str(exc), "table") from None
    else:
        if features is None:
            raise cfg.error("feature-linear game needs [rank].features", "game")
        names = list(prob.get("sources") or [])
        target = prob.get("target")
        if not names or not target:
            raise cfg.error("feature-linear game needs 'sources' and 'target'", "game")
        game = feature_linear_game(features, target, names, prob.get("coef"), empty)
        return game, names, [target]
    names = list(prob.get("sources") or [f"s{j}" for j in range(game.m)])
    tnames = list(prob.get("targets") or [f"t{t}" for t in range(game.n_targets)])
    if len(names) != game.m or len(tnames) != game.n_targets:
        raise cfg.error("problem.sources/targets do not match the game size", "game")
    return game, names, tnames


def feature_linear_game(features: FeatureTable, target: str, sources: list[str], coef=None,
                        empty: float = 0.0) -> TabularGame:
    """Additive game whose source weights are a linear function of features."""
    x = features.matrix(target, sources)
    c = np.ones(x.shape[1]) if coef is None else np.asarray(coef, dtype=float)
    game = TabularGame.additive(x @ c, empty)
    game.name = "feature-linear"
    return game


def _load_corpus(cfg: RunConfig, entry: dict, section: str):
    if "path" not in entry:
        raise cfg.error(f"[[{section}]] {entry['name']!r} needs a path", section)
    p = cfg.resolve(entry["path"])
    if not p.is_file():
        raise FileNotFoundError(f"corpus file not found: {p}")
    return load_jsonl(p)


def build_problem(cfg: RunConfig, processes: int = 1) -> Problem:
    oracle_cfg = cfg.section("oracle")
    prob = cfg.section("problem")
    rank = cfg.section("rank")
    features = FeatureTable.read_csv(cfg.resolve(rank["features"])) if "features" in rank else None
    kind = oracle_cfg.get("kind", "tabular" if "game" in prob else "naive-count")
    base = {"oracle": oracle_cfg, "problem": prob, "sample_rate": cfg.engine.sample_spec.rate,
            "seed": cfg.seed}
    if kind == "tabular":
        game, names, tnames = _game(cfg, prob, features)
        lo, hi = prob.get("score_range", [0.0, 1.0])
        oracle = TabularOracle(game, names, tnames, delay=float(prob.get("delay_ms", 0)) / 1000.0,
                               score_range=(float(lo), float(hi)))
        fp = _digest(base)
        return Problem(oracle, fp, {}, game_spec=prob, features=features)
    if not cfg.sources or not cfg.targets:
        raise cfg.error("corpus problems need [[sources]] and [[targets]]", "sources")
    ids = make_source_ids([e["name"] for e in cfg.sources])
    hashes: dict[str, str] = {}
    if kind == "external":
        command = oracle_cfg.get("command")
        if not isinstance(command, list) or not command:
            raise cfg.error("external oracle needs a non-empty 'command' list", "command")
        sizes = []
        for e in cfg.sources:
            if "size" in e:
                sizes.append(int(e["size"]))
            else:
                inst = _load_corpus(cfg, e, "sources")
                hashes[e["name"]] = content_hash(inst)
                sizes.append(len(inst))
        oracle = ExternalOracle(command, [e["name"] for e in cfg.sources], sizes,
                                [e["name"] for e in cfg.targets], processes=processes,
                                timeout=float(oracle_cfg.get("timeout", 600)))
        return Problem(oracle, _digest({**base, "hashes": hashes, "sizes": sizes}), hashes,
                       features=features)
    if kind not in KINDS:
        raise cfg.error(f"oracle.kind must be tabular, external or one of {KINDS}", "kind")
    sources = []
    for sid, e in zip(ids, cfg.sources):
        inst = _load_corpus(cfg, e, "sources")
        hashes[e["name"]] = content_hash(inst)
        sources.append(SourceCorpus(sid, inst))
    targets = []
    for e in cfg.targets:
        inst = _load_corpus(cfg, e, "targets")
        hashes["target:" + e["name"]] = content_hash(inst)
        targets.append(TargetCorpus(e["name"], inst))
    oracle = BuiltinOracle(sources, targets, kind)
    return Problem(oracle, _digest({**base, "hashes": hashes}), hashes, sources, targets, features=features)


def _digest(obj: Any) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()
