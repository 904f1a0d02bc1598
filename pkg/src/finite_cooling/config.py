"""Experiment configuration: command-line flags layered over an INI file over defaults."""

from __future__ import annotations

import argparse
import configparser
import math
import os
from dataclasses import asdict, dataclass, fields

from .coherent import PROTOCOLS
from .errors import DomainError

SEED_ENV = "FINITE_COOLING_SEED"
MODES = ("coherent", "incoherent", "geodesic", "goe", "correlations", "optimize", "sweep")
EXTRA_PROTOCOLS = ("goe-cumulative",)
RANDOM_PROTOCOLS = ("goe-eig", "goe-spacing", "goe-cumulative")


class ConfigError(DomainError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    protocols: tuple = ("tl",)
    N: tuple = (100,)
    beta: float = 1.0
    lam: float | None = None
    beta_f: float | None = None
    gap: float = 1.0
    levels: tuple | None = None
    beta_H: float | None = None
    gamma: float | None = None
    stage_mode: str = "ideal"
    repeats: int = 1000
    m: int = 500
    seed: int | None = None
    trials: int = 10000
    p: float | None = None
    p_target: float | None = None
    grid: int = 2001
    grid_levels: int = 4
    output: str = "-"
    fmt: str = "csv"
    timing: bool = False

    @property
    def H_levels(self) -> tuple:
        return self.levels if self.levels is not None else (0.0, self.gap)

    @property
    def needs_seed(self) -> bool:
        return self.mode in ("goe", "correlations") or any(p in RANDOM_PROTOCOLS for p in self.protocols)

    def echo(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}


def _floats(text):
    return tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())


def _ints(text):
    out = []
    for x in str(text).replace(";", ",").split(","):
        x = x.strip()
        if x:
            v = float(x)
            if v != int(v):
                raise ValueError(f"{x!r} is not an integer")
            out.append(int(v))
    return tuple(out)


def _names(text):
    return tuple(x.strip() for x in str(text).split(",") if x.strip())


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


# INI key -> value parser; the flag is the key with '_' replaced by '-'
KEYS = {
    "protocol": _names,
    "n": _ints,
    "beta": float,
    "lambda": float,
    "beta_f": float,
    "gap": float,
    "levels": _floats,
    "beta_h": float,
    "gamma": float,
    "stage_mode": str,
    "repeats": int,
    "m": int,
    "seed": int,
    "trials": int,
    "p": float,
    "p_target": float,
    "grid": int,
    "grid_levels": int,
    "output": str,
    "format": str,
    "timing": _bool,
}

HELP = {
    "protocol": "protocol id, or a comma list for sweep: " + ", ".join(PROTOCOLS + EXTRA_PROTOCOLS),
    "n": "number of steps; a comma list runs one record per value",
    "beta": "initial inverse temperature",
    "lambda": "cooling factor beta_f / beta",
    "beta_f": "final inverse temperature (alternative to --lambda)",
    "gap": "qubit system gap E_S",
    "levels": "comma-separated system levels (qudits); overrides --gap",
    "beta_h": "hot-bath inverse temperature",
    "gamma": "beta_H / (beta - beta_H), alternative to --beta-h",
    "stage_mode": "incoherent stages: ideal or finite",
    "repeats": "maximum collisions per finite stage",
    "m": "GOE ensemble size",
    "seed": f"RNG seed (default from ${SEED_ENV})",
    "trials": "number of random trials for the correlations audit",
    "p": "initial ground population (optimize)",
    "p_target": "target ground population (optimize)",
    "grid": "grid points per refinement level (optimize)",
    "grid_levels": "refinement levels (optimize)",
    "output": "output path, '-' for stdout",
    "format": "csv or json",
    "timing": "fill the wall_ms column (makes output non-reproducible)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finite-cooling",
        description="Simulate finite-resource cooling protocols and write CSV/JSON records.")
    parser.add_argument("--version", action="store_true", help="print the version and exit")
    sub = parser.add_subparsers(dest="mode", metavar="MODE")
    for mode in MODES:
        sp = sub.add_parser(mode, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="INI file with an [experiment] section")
        for key in KEYS:
            flag = "--" + key.replace("_", "-")
            extra = {"dest": key}
            if key == "n":
                sp.add_argument("--n", "-N", help=HELP[key], **extra)
                continue
            if key == "output":
                sp.add_argument("--output", "-o", help=HELP[key], **extra)
                continue
            if key == "timing":
                sp.add_argument(flag, action="store_const", const=True, help=HELP[key], **extra)
                continue
            sp.add_argument(flag, help=HELP[key], **extra)
    return parser


def _read_file(path: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    if cp.sections() != ["experiment"]:
        raise ConfigError(f"config file {path} must contain exactly one [experiment] section")
    raw = {}
    for key, value in cp.items("experiment"):
        norm = key.strip().lower().replace("-", "_")
        if norm not in KEYS:
            raise ConfigError(f"unknown key {key!r} in {path}")
        raw[norm] = value
    return raw


def _convert(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        try:
            out[key] = KEYS[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    return out


def parse_config(argv=None, environ=None) -> ExperimentConfig:
    """Build a validated config; precedence is flag > config file > $FINITE_COOLING_SEED > default."""
    environ = os.environ if environ is None else environ
    ns = build_parser().parse_args(argv)
    if ns.mode is None:
        raise ConfigError("a mode is required: " + ", ".join(MODES))
    flags = {k: v for k, v in vars(ns).items() if k in KEYS}
    merged = {}
    if environ.get(SEED_ENV):
        merged["seed"] = environ[SEED_ENV]
    if getattr(ns, "config", None):
        merged.update(_read_file(ns.config))
    merged.update(flags)
    return _build(ns.mode, _convert(merged))


def _build(mode: str, v: dict) -> ExperimentConfig:
    kw = {"mode": mode}
    rename = {"protocol": "protocols", "n": "N", "lambda": "lam", "beta_h": "beta_H",
              "format": "fmt"}
    for key, value in v.items():
        kw[rename.get(key, key)] = value
    if mode == "sweep" and "protocols" not in kw:
        kw["protocols"] = PROTOCOLS
    if mode == "goe" and "protocols" not in kw:
        kw["protocols"] = ("goe-eig", "goe-spacing")
    cfg = ExperimentConfig(**kw)
    return validate(cfg)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    known = PROTOCOLS + EXTRA_PROTOCOLS
    for p in cfg.protocols:
        if p not in known:
            raise ConfigError(f"--protocol: unknown protocol {p!r}; choose from {', '.join(known)}")
    if mode_single(cfg) and len(cfg.protocols) != 1:
        raise ConfigError(f"--protocol: mode {cfg.mode} takes a single protocol")
    if cfg.mode == "goe" and any(p not in RANDOM_PROTOCOLS for p in cfg.protocols):
        raise ConfigError("--protocol: goe mode runs goe-* protocols only")
    if not cfg.N or any(n < 1 for n in cfg.N):
        raise ConfigError("--n: step counts must be >= 1")
    if not (cfg.beta > 0 and math.isfinite(cfg.beta)):
        raise ConfigError("--beta must be positive and finite")
    lam = cfg.lam
    if cfg.beta_f is not None:
        from_bf = cfg.beta_f / cfg.beta
        if lam is not None and not math.isclose(lam, from_bf, rel_tol=1e-12):
            raise ConfigError(f"--lambda {lam!r} conflicts with --beta-f {cfg.beta_f!r} (ratio {from_bf!r})")
        lam = from_bf
    explicit_target = cfg.mode == "optimize" and cfg.p_target is not None
    if lam is None and cfg.mode != "correlations" and not explicit_target:
        raise ConfigError("--lambda or --beta-f is required")
    if lam is not None and not lam > 1.0 and cfg.mode != "correlations":
        raise ConfigError(f"--lambda must exceed 1 for cooling, got {lam!r}")
    if cfg.levels is not None:
        if len(cfg.levels) < 2 or cfg.levels[0] != 0.0 or any(b < a for a, b in zip(cfg.levels, cfg.levels[1:])):
            raise ConfigError("--levels must start at 0 and be non-decreasing with at least two entries")
        qudit = len(cfg.levels) > 2
        if qudit and cfg.mode in ("coherent", "sweep", "goe") and any(p not in ("tl", "rw") for p in cfg.protocols):
            raise ConfigError("--protocol: qudit systems support tl and rw only")
    if not cfg.gap > 0:
        raise ConfigError("--gap must be positive")
    if cfg.needs_seed and cfg.seed is None:
        raise ConfigError(f"--seed is required for this run (or set ${SEED_ENV})")
    if cfg.mode == "incoherent":
        if (cfg.beta_H is None) == (cfg.gamma is None):
            raise ConfigError("incoherent mode needs exactly one of --beta-h and --gamma")
        if cfg.stage_mode not in ("ideal", "finite"):
            raise ConfigError("--stage-mode must be ideal or finite")
        if cfg.gamma is not None:
            if not cfg.gamma >= 0:
                raise ConfigError("--gamma must be non-negative")
            cfg = _replace(cfg, beta_H=cfg.beta * cfg.gamma / (cfg.gamma + 1.0))
        if not 0 <= cfg.beta_H < cfg.beta:
            raise ConfigError("--beta-h must satisfy 0 <= beta_H < beta")
    if cfg.m < 1:
        raise ConfigError("--m must be at least 1")
    if cfg.trials < 1:
        raise ConfigError("--trials must be at least 1")
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError("--format must be csv or json")
    return _replace(cfg, lam=lam)


def mode_single(cfg: ExperimentConfig) -> bool:
    return cfg.mode in ("coherent", "incoherent", "geodesic")


def _replace(cfg, **changes):
    data = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    data.update(changes)
    return ExperimentConfig(**data)
