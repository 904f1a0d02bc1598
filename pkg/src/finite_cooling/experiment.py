"""Run configured experiments and persist flat result records."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .analysis import (
    brute_force_optimum,
    correlation_bound_check,
    degenerate_qubit_gaps,
)
from .coherent import PROTOCOLS, build_schedule, run_swap_protocol, schedule_rw
from .config import EXTRA_PROTOCOLS, ExperimentConfig
from .errors import DomainError
from .geometry import (
    GapSchedule,
    discrete_length,
    first_order_dissipation,
    geodesic_numeric,
    geodesic_scale_factors,
    minimal_length_closed_form,
)
from .goe import (
    RNG_ALGORITHM,
    GoeConfig,
    goe_sorted_spectra,
    make_rng,
    schedule_goe_eigenvalue,
    schedule_goe_spacing,
)
from .incoherent import IncoherentConfig, run_incoherent_protocol
from .thermo import HamiltonianSpec, gibbs_state

FIELDS = (
    "protocol", "N", "beta", "lambda", "gap", "seed", "dissipation_nats", "deltaE_M",
    "landauer_nats", "relent_sum", "mutual_info", "L_star", "predicted_first_order",
    "residual", "wall_ms",
)


@dataclass
class ResultRecord:
    """One output row. Fields that do not apply to a mode are ``None``.

    ``residual`` depends on the mode: the Landauer-equality defect for
    coherent runs, the Carnot-Landauer identity defect for incoherent runs,
    discrete length minus L_star for geodesic runs, the number of violating
    trials for the correlations audit, and the relative gap to the one-step
    swap cost for optimize.
    """

    protocol: str
    N: int
    beta: float | None = None
    lam: float | None = None
    gap: float | None = None
    seed: int | None = None
    dissipation_nats: float | None = None
    deltaE_M: float | None = None
    landauer_nats: float | None = None
    relent_sum: float | None = None
    mutual_info: float | None = None
    L_star: float | None = None
    predicted_first_order: float | None = None
    residual: float | None = None
    wall_ms: float | None = None

    def as_dict(self) -> dict:
        d = {k: getattr(self, "lam" if k == "lambda" else k) for k in FIELDS}
        return {k: (float(v) if isinstance(v, (np.floating,)) else v) for k, v in d.items()}


def _H(cfg: ExperimentConfig) -> HamiltonianSpec:
    return HamiltonianSpec(np.asarray(cfg.H_levels, dtype=float))


def _L_star(cfg):
    return minimal_length_closed_form(cfg.beta, cfg.lam, _H(cfg))


def _scale_schedule(protocol, N, cfg):
    """Scale-factor schedule for qudit runs and incoherent stages."""
    H = _H(cfg)
    if protocol == "tl":
        if H.dim == 2:
            return GapSchedule(geodesic_scale_factors(N, cfg.lam, cfg.beta, H.levels[1]), 1.0, "scale")
        return geodesic_numeric(N, cfg.beta, H, cfg.lam)
    if protocol == "rw":
        if N == 1:
            return GapSchedule([cfg.lam], 1.0, "scale")
        return GapSchedule(schedule_rw(N, 1.0, cfg.lam).values, 1.0, "scale")
    raise DomainError(f"protocol {protocol!r} is not available for this system")


class _SpectraCache:
    # GOE spectra are drawn from a stream keyed by (seed, N), so every
    # protocol sees the same ensemble at a given N regardless of run order
    def __init__(self, cfg):
        self.cfg = cfg
        self.store = {}

    def get(self, N):
        if N not in self.store:
            self.store[N] = goe_sorted_spectra(N + 1, self.cfg.m, make_rng(self.cfg.seed, N))
        return self.store[N]


def _coherent_record(protocol, N, cfg, cache):
    H = _H(cfg)
    if H.dim == 2:
        gap = float(H.levels[1])
        if protocol.startswith("goe"):
            gcfg = GoeConfig(N=N, m=cfg.m, seed=cfg.seed, x0=gap, x1=cfg.lam * gap)
            spectra = cache.get(N)
            if protocol == "goe-cumulative":
                sched = schedule_goe_spacing(gcfg, spectra=spectra, rescale="cumulative")
            else:
                fn = schedule_goe_eigenvalue if protocol == "goe-eig" else schedule_goe_spacing
                sched = fn(gcfg, spectra=spectra)
        else:
            sched = build_schedule(protocol, N, cfg.beta, gap, cfg.lam)
    else:
        sched = _scale_schedule(protocol, N, cfg)
    rep = run_swap_protocol(sched, cfg.beta, H)
    L = _L_star(cfg)
    return ResultRecord(
        protocol=protocol, N=N, beta=cfg.beta, lam=cfg.lam, gap=cfg.gap if cfg.levels is None else None,
        seed=cfg.seed, dissipation_nats=rep.dissipation, deltaE_M=rep.deltaE_M,
        landauer_nats=rep.landauer, relent_sum=rep.relent_sum, mutual_info=rep.mutual_info,
        L_star=L, predicted_first_order=first_order_dissipation(L, N), residual=rep.residual,
    )


def _incoherent_record(N, cfg):
    protocol = cfg.protocols[0]
    H = _H(cfg)
    icfg = IncoherentConfig(cfg.beta, cfg.beta_H, H, _scale_schedule(protocol, N, cfg),
                            mode=cfg.stage_mode, repeats=cfg.repeats)
    rep = run_incoherent_protocol(icfg)
    L = _L_star(cfg)
    return ResultRecord(
        protocol=protocol, N=N, beta=cfg.beta, lam=cfg.lam, gap=cfg.gap if cfg.levels is None else None,
        seed=cfg.seed, dissipation_nats=-cfg.beta * rep.carnot_landauer, deltaE_M=rep.deltaE_C,
        landauer_nats=rep.landauer, relent_sum=rep.relent_sum, mutual_info=None,
        L_star=L, predicted_first_order=first_order_dissipation(L, N),
        residual=rep.identity_residual,
    )


def _geodesic_record(N, cfg):
    H = _H(cfg)
    sched = _scale_schedule("tl", N, cfg)
    rep = run_swap_protocol(sched, cfg.beta, H)
    L = _L_star(cfg)
    return ResultRecord(
        protocol="tl", N=N, beta=cfg.beta, lam=cfg.lam, gap=cfg.gap if cfg.levels is None else None,
        seed=cfg.seed, dissipation_nats=rep.dissipation, deltaE_M=rep.deltaE_M,
        landauer_nats=rep.landauer, relent_sum=rep.relent_sum, mutual_info=rep.mutual_info,
        L_star=L, predicted_first_order=first_order_dissipation(L, N),
        residual=discrete_length(sched, cfg.beta, H) - L,
    )


def _correlations_record(cfg):
    rng = make_rng(cfg.seed, 0)
    violations = 0
    for _ in range(cfg.trials):
        gaps = degenerate_qubit_gaps(rng)
        beta = float(rng.uniform(0.1, 3.0))
        beta_H = float(rng.uniform(0.0, beta))
        audit = correlation_bound_check(beta, beta_H, [0.0, gaps[0]], [0.0, gaps[1]],
                                        [0.0, gaps[2]], 1, rng)[0]
        violations += not audit.holds
    return ResultRecord(protocol="correlations", N=cfg.trials, seed=cfg.seed,
                        residual=float(violations))


def _optimize_record(cfg):
    H = _H(cfg)
    if H.dim != 2:
        raise DomainError("optimize works with qubit systems")
    gap = float(H.levels[1])
    p = cfg.p if cfg.p is not None else float(gibbs_state(cfg.beta, H)[0])
    if cfg.p_target is not None:
        p_t = cfg.p_target
    else:
        p_t = float(gibbs_state(cfg.lam * cfg.beta, H)[0])
    opt = brute_force_optimum(p, p_t, cfg.beta, grid=cfg.grid, levels=cfg.grid_levels)
    # compare with the single full swap that lands exactly on the target
    reference = None
    if cfg.p is None and cfg.p_target is None:
        rep = run_swap_protocol(build_schedule("tl", 1, cfg.beta, gap, cfg.lam), cfg.beta, H)
        reference = (opt.deltaE - rep.deltaE_M) / rep.deltaE_M
    return ResultRecord(protocol="optimum", N=1, beta=cfg.beta, lam=cfg.lam, gap=gap,
                        seed=cfg.seed, deltaE_M=opt.deltaE, residual=reference)


def run_experiment(cfg: ExperimentConfig) -> list:
    """Evaluate every (protocol, N) entry of ``cfg``; records come back in canonical order."""
    if cfg.mode == "correlations":
        return [_timed(cfg, _correlations_record, cfg)]
    if cfg.mode == "optimize":
        return [_timed(cfg, _optimize_record, cfg)]
    order = {p: i for i, p in enumerate(PROTOCOLS + EXTRA_PROTOCOLS)}
    protocols = sorted(dict.fromkeys(cfg.protocols), key=order.__getitem__)
    Ns = sorted(set(cfg.N))
    cache = _SpectraCache(cfg)
    records = []
    for protocol in protocols:
        for N in Ns:
            if cfg.mode == "incoherent":
                records.append(_timed(cfg, _incoherent_record, N, cfg))
            elif cfg.mode == "geodesic":
                records.append(_timed(cfg, _geodesic_record, N, cfg))
            else:
                records.append(_timed(cfg, _coherent_record, protocol, N, cfg, cache))
    return records


def _timed(cfg, fn, *args):
    t0 = time.perf_counter()
    rec = fn(*args)
    if cfg.timing:
        rec.wall_ms = 1e3 * (time.perf_counter() - t0)
    return rec


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def render_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in records:
        d = r.as_dict()
        w.writerow([_fmt(d[k]) if k != "protocol" else d[k] for k in FIELDS])
    return buf.getvalue()


def render_json(records) -> str:
    rows = []
    for r in records:
        d = r.as_dict()
        rows.append({k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()})
    return json.dumps(rows, indent=1) + "\n"


def metadata(cfg: ExperimentConfig | None) -> dict:
    return {"version": __version__, "rng": RNG_ALGORITHM, "config": None if cfg is None else cfg.echo()}


def write_results(records, path: str, fmt: str = "csv", cfg: ExperimentConfig | None = None) -> None:
    """Write records as CSV or JSON; files also get a ``<path>.meta.json`` sidecar.

    ``path == "-"`` writes to standard output without a sidecar.
    """
    if fmt not in ("csv", "json"):
        raise DomainError(f"unknown format {fmt!r}")
    text = render_csv(records) if fmt == "csv" else render_json(records)
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    with open(path + ".meta.json", "w", encoding="utf-8", newline="") as fh:
        json.dump(metadata(cfg), fh, indent=1, sort_keys=True)
        fh.write("\n")
