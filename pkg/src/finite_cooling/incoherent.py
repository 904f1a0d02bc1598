"""Cooling with energy-conserving collisions powered by a hot and a cold bath.

Each stage n couples the system to a cold machine C at beta and a hot machine
H at beta_H whose Hamiltonians are scaled copies of H_S:

    H_C = ((gamma+1) lambda_n - gamma) H_S,   H_H = (gamma+1)(lambda_n - 1) H_S,

with gamma = beta_H / (beta - beta_H). The degenerate pairs
|i, i+1, i> <-> |i+1, i, i+1> (order S, C, H) form a virtual qubit whose
population ratio is exp(-beta lambda_n omega^(i)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DomainError
from .geometry import GapSchedule, step_divergences
from .thermo import (
    HamiltonianSpec,
    JointState,
    as_levels,
    free_energy,
    gibbs_log_probs,
    gibbs_state,
    relative_entropy,
    shannon_entropy,
    validate_populations,
)

ENERGY_TOL = 1e-12


@dataclass(frozen=True)
class IncoherentConfig:
    """Parameters of an incoherent protocol.

    ``stages`` holds scale factors lambda_1..lambda_N (kind ``"scale"``).
    ``mode`` is ``"ideal"`` (each stage lands on its virtual temperature) or
    ``"finite"`` (at most ``repeats`` explicit collisions per stage, stopping
    once every subspace ratio is within ``tolerance`` of its target).
    Non-monotone stage sequences need ``monotone=False``.
    """

    beta: float
    beta_H: float
    H_S: HamiltonianSpec
    stages: GapSchedule
    mode: str = "ideal"
    repeats: int = 1000
    tolerance: float = 1e-10
    swap_weight: float = 1.0
    monotone: bool = True

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError("beta must be positive and finite")
        if not 0.0 <= self.beta_H < self.beta:
            raise DomainError(
                "need 0 <= beta_H < beta; beta_H = beta makes the machine gaps diverge")
        if not isinstance(self.H_S, HamiltonianSpec):
            object.__setattr__(self, "H_S", HamiltonianSpec(self.H_S))
        if not isinstance(self.stages, GapSchedule):
            object.__setattr__(self, "stages", GapSchedule(self.stages, 1.0, "scale"))
        if self.stages.kind != "scale":
            raise DomainError("incoherent stages are scale factors")
        lam = self.stages.values
        if np.any(lam < 1.0):
            raise DomainError("stage scale factors must be >= 1")
        if self.monotone and np.any(np.diff(lam) < 0):
            raise DomainError("stage scale factors must be non-decreasing")
        if self.mode not in ("ideal", "finite"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.repeats < 1:
            raise DomainError("repeats must be at least 1")
        if not 0.0 < self.swap_weight <= 1.0:
            raise DomainError("swap weight must lie in (0, 1]")

    @property
    def gamma(self) -> float:
        return self.beta_H / (self.beta - self.beta_H)

    @property
    def eta(self) -> float:
        return 1.0 - self.beta_H / self.beta


def machine_hamiltonians(lambda_n: float, gamma: float, H_S):
    """Cold and hot machine Hamiltonians for a stage with scale factor ``lambda_n``."""
    if gamma < 0 or not math.isfinite(gamma):
        raise DomainError("gamma must be finite and non-negative")
    if lambda_n < 1.0:
        raise DomainError(f"stage scale factor must be >= 1, got {lambda_n!r}")
    levels = as_levels(H_S)
    c = (gamma + 1.0) * lambda_n - gamma
    h = (gamma + 1.0) * (lambda_n - 1.0)
    if c < 0 or h < 0:
        raise DomainError("machine gaps would be negative")
    return HamiltonianSpec(c * levels), HamiltonianSpec(h * levels)


def virtual_gibbs_ratio(beta: float, beta_H: float, H_C, H_H, i: int,
                        *, expected_lambda: float | None = None, omega_S: float | None = None) -> float:
    """p_CH(i+1, i) / p_CH(i, i+1) for the product Gibbs state of C and H.

    When ``expected_lambda`` and ``omega_S`` are given the value is checked
    against exp(-beta * lambda * omega_S).
    """
    c = gibbs_log_probs(beta, H_C)
    h = gibbs_log_probs(beta_H, H_H)
    if not 0 <= i < min(c.size, h.size) - 1:
        raise DomainError(f"subspace index {i} out of range")
    log_r = (c[i + 1] + h[i]) - (c[i] + h[i + 1])
    if expected_lambda is not None:
        target = -beta * expected_lambda * omega_S
        if abs(log_r - target) > 1e-12 * max(1.0, abs(target)):
            raise ConsistencyError(f"virtual ratio log {log_r!r} differs from {target!r}")
    return math.exp(log_r)


@dataclass(frozen=True)
class StageLedger:
    """Energy bookkeeping for one stage; ``deltap[i]`` is the net downward flow across gap i."""

    n: int
    lambda_n: float
    deltaE_S: float
    deltaE_C: float
    deltaE_H: float
    deltap: np.ndarray
    repeats: int = 0
    converged: bool = True
    entropy_production: float = 0.0
    ratio_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def energy_balance(self) -> float:
        return self.deltaE_S + self.deltaE_C + self.deltaE_H


def _flows(p_old, p_new):
    return np.cumsum(p_new - p_old)[:-1]


def _ratio_residual(p, beta, lam, gaps):
    with np.errstate(divide="ignore"):
        log_ratio = np.log(p[1:]) - np.log(p[:-1])
    return np.abs(np.expm1(log_ratio + beta * lam * gaps))


def _collision(P, d, s):
    # exchange |i,i+1,i> <-> |i+1,i,i+1>; the pairs are disjoint so order is irrelevant
    i = np.arange(d - 1)
    a = P[i, i + 1, i].copy()
    b = P[i + 1, i, i + 1].copy()
    P[i, i + 1, i] = (1.0 - s) * a + s * b
    P[i + 1, i, i + 1] = (1.0 - s) * b + s * a
    return s * (b - a)


def run_stage(state, config: IncoherentConfig, n: int):
    """Advance ``state`` through stage ``n`` (1-based). Returns ``(state', StageLedger)``."""
    p = validate_populations(state, tol=1e-10)
    levels = config.H_S.levels
    if p.size != levels.size:
        raise DomainError("state dimension differs from H_S")
    lam = float(config.stages.values[n - 1])
    g = config.gamma
    c_fac = (g + 1.0) * lam - g
    h_fac = (g + 1.0) * (lam - 1.0)
    gaps = config.H_S.gaps
    beta = config.beta
    target = np.exp(gibbs_log_probs(beta * lam, levels))

    if config.mode == "ideal":
        dp = _flows(p, target)
        dE_S = float(levels @ (target - p))
        ledger = StageLedger(
            n=n, lambda_n=lam,
            deltaE_S=dE_S,
            deltaE_C=float(c_fac * np.sum(gaps * dp)),
            deltaE_H=float(-h_fac * np.sum(gaps * dp)),
            deltap=dp,
            entropy_production=relative_entropy(p, target),
            ratio_residual=np.zeros(gaps.size),
        )
        return target, ledger

    H_C, H_H = machine_hamiltonians(lam, g, config.H_S)
    tau_C = gibbs_state(beta, H_C)
    tau_H = gibbs_state(config.beta_H, H_H)
    s_C, s_H = shannon_entropy(tau_C), shannon_entropy(tau_H)
    d = levels.size
    E_tot = levels[:, None, None] + H_C.levels[None, :, None] + H_H.levels[None, None, :]
    dp = np.zeros(d - 1)
    dE_C = dE_H = production = 0.0
    cur = p
    used = 0
    residual = _ratio_residual(cur, beta, lam, gaps)
    while used < config.repeats and not np.all(residual <= config.tolerance):
        P = cur[:, None, None] * tau_C[None, :, None] * tau_H[None, None, :]
        e_before = float(np.sum(P * E_tot))
        dp += _collision(P, d, config.swap_weight)
        if abs(float(np.sum(P * E_tot)) - e_before) > ENERGY_TOL * max(1.0, abs(e_before)):
            raise ConsistencyError("collision changed the total energy")
        joint = JointState((d, d, d), P)
        new = joint.marginal((0,))
        c_new = joint.marginal((1,))
        h_new = joint.marginal((2,))
        dE_C += float(H_C.levels @ (c_new - tau_C))
        dE_H += float(H_H.levels @ (h_new - tau_H))
        # local entropy gains plus the machines' departures from equilibrium;
        # for a permutation the entropy gains sum to the total correlation
        production += (shannon_entropy(new) - shannon_entropy(cur)
                       + shannon_entropy(c_new) - s_C + shannon_entropy(h_new) - s_H
                       + relative_entropy(c_new, tau_C) + relative_entropy(h_new, tau_H))
        cur = new
        used += 1
        residual = _ratio_residual(cur, beta, lam, gaps)
    ledger = StageLedger(
        n=n, lambda_n=lam,
        deltaE_S=float(levels @ (cur - p)),
        deltaE_C=dE_C,
        deltaE_H=dE_H,
        deltap=dp,
        repeats=used,
        converged=bool(np.all(residual <= config.tolerance)),
        entropy_production=production,
        ratio_residual=residual,
    )
    return cur, ledger


@dataclass(frozen=True)
class IncoherentReport:
    beta: float
    eta: float
    gamma: float
    stages: tuple
    initial_state: np.ndarray
    final_state: np.ndarray
    deltaE_S: float
    deltaE_C: float
    deltaE_H: float
    deltaF_S: float
    landauer: float
    relent_sum: float
    entropy_production: float

    @property
    def carnot_landauer(self) -> float:
        """deltaF_S + eta*deltaE_H; never positive."""
        return self.deltaF_S + self.eta * self.deltaE_H

    @property
    def identity_residual(self) -> float:
        """beta*(deltaF_S + eta*deltaE_H) plus the entropy production; zero up to rounding."""
        return self.beta * self.carnot_landauer + self.entropy_production

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.stages)


def run_incoherent_protocol(config: IncoherentConfig, initial_state=None) -> IncoherentReport:
    """Run every stage in order starting from tau(beta, H_S) unless ``initial_state`` is given.

    ``relent_sum`` is the sum of D(tau_{n-1} || tau_n) along the stage path;
    ``entropy_production`` is what was actually produced (equal to
    ``relent_sum`` in ideal mode when starting from equilibrium).
    """
    H = config.H_S
    p0 = gibbs_state(config.beta, H) if initial_state is None else validate_populations(initial_state)
    cur = p0
    ledgers = []
    for n in range(1, config.stages.N + 1):
        cur, led = run_stage(cur, config, n)
        ledgers.append(led)
    return IncoherentReport(
        beta=config.beta,
        eta=config.eta,
        gamma=config.gamma,
        stages=tuple(ledgers),
        initial_state=p0,
        final_state=cur,
        deltaE_S=float(sum(s.deltaE_S for s in ledgers)),
        deltaE_C=float(sum(s.deltaE_C for s in ledgers)),
        deltaE_H=float(sum(s.deltaE_H for s in ledgers)),
        deltaF_S=free_energy(cur, H, config.beta) - free_energy(p0, H, config.beta),
        landauer=shannon_entropy(p0) - shannon_entropy(cur),
        relent_sum=float(np.sum(step_divergences(config.stages, config.beta, H))),
        entropy_production=float(sum(s.entropy_production for s in ledgers)),
    )


def carnot_landauer_check(report: IncoherentReport, beta: float, eta: float) -> float:
    """deltaF_S^beta + eta * deltaE_H for a finished run (non-positive)."""
    if beta != report.beta:
        raise DomainError("beta differs from the one the report was computed at")
    return report.deltaF_S + eta * report.deltaE_H


def scale_stages(values) -> GapSchedule:
    return GapSchedule(values, 1.0, "scale")
