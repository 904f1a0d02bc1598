"""Swap-based collision models driven by an external work source.

A qudit system meets a sequence of fresh Gibbs machines, each exchanged with
the system by a (partial) swap. All states stay diagonal, so a collision is a
doubly stochastic map on the d*d joint populations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConsistencyError, DomainError
from .geometry import GapSchedule, path_levels, tl_schedule
from .thermo import (
    IDENTITY_TOL,
    JointState,
    gibbs_log_probs,
    gibbs_state,
    mutual_information,
    relative_entropy,
    shannon_entropy,
    validate_populations,
)

PROTOCOLS = ("tl", "rw", "ssp", "goe-eig", "goe-spacing")


@dataclass(frozen=True)
class StepLedger:
    """Per-collision arrays, index n-1 for collision n."""

    deltaE_M: np.ndarray
    relent: np.ndarray
    mutual_info: np.ndarray
    ground_population: np.ndarray


@dataclass(frozen=True)
class CoolingReport:
    """Energy and entropy bookkeeping for one coherent protocol run.

    ``landauer`` is the entropy decrease S(initial) - S(final) of the system;
    ``dissipation`` is beta*deltaE_M minus that decrease.
    """

    beta: float
    deltaE_M: float
    beta_deltaE_M: float
    landauer: float
    relent_sum: float
    mutual_info: float
    final_state: np.ndarray
    per_step: StepLedger = field(repr=False)

    @property
    def dissipation(self) -> float:
        return self.beta_deltaE_M - self.landauer

    @property
    def residual(self) -> float:
        """Landauer-equality defect; zero up to rounding for any valid run."""
        return self.beta_deltaE_M - (self.landauer + self.mutual_info + self.relent_sum)

    @property
    def N(self) -> int:
        return self.per_step.relent.size


def swap_collision(system, machine, q: float = 1.0) -> JointState:
    """Joint state after the map q*SWAP + (1-q)*identity on p_S (x) p_M."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"swap weight must lie in [0, 1], got {q!r}")
    s = np.asarray(system, dtype=float)
    m = np.asarray(machine, dtype=float)
    if s.shape != m.shape:
        raise DomainError(f"system and machine dimensions differ: {s.size} vs {m.size}")
    P = np.outer(s, m)
    return JointState((s.size, m.size), q * P.T + (1.0 - q) * P)


def partial_swap_step(system, machine, q: float, omega_M: float):
    """One probabilistic swap between a qubit system and a qubit machine of gap ``omega_M``.

    Returns ``(system', machine', deltaE_M, joint)`` where ``deltaE_M`` is the
    machine's energy gain.
    """
    s = validate_populations(system)
    m = validate_populations(machine)
    if s.size != 2 or m.size != 2:
        raise DomainError("partial_swap_step acts on qubits")
    joint = swap_collision(s, m, q)
    s_new = joint.marginal((0,))
    m_new = joint.marginal((1,))
    return s_new, m_new, float(omega_M * (m_new[1] - m[1])), joint


def run_swap_protocol(schedule: GapSchedule, beta: float, H_S) -> CoolingReport:
    """Full swaps with fresh Gibbs machines along ``schedule``.

    Each collision is simulated on the joint populations; the divergence
    terms are evaluated from the exact log-populations of the two Gibbs
    states involved so that they keep full relative accuracy when tiny.
    """
    if not (beta > 0 and math.isfinite(beta)):
        raise DomainError("beta must be positive and finite")
    levels = path_levels(schedule, H_S)
    logs = np.array([gibbs_log_probs(beta, lv) for lv in levels])
    N = levels.shape[0] - 1
    dE = np.empty(N)
    rel = np.empty(N)
    mi = np.empty(N)
    ground = np.empty(N)
    state = np.exp(logs[0])
    s_init = shannon_entropy(state)
    for n in range(1, N + 1):
        tau_n = np.exp(logs[n])
        joint = swap_collision(state, tau_n, 1.0)
        state = joint.marginal((0,))
        m_new = joint.marginal((1,))
        dE[n - 1] = float(levels[n] @ (m_new - tau_n))
        # the machine leaves in the system's previous Gibbs state
        rel[n - 1] = max(float(np.sum(np.exp(logs[n - 1]) * (logs[n - 1] - logs[n]))), 0.0)
        mi[n - 1] = mutual_information(joint, ((0,), (1,)))
        ground[n - 1] = state[0]
    ledger = StepLedger(dE, rel, mi, ground)
    report = CoolingReport(
        beta=beta,
        deltaE_M=float(dE.sum()),
        beta_deltaE_M=float(beta * dE.sum()),
        landauer=s_init - shannon_entropy(state),
        relent_sum=float(rel.sum()),
        mutual_info=float(mi.sum()),
        final_state=state,
        per_step=ledger,
    )
    if not abs(report.residual) < IDENTITY_TOL:
        raise ConsistencyError(f"Landauer equality violated: residual {report.residual!r}")
    return report


# ---------------------------------------------------------------------------
# Schedule generators
# ---------------------------------------------------------------------------

def schedule_rw(N: int, x0: float, x1: float) -> GapSchedule:
    """Machine gaps changing linearly from x0 to x1 (the system starts at x0)."""
    if N < 2:
        raise DomainError("linear ramps need N >= 2")
    xi = x0 + (x1 - x0) * np.arange(N) / (N - 1)
    xi[-1] = x1
    return GapSchedule(xi, x0, "gap")


def _gap_from_excited(e, beta):
    return np.log((1.0 - e) / e) / beta


def schedule_ssp(N: int, beta: float, p0: float, p1: float, *,
                 gap0: float | None = None, gap1: float | None = None) -> GapSchedule:
    """Excited populations changing linearly from p0 to p1.

    Populations near 1/2 lose relative accuracy in their gap, so callers that
    know the exact boundary gaps may pin them with ``gap0``/``gap1``.
    """
    if N < 2:
        raise DomainError("linear ramps need N >= 2")
    if not (0.0 < p1 <= p0 < 1.0):
        raise DomainError(f"need 0 < p1 <= p0 < 1, got p0={p0!r}, p1={p1!r}")
    e = p0 + (p1 - p0) * np.arange(N) / (N - 1)
    xi = _gap_from_excited(e, beta)
    x0 = float(xi[0]) if gap0 is None else float(gap0)
    xi[0] = x0
    if gap1 is not None:
        xi[-1] = gap1
    return GapSchedule(xi, x0, "gap")


def build_schedule(protocol: str, N: int, beta: float, gap: float, lam: float,
                   *, m: int = 500, rng=None) -> GapSchedule:
    """Qubit gap schedule for one of :data:`PROTOCOLS`, cooling from beta to lam*beta.

    All protocols share the boundary gaps ``gap`` and ``lam * gap``.
    """
    from .goe import GoeConfig, schedule_goe_eigenvalue, schedule_goe_spacing

    x0, x1 = gap, lam * gap
    if protocol == "tl":
        return tl_schedule(N, beta, gap, lam)
    if protocol == "rw":
        return schedule_rw(N, x0, x1)
    if protocol == "ssp":
        p0 = float(gibbs_state(beta, [0.0, x0])[1])
        p1 = float(gibbs_state(beta, [0.0, x1])[1])
        return schedule_ssp(N, beta, p0, p1, gap0=x0, gap1=x1)
    if protocol in ("goe-eig", "goe-spacing"):
        if rng is None:
            raise DomainError(f"protocol {protocol!r} needs a random generator")
        cfg = GoeConfig(N=N, m=m, x0=x0, x1=x1)
        fn = schedule_goe_eigenvalue if protocol == "goe-eig" else schedule_goe_spacing
        return fn(cfg, rng)
    raise DomainError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}")


# ---------------------------------------------------------------------------
# Ladder machine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderStep:
    q0_new: float
    delta_q0: float
    deltaE_M: float
    cost_per_pop: float
    ratio_limit: float
    nu: float


def ladder_machine_step(d: int, beta_S: float, omega_S: float, beta: float, omega_M: float) -> LadderStep:
    """Qubit system against an equally spaced d-level machine.

    The interaction lifts the machine one rung whenever it lowers the
    system, |1, n> <-> |0, n+1> for n < d-1. The returned ``nu`` is the
    effective gap reached as d -> infinity, defined by
    exp(beta*nu) = exp(beta*omega_M) + exp(beta*omega_M - beta_S*omega_S) - 1.
    """
    if d < 2:
        raise DomainError("the ladder machine needs d >= 2")
    if omega_M < 0 or omega_S < 0 or beta <= 0 or beta_S < 0:
        raise DomainError("gaps must be non-negative and temperatures positive")
    x = beta * omega_M
    y = beta_S * omega_S
    if x == 0.0:
        ratio = (d - 1) / d
    else:
        ratio = math.expm1(-(d - 1) * x) / math.expm1(-d * x)
    dq = ratio * (-math.expm1(y - x)) * float(expit(-y))
    q0 = float(expit(y))
    log_ratio = x + math.log1p(math.exp(-y) - math.exp(-x))
    return LadderStep(
        q0_new=q0 + dq,
        delta_q0=dq,
        deltaE_M=omega_M * dq,
        cost_per_pop=omega_M,
        ratio_limit=math.exp(log_ratio) if log_ratio < 700 else math.inf,
        nu=log_ratio / beta,
    )


def ladder_joint_simulation(d: int, beta_S: float, omega_S: float, beta: float, omega_M: float):
    """Direct simulation of the ladder collision on all 2d joint populations.

    Returns ``(system', machine', deltaE_M)``.
    """
    s = gibbs_state(beta_S, [0.0, omega_S])
    E_M = omega_M * np.arange(d, dtype=float)
    m = gibbs_state(beta, E_M)
    P = np.outer(s, m)
    out = P.copy()
    for n in range(d - 1):
        out[1, n], out[0, n + 1] = P[0, n + 1], P[1, n]
    joint = JointState((2, d), out)
    m_new = joint.marginal((1,))
    return joint.marginal((0,)), m_new, float(E_M @ (m_new - m))


def final_relative_entropy(report: CoolingReport, beta: float, H) -> float:
    """D(final system state || tau(beta, H)); zero when the protocol lands on target."""
    return relative_entropy(report.final_state, gibbs_state(beta, H))
