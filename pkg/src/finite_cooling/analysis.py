"""Numerical audits: correlation bounds under energy-conserving dynamics and
a brute-force check that a single full swap is the cheapest qubit cooling step."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DomainError
from .thermo import (
    JointState,
    as_levels,
    gibbs_state,
    marginalize,
    mutual_information,
    relative_entropy,
    shannon_entropy,
)

DEGENERACY_TOL = 1e-9
BOUND_TOL = 1e-10
WORK_TOL = 1e-12


def degeneracy_classes(energies, tol: float = DEGENERACY_TOL):
    """Group joint indices by total energy (row-major over the subsystems).

    ``energies`` lists each subsystem's levels. Returns a list of index
    arrays, one per class, in increasing energy order.
    """
    levels = [as_levels(e) for e in energies]
    total = np.zeros(1)
    for lv in levels:
        total = (total[:, None] + lv[None, :]).ravel()
    order = np.argsort(total, kind="stable")
    classes, current = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if total[b] - total[a] <= tol:
            current.append(b)
        else:
            classes.append(np.array(sorted(current)))
            current = [b]
    classes.append(np.array(sorted(current)))
    return classes


@dataclass(frozen=True)
class PopulationMap:
    """A doubly stochastic matrix acting on joint populations."""

    dims: tuple
    matrix: np.ndarray
    classes: tuple

    def apply(self, joint: JointState) -> JointState:
        if tuple(joint.dims) != tuple(self.dims):
            raise DomainError("joint dimensions do not match the map")
        return JointState(self.dims, self.matrix @ joint.probs)


def random_energy_conserving_map(dims, energies, rng: np.random.Generator,
                                 swaps_per_pair: float = 1.0) -> PopulationMap:
    """Random composition of pairwise partial swaps inside each degeneracy class.

    A class of size k receives about ``swaps_per_pair * k(k-1)/2`` swaps
    (at least one) on random pairs with uniform random weights, so every
    class weight and hence the total energy is left unchanged.
    """
    dims = tuple(int(d) for d in dims)
    if len(energies) != len(dims) or any(len(as_levels(e)) != d for e, d in zip(energies, dims)):
        raise DomainError("one level list per subsystem, matching dims")
    D = int(np.prod(dims))
    T = np.eye(D)
    classes = degeneracy_classes(energies)
    for cls in classes:
        k = cls.size
        if k < 2:
            continue
        for _ in range(max(1, int(round(swaps_per_pair * k * (k - 1) / 2)))):
            a, b = rng.choice(cls, size=2, replace=False)
            s = rng.uniform()
            ra, rb = T[a].copy(), T[b].copy()
            T[a] = (1 - s) * ra + s * rb
            T[b] = (1 - s) * rb + s * ra
    return PopulationMap(dims, T, tuple(classes))


@dataclass(frozen=True)
class CorrelationAudit:
    """Outcome of one energy-conserving trial on S (x) C (x) H.

    ``deltaF`` and ``W`` are energies; ``deltaI`` and the ``ssa_slack``
    entries are in nats. Each slack is non-negative when the corresponding
    entropy inequality holds.
    """

    deltaF: dict
    deltaI: dict
    lhs: float
    rhs: float
    W: float
    hot_bound: float
    beta_deltaF_H: float
    ssa_slack: tuple = field(default=())

    @property
    def holds(self) -> bool:
        return (
            self.lhs <= self.rhs + BOUND_TOL
            and abs(self.W) < WORK_TOL
            and self.beta_deltaF_H <= self.hot_bound + BOUND_TOL
            and self.hot_bound <= BOUND_TOL
            and all(s >= -BOUND_TOL for s in self.ssa_slack)
        )


def audit_trial(beta, beta_H, H_S, H_C, H_H, pmap: PopulationMap) -> CorrelationAudit:
    """Apply ``pmap`` to tau_S(beta) (x) tau_C(beta) (x) tau_H(beta_H) and audit the result."""
    levels = [as_levels(H) for H in (H_S, H_C, H_H)]
    init = [gibbs_state(beta, levels[0]), gibbs_state(beta, levels[1]), gibbs_state(beta_H, levels[2])]
    joint0 = JointState.product(*init)
    joint1 = pmap.apply(joint0)
    names = ("S", "C", "H")
    marg = [marginalize(joint1, (k,)) for k in range(3)]
    dS = {x: shannon_entropy(marg[k]) - shannon_entropy(init[k]) for k, x in enumerate(names)}
    dE = {x: float(levels[k] @ (marg[k] - init[k])) for k, x in enumerate(names)}
    dF = {x: dE[x] - dS[x] / beta for x in names}
    pairs = {"SC": (0, 1), "SH": (0, 2), "CH": (1, 2)}
    dI = {k: mutual_information(joint1, ((a,), (b,))) for k, (a, b) in pairs.items()}
    W = -sum(dE.values())
    lhs = sum(dF.values())
    rhs = -W - (2.0 / 3.0) * sum(dI.values()) / beta
    # the three strong-subadditivity consequences, one per singled-out subsystem
    slack = (
        dS["C"] + dS["H"] - dI["SC"] - dI["SH"] + dS["S"],
        dS["S"] + dS["H"] - dI["SC"] - dI["CH"] + dS["C"],
        dS["S"] + dS["C"] - dI["SH"] - dI["CH"] + dS["H"],
    )
    hot = (-(2.0 / 3.0) * sum(dI.values())
           - relative_entropy(marg[0], init[0]) - relative_entropy(marg[1], init[1]))
    return CorrelationAudit(dF, dI, lhs, rhs, W, hot, beta * dF["H"], slack)


def correlation_bound_check(beta, beta_H, H_S, H_C, H_H, trials: int,
                            rng: np.random.Generator) -> list:
    """Audit ``trials`` random energy-conserving maps; returns one record per trial."""
    if not 0 <= beta_H <= beta:
        raise DomainError("need 0 <= beta_H <= beta")
    if not beta > 0:
        raise DomainError("beta must be positive")
    levels = [as_levels(H) for H in (H_S, H_C, H_H)]
    dims = tuple(lv.size for lv in levels)
    out = []
    for _ in range(trials):
        pmap = random_energy_conserving_map(dims, levels, rng)
        out.append(audit_trial(beta, beta_H, *levels, pmap))
    return out


def degenerate_qubit_gaps(rng: np.random.Generator):
    """Random (omega_S, omega_C, omega_H) with at least one resonance among the three."""
    a, b = rng.uniform(0.1, 3.0, size=2)
    patterns = (
        (a, a + b, b),   # S + H = C: the virtual swap
        (a + b, a, b),
        (a, b, a + b),
        (a, a, b),
        (a, b, a),
        (b, a, a),
        (a, a, a),
    )
    return patterns[rng.integers(len(patterns))]


# ---------------------------------------------------------------------------
# Single-step optimum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Optimum:
    q: float
    omega: float
    deltaE: float
    resolution: float
    history: tuple = ()


def _ground(beta, omega):
    return expit(beta * omega)


def brute_force_optimum(p: float, p_target: float, beta: float, grid: int = 2001,
                        levels: int = 4, omega_max: float | None = None) -> Optimum:
    """Cheapest single probabilistic swap taking ground population ``p`` to ``p_target``.

    A qubit machine of gap omega (ground population mu(omega) at beta) is
    swapped in with weight q. The target fixes q = (p' - p)/(mu - p), so
    the search runs over omega alone: a uniform grid on [0, omega_max],
    then ``levels - 1`` refinements on the two cells around the incumbent.
    ``history`` lists the best cost found at each level.
    """
    if not 0.0 < p < 1.0:
        raise DomainError("initial ground population must lie in (0, 1)")
    if not p <= p_target < 1.0:
        raise DomainError(f"target {p_target!r} must lie in [p, 1)")
    if grid < 3 or levels < 1:
        raise DomainError("need grid >= 3 and levels >= 1")
    if omega_max is None:
        omega_max = 100.0 / beta
    if _ground(beta, omega_max) < p_target:
        raise DomainError(f"target {p_target!r} unreachable with gaps up to {omega_max!r}")
    if p_target == p:
        return Optimum(0.0, 0.0, 0.0, omega_max / (grid - 1), (0.0,))
    lo, hi = 0.0, float(omega_max)
    history = []
    best = None
    for _ in range(levels):
        omega = np.linspace(lo, hi, grid)
        mu = _ground(beta, omega)
        feasible = mu >= p_target
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(feasible, (p_target - p) / (mu - p), np.inf)
            cost = np.where(feasible, omega * q * (mu - p), np.inf)
        k = int(np.argmin(cost))
        if not math.isfinite(cost[k]):
            raise DomainError("no feasible gap on the search grid")
        if best is None or cost[k] <= best[2]:
            best = (float(q[k]), float(omega[k]), float(cost[k]))
        history.append(best[2])
        cell = omega[1] - omega[0]
        lo, hi = max(0.0, best[1] - cell), best[1] + cell
    return Optimum(best[0], best[1], best[2], cell, tuple(history))


def single_swap_gap(p_target: float, beta: float) -> float:
    """Machine gap whose Gibbs ground population equals ``p_target``."""
    return math.log(p_target / (1.0 - p_target)) / beta
