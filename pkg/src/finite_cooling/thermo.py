"""Exact thermodynamics of diagonal (classical) states.

Every state handled by this package is diagonal in the energy eigenbasis, so
density operators reduce to probability vectors and the von Neumann quantities
reduce to their Shannon counterparts. All logarithms are natural (nats).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError

NORM_TOL = 1e-12
IDENTITY_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HamiltonianSpec:
    """Sorted energy levels of a finite system with the ground level at zero."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.array(self.levels, dtype=float).ravel()
        if lv.size < 2:
            raise DomainError("a Hamiltonian needs at least two levels")
        if not np.all(np.isfinite(lv)):
            raise DomainError("energy levels must be finite")
        if lv[0] != 0.0:
            raise DomainError(f"ground level must be exactly 0, got {lv[0]!r}")
        if np.any(np.diff(lv) < 0):
            raise DomainError("energy levels must be sorted non-decreasingly")
        object.__setattr__(self, "levels", _readonly(lv))

    @classmethod
    def qubit(cls, gap: float) -> "HamiltonianSpec":
        return cls(np.array([0.0, gap]))

    @classmethod
    def equally_spaced(cls, d: int, gap: float = 1.0) -> "HamiltonianSpec":
        return cls(gap * np.arange(d, dtype=float))

    @property
    def dim(self) -> int:
        return self.levels.size

    @property
    def gaps(self) -> np.ndarray:
        """Neighbouring-level gaps omega^(i) = E^(i+1) - E^(i)."""
        return np.diff(self.levels)

    def scaled(self, factor: float) -> "HamiltonianSpec":
        return HamiltonianSpec(factor * self.levels)

    def __len__(self):
        return self.dim


def as_levels(H) -> np.ndarray:
    if isinstance(H, HamiltonianSpec):
        return H.levels
    return np.asarray(H, dtype=float)


def validate_populations(p, tol: float = NORM_TOL) -> np.ndarray:
    """Return ``p`` as a float array after checking it is a probability vector."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("a population vector must be one-dimensional and non-empty")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("populations must be finite and non-negative")
    if abs(p.sum() - 1.0) > tol:
        raise DomainError(f"populations sum to {p.sum()!r}, not 1")
    return p


# ---------------------------------------------------------------------------
# Gibbs states
# ---------------------------------------------------------------------------

def _check_beta(beta, ground_limit):
    if ground_limit:
        return
    if not math.isfinite(beta):
        raise DomainError("non-finite beta requires ground_limit=True")
    if beta < 0:
        raise DomainError(f"beta must be non-negative, got {beta!r}")


def log_partition_function(beta: float, H) -> float:
    """log Z(beta) by max-shifted log-sum-exp."""
    _check_beta(beta, False)
    return float(logsumexp(-beta * as_levels(H)))


def gibbs_log_probs(beta: float, H) -> np.ndarray:
    """Log-populations of the thermal state; accurate even where they underflow."""
    _check_beta(beta, False)
    a = -beta * as_levels(H)
    return a - logsumexp(a)


def gibbs_state(beta: float, H, *, ground_limit: bool = False) -> np.ndarray:
    """Thermal populations exp(-beta E_i)/Z.

    With ``ground_limit=True`` the beta -> infinity limit is returned, i.e. the
    uniform distribution over the (possibly degenerate) ground level; the value
    of ``beta`` is then ignored.
    """
    levels = as_levels(H)
    if ground_limit:
        g = (levels == levels.min()).astype(float)
        return g / g.sum()
    return np.exp(gibbs_log_probs(beta, levels))


def qubit_excited_population(u):
    """Excited population 1/(1+e^u) of a qubit with rescaled gap u = beta*gap."""
    return 0.5 * (1.0 - np.tanh(0.5 * np.asarray(u, dtype=float)))


# ---------------------------------------------------------------------------
# Entropies and divergences
# ---------------------------------------------------------------------------

def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def relative_entropy(p, q) -> float:
    """D(p||q) in nats; ``math.inf`` when supp(p) is not inside supp(q)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError("relative entropy needs vectors of equal length")
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(max(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))), 0.0))


def relative_entropy_from_logs(logp, logq) -> np.ndarray:
    """D(p||q) from log-populations, along the last axis.

    Avoids re-taking logs of rounded probabilities; this is what keeps the
    many tiny per-step divergences of a long protocol accurate.
    """
    logp = np.asarray(logp, dtype=float)
    logq = np.asarray(logq, dtype=float)
    p = np.exp(logp)
    with np.errstate(invalid="ignore"):
        terms = np.where(p > 0, p * (logp - logq), 0.0)
    return np.sum(terms, axis=-1)


def average_energy(p, H) -> float:
    p = np.asarray(p, dtype=float)
    levels = as_levels(H)
    if p.shape != levels.shape:
        raise DomainError(f"population length {p.size} != number of levels {levels.size}")
    return float(p @ levels)


def free_energy(p, H, beta: float) -> float:
    """F = E(p) - S(p)/beta."""
    if beta == 0:
        raise DomainError("free energy is undefined at beta = 0")
    _check_beta(beta, False)
    return average_energy(p, H) - shannon_entropy(p) / beta


def majorizes(p, q, tol: float = NORM_TOL) -> bool:
    """True iff p majorises q (p is at least as pure / cold as q)."""
    p = np.sort(np.asarray(p, dtype=float))[::-1]
    q = np.sort(np.asarray(q, dtype=float))[::-1]
    if p.shape != q.shape:
        raise DomainError("majorisation compares vectors of equal length")
    return bool(np.all(np.cumsum(p) >= np.cumsum(q) - tol))


# ---------------------------------------------------------------------------
# Joint states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointState:
    """Diagonal state of a composite system; ``probs`` is in row-major order."""

    dims: tuple
    probs: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        probs = validate_populations(np.array(self.probs, dtype=float).ravel())
        if int(np.prod(dims)) != probs.size:
            raise DomainError(f"dims {dims} do not match {probs.size} probabilities")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "probs", _readonly(probs))

    @classmethod
    def product(cls, *marginals) -> "JointState":
        out = np.ones(1)
        for m in marginals:
            out = np.kron(out, np.asarray(m, dtype=float))
        return cls(tuple(len(m) for m in marginals), out)

    @property
    def tensor(self) -> np.ndarray:
        return self.probs.reshape(self.dims)

    def marginal(self, keep: Sequence[int]) -> np.ndarray:
        return marginalize(self, keep)

    def entropy(self) -> float:
        return shannon_entropy(self.probs)


def marginalize(joint: JointState, keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a diagonal joint state onto the subsystems in ``keep``.

    The kept subsystems appear in the order given, so ``keep=(2, 0)`` yields
    the joint populations of subsystems 2 and 0 flattened with 2 as the
    slow index.
    """
    keep = tuple(int(k) for k in keep)
    n = len(joint.dims)
    if not keep:
        raise DomainError("cannot marginalise onto an empty set of subsystems")
    if len(set(keep)) != len(keep) or any(k < 0 or k >= n for k in keep):
        raise DomainError(f"invalid subsystem selection {keep} for {n} subsystems")
    drop = tuple(i for i in range(n) if i not in keep)
    t = joint.tensor.sum(axis=drop) if drop else joint.tensor
    remaining = [i for i in range(n) if i in keep]
    t = np.transpose(t, [remaining.index(k) for k in keep])
    out = t.ravel()
    return out / out.sum()


def mutual_information(joint: JointState, cut) -> float:
    """I(A:B) = S(A) + S(B) - S(AB) for a bipartition ``cut = (A, B)``."""
    a, b = (tuple(part) for part in cut)
    if not a or not b or set(a) & set(b):
        raise DomainError(f"invalid bipartition {cut}")
    if any(k < 0 or k >= len(joint.dims) for k in a + b):
        raise DomainError(f"bipartition {cut} refers to missing subsystems")
    s_a = shannon_entropy(marginalize(joint, a))
    s_b = shannon_entropy(marginalize(joint, b))
    s_ab = shannon_entropy(marginalize(joint, a + b))
    return max(s_a + s_b - s_ab, 0.0)
