"""Gap schedules drawn from the Gaussian orthogonal ensemble.

Two constructions are offered. One averages the ordered spectrum of random
(N+1)x(N+1) GOE matrices and maps it affinely onto the gap interval; the
other does the same with the normalised nearest-neighbour spacings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, NumericalError
from .geometry import GapSchedule

RNG_ALGORITHM = "numpy.random.PCG64"
SYMMETRY_TOL = 1e-12
JACOBI_MAX_DIM = 16


@dataclass(frozen=True)
class GoeConfig:
    N: int
    m: int = 500
    seed: int | None = None
    x0: float = 1.0
    x1: float = 10.0

    def __post_init__(self):
        if self.N < 2:
            raise DomainError("GOE schedules need N >= 2")
        if self.m < 1:
            raise DomainError("ensemble size m must be at least 1")
        if not (math.isfinite(self.x0) and math.isfinite(self.x1)):
            raise DomainError("boundary gaps must be finite")

    def generator(self, rng=None) -> np.random.Generator:
        if rng is not None:
            return rng
        if self.seed is None:
            raise DomainError("a seed or a generator is required for GOE sampling")
        return make_rng(self.seed)


def make_rng(seed, *spawn_key) -> np.random.Generator:
    """PCG64 stream for ``seed``; ``spawn_key`` selects an independent sub-stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(spawn_key))))


def sample_goe_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """(R + R^T)/sqrt(2) with i.i.d. standard normal R."""
    if dim < 2:
        raise DomainError("GOE matrices need dim >= 2")
    R = rng.standard_normal((dim, dim))
    return (R + R.T) / math.sqrt(2.0)


def _check_symmetric(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
        raise DomainError("matrix is not symmetric")
    return M


def jacobi_eigh(M, tol: float = 1e-14, max_sweeps: int = 60):
    """Cyclic Jacobi rotations; returns (eigenvalues, eigenvectors as columns), unsorted."""
    A = _check_symmetric(M).copy()
    n = A.shape[0]
    V = np.eye(n)
    norm = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * max(norm, 1e-300):
            return np.diag(A).copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(diff) > 1e100 * abs(apq):
                    t = apq / diff  # theta would overflow; t ~ 1/(2 theta)
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def symmetric_eigh(M, method: str = "auto"):
    """Eigenpairs of a real symmetric matrix, eigenvalues in descending order.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    dimension 16, LAPACK beyond).
    """
    M = _check_symmetric(M)
    if method == "auto":
        method = "jacobi" if M.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        w, V = jacobi_eigh(M)
    elif method == "lapack":
        w, V = np.linalg.eigh(M)
    else:
        raise DomainError(f"unknown eigenvalue method {method!r}")
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def symmetric_eigenvalues(M, method: str = "auto") -> np.ndarray:
    """Eigenvalues of a real symmetric matrix, descending."""
    if method == "lapack":
        return np.linalg.eigvalsh(_check_symmetric(M))[::-1].copy()
    return symmetric_eigh(M, method)[0]


def goe_sorted_spectra(dim: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Spectra of ``m`` GOE samples scaled by 1/sqrt(dim), each sorted descending.

    Matrices are drawn one at a time so the result does not depend on how
    the eigenvalue work is batched.
    """
    out = np.empty((m, dim))
    for i in range(m):
        out[i] = np.linalg.eigvalsh(sample_goe_matrix(dim, rng))[::-1]
    return out / math.sqrt(dim)


def _affine(values, x0, x1, first, last):
    span = first - last
    if not span != 0.0:
        raise NumericalError("degenerate ensemble average: cannot rescale onto (x0, x1)")
    return x0 * (values - last) / span - x1 * (values - first) / span


def _spectra(cfg: GoeConfig, rng, spectra):
    if spectra is None:
        return goe_sorted_spectra(cfg.N + 1, cfg.m, cfg.generator(rng))
    spectra = np.asarray(spectra, dtype=float)
    if spectra.ndim != 2 or spectra.shape[1] != cfg.N + 1:
        raise DomainError(f"expected spectra of shape (m, {cfg.N + 1})")
    return spectra


def schedule_goe_eigenvalue(cfg: GoeConfig, rng=None, *, spectra=None) -> GapSchedule:
    """Averaged ordered eigenvalues mapped onto the gaps, first one at x0.

    Only the first N of the N+1 averaged eigenvalues are used.
    """
    lam = np.sort(_spectra(cfg, rng, spectra).mean(axis=0))[::-1][: cfg.N]
    xi = _affine(lam, cfg.x0, cfg.x1, lam[0], lam[-1])
    xi[0], xi[-1] = cfg.x0, cfg.x1
    return GapSchedule(xi, cfg.x0, "gap")


def mean_normalised_spacings(spectra) -> np.ndarray:
    """Per-sample spacings lambda_k - lambda_{k+1}, divided by their sum, then averaged."""
    s = -np.diff(np.asarray(spectra, dtype=float), axis=1)
    total = s.sum(axis=1, keepdims=True)
    if np.any(total <= 0):
        raise NumericalError("a sample has a vanishing spectral width")
    return (s / total).mean(axis=0)


def schedule_goe_spacing(cfg: GoeConfig, rng=None, *, spectra=None,
                         rescale: str = "affine") -> GapSchedule:
    """Gap schedule from normalised GOE nearest-neighbour spacings.

    With ``rescale="affine"`` the averaged spacings, sorted ascending, are
    themselves mapped affinely onto (x0, x1). ``rescale="cumulative"``
    instead uses the ascending spacings as increments between consecutive
    gaps, which yields a smooth monotone ramp.
    """
    s = np.sort(mean_normalised_spacings(_spectra(cfg, rng, spectra)))
    if rescale == "affine":
        xi = _affine(s, cfg.x0, cfg.x1, s[0], s[-1])
    elif rescale == "cumulative":
        steps = s[: cfg.N - 1]
        if not steps.sum() > 0:
            raise NumericalError("spacings sum to zero")
        frac = np.concatenate([[0.0], np.cumsum(steps)]) / steps.sum()
        xi = cfg.x0 + (cfg.x1 - cfg.x0) * frac
    else:
        raise DomainError(f"unknown rescale mode {rescale!r}")
    xi[0], xi[-1] = cfg.x0, cfg.x1
    return GapSchedule(xi, cfg.x0, "gap")
