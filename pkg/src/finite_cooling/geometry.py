"""Thermodynamic length for commuting (diagonal) Hamiltonian paths.

For qubits everything is expressed through the rescaled gap ``u = beta * gap``;
the metric, Christoffel symbol and geodesic are then free of beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import LinAlgError, solveh_banded
from scipy.special import logsumexp

from .errors import ConsistencyError, ConvergenceError, DomainError
from .thermo import (
    HamiltonianSpec,
    as_levels,
    gibbs_log_probs,
    log_partition_function,
    relative_entropy_from_logs,
)

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class GapSchedule:
    """Machine Hamiltonians for steps n = 1..N, plus the system's starting point.

    ``kind`` selects how ``values`` are read:

    * ``"gap"``: qubit machine gaps xi_n (energy units); ``start`` is the system gap.
    * ``"scale"``: factors lambda_n so that H_Mn = lambda_n * H_S; ``start`` is 1.
    * ``"levels"``: full machine spectra, shape (N, d); ``start`` is H_S's levels.

    ``path`` prepends ``start`` so that ``path[0]`` is the initial system
    Hamiltonian and ``path[-1]`` the final one.
    """

    values: np.ndarray
    start: object
    kind: str = "gap"

    def __post_init__(self):
        if self.kind not in ("gap", "scale", "levels"):
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        vals = np.array(self.values, dtype=float)
        if self.kind == "levels":
            start = np.array(self.start, dtype=float).ravel()
            if vals.ndim != 2 or vals.shape[1] != start.size:
                raise DomainError("level schedules need shape (N, d) matching the start levels")
        else:
            vals = vals.ravel()
            start = float(self.start)
        if vals.shape[0] < 1:
            raise DomainError("a schedule needs at least one step")
        if not np.all(np.isfinite(vals)):
            raise DomainError("schedule values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "start", start)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def end(self):
        return self.values[-1]

    @property
    def path(self) -> np.ndarray:
        if self.kind == "levels":
            return np.vstack([self.start[None, :], self.values])
        return np.concatenate([[self.start], self.values])

    def rescaled(self, factor: float) -> "GapSchedule":
        if self.kind == "scale":
            raise DomainError("scale-factor schedules are dimensionless")
        return GapSchedule(self.values * factor, self.start * factor, self.kind)


def path_log_states(schedule: GapSchedule, beta: float, H_S) -> np.ndarray:
    """Log-populations of tau(beta, H_n) for n = 0..N, shape (N+1, d)."""
    return np.array([gibbs_log_probs(beta, lv) for lv in path_levels(schedule, H_S)])


def path_levels(schedule: GapSchedule, H_S) -> np.ndarray:
    """Energy levels along the schedule, shape (N+1, d); row 0 is H_S."""
    levels = as_levels(H_S)
    if schedule.kind == "gap":
        if levels.size != 2:
            raise DomainError("gap schedules drive qubit systems only")
        if not math.isclose(schedule.start, levels[1], rel_tol=BOUNDARY_TOL, abs_tol=BOUNDARY_TOL):
            raise DomainError(
                f"schedule starts at gap {schedule.start!r} but the system gap is {levels[1]!r}")
        path = schedule.path
        return np.column_stack([np.zeros_like(path), path])
    if schedule.kind == "scale":
        if not math.isclose(schedule.start, 1.0, abs_tol=BOUNDARY_TOL):
            raise DomainError("scale schedules must start at factor 1")
        return schedule.path[:, None] * levels[None, :]
    if schedule.values.shape[1] != levels.size:
        raise DomainError("machine dimension differs from the system dimension")
    if not np.allclose(schedule.start, levels, rtol=BOUNDARY_TOL, atol=BOUNDARY_TOL):
        raise DomainError("level schedule does not start at the system Hamiltonian")
    return schedule.path


# ---------------------------------------------------------------------------
# Metric
# ---------------------------------------------------------------------------

def metric_qubit(u):
    """e^u / (1 + e^u)^2, the population variance of a qubit with rescaled gap u."""
    a = np.exp(-np.abs(np.asarray(u, dtype=float)))
    out = a / (1.0 + a) ** 2
    return float(out) if out.ndim == 0 else out


def christoffel_qubit(u):
    """Gamma(u) = m'(u) / (2 m(u)) = -tanh(u/2)/2."""
    return -0.5 * np.tanh(0.5 * np.asarray(u, dtype=float))


def covariance_metric(beta: float, H, Hdot) -> float:
    """beta^2 Var_tau(Hdot): the squared speed of a commuting path."""
    levels = as_levels(H)
    hd = np.asarray(Hdot, dtype=float)
    if hd.shape != levels.shape:
        raise DomainError("Hdot must have one entry per energy level")
    p = np.exp(gibbs_log_probs(beta, levels))
    mean = p @ hd
    return float(beta ** 2 * (p @ (hd - mean) ** 2))


@dataclass(frozen=True)
class PathSpec:
    """A straight-line path in a one-parameter Hamiltonian family.

    mode ``"gap"``: H(t) = diag(0, xi(t)) with xi linear from start to end.
    mode ``"scale"``: H(t) = lambda(t) H_S with lambda linear from start to end.
    """

    H_S: HamiltonianSpec
    mode: str
    start: float
    end: float
    beta: float

    def __post_init__(self):
        if self.mode not in ("gap", "scale"):
            raise DomainError(f"unknown path mode {self.mode!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise DomainError("path endpoints must be finite")
        if not self.beta > 0:
            raise DomainError("beta must be positive")

    def _direction(self):
        if self.mode == "gap":
            return np.array([0.0, 1.0])
        return np.asarray(self.H_S.levels)

    def hamiltonian(self, t: float) -> np.ndarray:
        x = self.start + (self.end - self.start) * t
        return x * self._direction()

    def velocity(self, t: float) -> np.ndarray:
        return (self.end - self.start) * self._direction()

    def length(self) -> float:
        """Continuous thermodynamic length by adaptive quadrature of sqrt(cov)."""
        f = lambda t: math.sqrt(covariance_metric(self.beta, self.hamiltonian(t), self.velocity(t)))
        val, _ = quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val


# ---------------------------------------------------------------------------
# Lengths
# ---------------------------------------------------------------------------

def step_divergences(schedule: GapSchedule, beta: float, H_S) -> np.ndarray:
    """D(tau_{n-1} || tau_n) for n = 1..N."""
    logs = path_log_states(schedule, beta, H_S)
    return relative_entropy_from_logs(logs[:-1], logs[1:])


def discrete_length(schedule: GapSchedule, beta: float, H_S) -> float:
    """Sum over steps of sqrt(2 D(tau_{n-1} || tau_n))."""
    return float(np.sum(np.sqrt(2.0 * step_divergences(schedule, beta, H_S))))


def _hellinger_length(h: float, slack: float) -> float:
    # 2 arccos(1 - h) written as 4 arcsin(sqrt(h/2)); stable for nearby states
    if h < -slack or h > 1.0 + slack:
        raise ConsistencyError(f"Bhattacharyya coefficient {1 - h!r} outside [0, 1]")
    h = min(max(h, 0.0), 1.0)
    return 4.0 * math.asin(math.sqrt(h / 2.0))


def bhattacharyya_length(p, q, slack: float = 1e-12) -> float:
    """2 arccos(sum_i sqrt(p_i q_i)), the length of the great circle between p and q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    h = 0.5 * float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))
    return _hellinger_length(h, slack)


def _hellinger_from_logs(logp, logq) -> float:
    # sqrt(p) - sqrt(q) = sqrt(q) * expm1((log p - log q)/2), free of cancellation
    diff = np.exp(0.5 * logq) * np.expm1(0.5 * (logp - logq))
    return 0.5 * float(np.sum(diff * diff))


def _partition_hellinger(beta, lam, H) -> float:
    log_bc = (log_partition_function(0.5 * beta * (1.0 + lam), H)
              - 0.5 * (log_partition_function(beta, H) + log_partition_function(lam * beta, H)))
    return -math.expm1(log_bc)


def partition_function_length(beta: float, lam: float, H, slack: float = 1e-12) -> float:
    """2 arccos(Z(beta(1+lam)/2) / sqrt(Z(beta) Z(lam beta)))."""
    return _hellinger_length(_partition_hellinger(beta, lam, H), slack)


def minimal_length_closed_form(beta: float, lam: float, H_S, check_tol: float = 1e-12) -> float:
    """Minimal thermodynamic length between tau(beta, H_S) and tau(lam*beta, H_S).

    The value comes from the Bhattacharyya coefficient of the two Gibbs
    states; the partition-function expression for the same coefficient is
    evaluated alongside, and a disagreement above ``check_tol`` raises.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    if lam < 1:
        raise DomainError(f"cooling factor must be >= 1, got {lam!r}")
    h_part = _partition_hellinger(beta, lam, H_S)
    h_bhat = _hellinger_from_logs(gibbs_log_probs(beta, H_S), gibbs_log_probs(lam * beta, H_S))
    if abs(h_part - h_bhat) > check_tol:
        raise ConsistencyError(
            f"Bhattacharyya coefficients disagree: {1 - h_part!r} vs {1 - h_bhat!r}")
    return _hellinger_length(h_bhat, check_tol)


def first_order_dissipation(L: float, N: int) -> float:
    return L * L / (2.0 * N)


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------

def _gd_half(u):
    # Gudermannian of u/2: arclength coordinate of the qubit metric
    return np.arctan(np.sinh(0.5 * np.asarray(u, dtype=float)))


@dataclass(frozen=True)
class QubitGeodesic:
    """u(t) = 2 arcsinh(tan(c1 (t + c2) / 2)) through (0, u0) and (1, u1)."""

    c1: float
    c2: float
    u0: float
    u1: float
    residual: float = field(default=0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.c1 == 0.0:
            return np.full_like(t, self.u0)
        return 2.0 * np.arcsinh(np.tan(0.5 * self.c1 * (t + self.c2)))

    @property
    def length(self) -> float:
        return abs(0.5 * self.c1)


def _geodesic_residual(c, u0, u1):
    c1, c2 = c
    ends = 2.0 * np.arcsinh(np.tan(0.5 * c1 * (np.array([0.0, 1.0]) + c2)))
    return ends - np.array([u0, u1])


def _geodesic_jacobian(c):
    c1, c2 = c
    t = np.array([0.0, 1.0])
    phi = 0.5 * c1 * (t + c2)
    du = 2.0 / np.cos(phi)
    return np.column_stack([du * 0.5 * (t + c2), du * 0.5 * c1])


def solve_qubit_geodesic(u0: float, u1: float, tol: float = 1e-10, max_iter: int = 60) -> QubitGeodesic:
    """Fit (c1, c2) to the boundary values.

    The boundary conditions decouple under the Gudermannian, which gives the
    starting point; damped Newton then drives the boundary residual below
    ``tol``. c1 is confined to (-2 pi, 2 pi) where the tangent stays finite.
    """
    if not (math.isfinite(u0) and math.isfinite(u1)):
        raise DomainError("boundary gaps must be finite")
    if u0 == u1:
        return QubitGeodesic(0.0, 0.0, u0, u1, 0.0)
    phi0, phi1 = float(_gd_half(u0)), float(_gd_half(u1))
    c = np.array([2.0 * (phi1 - phi0), 0.0])
    c[1] = 2.0 * phi0 / c[0]
    res = _geodesic_residual(c, u0, u1)
    scale = max(1.0, abs(u0), abs(u1))
    it = 0
    while np.max(np.abs(res)) > tol * scale:
        if it >= max_iter:
            raise ConvergenceError(
                f"geodesic fit stalled: c = {c.tolist()}, residual = {res.tolist()}")
        step = np.linalg.solve(_geodesic_jacobian(c), -res)
        damp = 1.0
        while damp > 1e-8:
            trial = c + damp * step
            phis = 0.5 * trial[0] * (np.array([0.0, 1.0]) + trial[1])
            if abs(trial[0]) < 2 * math.pi and np.all(np.abs(phis) < 0.5 * math.pi):
                r = _geodesic_residual(trial, u0, u1)
                if np.linalg.norm(r) < np.linalg.norm(res):
                    c, res = trial, r
                    break
            damp *= 0.5
        else:
            raise ConvergenceError(f"no damped Newton step reduces the residual at c = {c.tolist()}")
        it += 1
    return QubitGeodesic(float(c[0]), float(c[1]), u0, u1, float(np.max(np.abs(res))))


def qubit_geodesic(N: int, u0: float, u1: float) -> GapSchedule:
    """Analytic qubit geodesic sampled at t_n = n/N, n = 1..N, in rescaled gaps."""
    if N < 1:
        raise DomainError("N must be at least 1")
    geo = solve_qubit_geodesic(u0, u1)
    u = geo(np.arange(1, N + 1) / N)
    u[-1] = u1
    return GapSchedule(u, u0, "gap")


def tl_schedule(N: int, beta: float, gap: float, lam: float) -> GapSchedule:
    """Thermodynamic-length (TL) gap schedule in energy units for a qubit of gap ``gap``."""
    u0 = beta * gap
    sched = qubit_geodesic(N, u0, lam * u0)
    return GapSchedule(sched.values / beta, gap, "gap")


def geodesic_scale_factors(N: int, lam: float, beta: float, gap: float = 1.0) -> np.ndarray:
    """Scale factors lambda_n that follow the analytic qubit geodesic from 1 to lam."""
    u0 = beta * gap
    vals = qubit_geodesic(N, u0, lam * u0).values / u0
    vals[-1] = lam
    return vals


def _family_moments(theta, E):
    """Mean, variance and third central moment of E under exp(-theta E)/Z."""
    a = -np.outer(theta, E)
    a -= a.max(axis=1, keepdims=True)
    p = np.exp(a)
    p /= p.sum(axis=1, keepdims=True)
    mu = p @ E
    dev = E[None, :] - mu[:, None]
    return mu, np.sum(p * dev ** 2, axis=1), np.sum(p * dev ** 3, axis=1)


def _scale_objective(theta, E):
    a = -np.outer(theta, E)
    logs = a - logsumexp(a, axis=1, keepdims=True)
    return float(np.sum(relative_entropy_from_logs(logs[:-1], logs[1:])))


def _shifted_newton_step(diag, off, g):
    # the objective is not convex everywhere; shift the tridiagonal Hessian
    # until its banded Cholesky factorisation succeeds
    ab = np.zeros((2, diag.size))
    ab[0, 1:] = off
    shift = 0.0
    floor = 1e-10 * max(float(np.max(np.abs(diag))), 1e-300)
    while True:
        ab[1] = diag + shift
        try:
            return solveh_banded(ab, -g)
        except LinAlgError:
            shift = max(4.0 * shift, floor)


def geodesic_numeric(N: int, beta: float, H_S, lam: float, max_iter: int = 200) -> GapSchedule:
    """Discrete geodesic over scale factors: minimise sum_n D(tau_{n-1} || tau_n).

    The objective couples only neighbouring steps, so its Hessian in the
    natural parameters theta_n = beta * lambda_n is tridiagonal; a damped
    Newton iteration from the geometric interpolation lambda_n = lam^(n/N)
    solves the discrete Euler-Lagrange equations.
    """
    E = np.asarray(as_levels(H_S), dtype=float)
    if E.size < 2:
        raise DomainError("need at least two levels")
    if N < 1:
        raise DomainError("N must be at least 1")
    if lam == 1.0 or N == 1:
        return GapSchedule(np.full(N, float(lam)), 1.0, "scale")
    theta = beta * lam ** (np.arange(N + 1) / N)
    theta[0], theta[-1] = beta, beta * lam
    J = _scale_objective(theta, E)
    for _ in range(max_iter):
        mu, v, k3 = _family_moments(theta, E)
        dth = np.diff(theta)
        # interior gradient and tridiagonal Hessian, k = 1..N-1
        g = (mu[:-2] - mu[1:-1]) - dth[1:] * v[1:-1]
        diag = 2.0 * v[1:-1] + dth[1:] * k3[1:-1]
        off = -v[1:-2]
        if np.max(np.abs(g)) < 1e-15 * max(1.0, np.max(np.abs(mu))):
            break
        step = _shifted_newton_step(diag, off, g)
        damp = 1.0
        while True:
            trial = theta.copy()
            trial[1:-1] += damp * step
            Jt = _scale_objective(trial, E)
            if Jt <= J:
                break
            damp *= 0.5
            if damp < 1e-12:
                raise ConvergenceError("line search failed in geodesic_numeric")
        decrease = J - Jt
        theta, J = trial, Jt
        if decrease <= 1e-12 * J:
            break
    else:
        raise ConvergenceError(f"geodesic_numeric did not converge in {max_iter} iterations")
    vals = theta[1:] / beta
    vals[-1] = lam
    return GapSchedule(vals, 1.0, "scale")


def simplex_geodesic(N: int, beta: float, H_S, lam: float) -> GapSchedule:
    """Machine spectra along the Fisher-Rao great circle from tau(beta) to tau(lam beta).

    With unrestricted machine Hamiltonians the swap protocol can visit any
    full-rank diagonal state; the great circle through sqrt(p) attains the
    closed-form minimal length for every dimension.
    """
    levels = as_levels(H_S)
    p0 = np.exp(gibbs_log_probs(beta, levels))
    p1 = np.exp(gibbs_log_probs(lam * beta, levels))
    alpha = 0.5 * bhattacharyya_length(p0, p1)
    t = np.arange(1, N + 1)[:, None] / N
    if alpha == 0.0:
        root = np.repeat(np.sqrt(p0)[None, :], N, axis=0)
    else:
        root = (np.sin((1 - t) * alpha) * np.sqrt(p0) + np.sin(t * alpha) * np.sqrt(p1)) / math.sin(alpha)
    logp = 2.0 * np.log(root)
    machine = -(logp - logp[:, :1]) / beta
    machine[-1] = lam * levels
    machine[:, 0] = 0.0
    return GapSchedule(machine, levels, "levels")


def perturbative_ratio(beta: float, H, delta, eps: float) -> float:
    """D(tau(H) || tau(H + eps*delta)) / [(beta^2 eps^2 / 2) Var_tau(delta)]."""
    levels = as_levels(H)
    delta = np.asarray(delta, dtype=float)
    logp = gibbs_log_probs(beta, levels)
    logq = gibbs_log_probs(beta, levels + eps * delta)
    D = float(relative_entropy_from_logs(logp, logq))
    return D / (0.5 * eps ** 2 * covariance_metric(beta, levels, delta))
