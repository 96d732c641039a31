"""Matrix-free restarted GMRES and closed-form condition numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class KrylovConfig:
    tol: float = 1e-11
    restart: int = 30
    max_iters: int = 500

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0 (got {self.tol})")
        if self.restart < 1:
            raise ValueError(f"restart must be >= 1 (got {self.restart})")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0 (got {self.max_iters})")


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool
    residual_history: list[float]


class ConvergenceError(RuntimeError):
    def __init__(self, message, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


def _givens(a: float, b: float) -> tuple[float, float]:
    if b == 0.0:
        return 1.0, 0.0
    r = math.hypot(a, b)
    return a / r, b / r


def gmres_solve(
    operator: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    x0: np.ndarray | None = None,
    cfg: KrylovConfig = KrylovConfig(),
) -> tuple[np.ndarray, SolveReport]:
    """Solve ``operator(x) = rhs`` with GMRES(restart).

    Arnoldi uses modified Gram-Schmidt; the small least-squares problem is
    kept triangular with Givens rotations. Stops when
    ``||rhs - operator(x)|| <= tol * ||rhs||`` (absolute ``tol`` if the
    right-hand side is numerically zero). ``iterations`` counts Arnoldi steps,
    i.e. operator applications beyond the residual evaluations.

    On non-convergence the best iterate is returned with ``converged=False``.
    """
    shape = np.shape(rhs)
    b = np.asarray(rhs, dtype=float).ravel()
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float).ravel()
    if x.shape != b.shape:
        raise ValueError(f"x0 shape {np.shape(x0)} does not match rhs shape {shape}")

    def matvec(v):
        # always copy: an operator may return (a view of) its argument
        return np.array(operator(v.reshape(shape)), dtype=float).ravel()

    bnorm = float(np.linalg.norm(b))
    target = cfg.tol * bnorm if bnorm >= 1e-300 else cfg.tol

    r = b - matvec(x) if np.any(x) else b.copy()
    beta = float(np.linalg.norm(r))
    history = [beta]
    iters = 0
    m = cfg.restart

    while beta > target and iters < cfg.max_iters:
        V = np.zeros((m + 1, b.size))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        while k < m and iters < cfg.max_iters:
            w = matvec(V[k])
            wnorm = float(np.linalg.norm(w))
            for i in range(k + 1):
                H[i, k] = np.dot(V[i], w)
                w -= H[i, k] * V[i]
            H[k + 1, k] = np.linalg.norm(w)
            breakdown = H[k + 1, k] <= 1e-14 * max(wnorm, 1e-300)
            if not breakdown:
                V[k + 1] = w / H[k + 1, k]
            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = t
            cs[k], sn[k] = _givens(H[k, k], H[k + 1, k])
            H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k += 1
            iters += 1
            history.append(abs(g[k]))
            if abs(g[k]) <= target or breakdown:
                break
        y = np.linalg.solve(np.triu(H[:k, :k]), g[:k]) if k else np.zeros(0)
        x = x + V[:k].T @ y
        r = b - matvec(x)
        beta = float(np.linalg.norm(r))
        history[-1] = beta
        if k == 0:
            break

    report = SolveReport(
        iterations=iters,
        final_residual=beta,
        converged=beta <= target,
        residual_history=history,
    )
    return x.reshape(shape), report


@dataclass(frozen=True)
class ConditionEstimate:
    kappa: float
    lambda_max: float


def _estimate(lam: float) -> ConditionEstimate:
    return ConditionEstimate(kappa=math.sqrt(1.0 + lam * lam), lambda_max=abs(lam))


def damping_shift(alpha: float, eta: float, dt: float) -> float:
    """``alpha (1 + 2 eta / dt)``, the implicit damping/inertia coefficient."""
    return alpha * (1.0 + 2.0 * eta / dt)


def _mode_factor(n: int | None) -> float:
    """Largest ``sin^2(j pi / (2 n))`` over the Neumann modes ``j = 0..n-1``.

    ``None`` gives the mesh-independent bound 1.
    """
    if n is None:
        return 1.0
    return math.sin((n - 1) * math.pi / (2 * n)) ** 2


def condition_number_1d(epsilon, dt, dx, alpha, eta, nx: int | None = None) -> ConditionEstimate:
    """Condition number of the per-step operator for ``m = e1`` in 1D.

    With ``nx`` given, the exact extreme Laplacian eigenvalue of an
    ``nx``-cell mesh replaces the ``4 / dx^2`` bound.
    """
    if not (dt > 0 and dx > 0):
        raise ValueError("dt and dx must be positive")
    lap = 4.0 * _mode_factor(nx) / dx ** 2
    return _estimate(epsilon * dt * lap + damping_shift(alpha, eta, dt))


def condition_number_3d(
    epsilon, dt, dx, dy, dz, alpha, eta, shape: tuple[int, int, int] | None = None
) -> ConditionEstimate:
    if not (dt > 0 and dx > 0 and dy > 0 and dz > 0):
        raise ValueError("dt and spacings must be positive")
    n = shape if shape is not None else (None, None, None)
    lap = sum(4.0 * _mode_factor(k) / h ** 2 for k, h in zip(n, (dx, dy, dz)))
    return _estimate(epsilon * dt * lap + damping_shift(alpha, eta, dt))
