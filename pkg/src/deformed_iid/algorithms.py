"""Query algorithms: the power method, its iteration bound, the two worked
example matrices and a random-direction baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ensembles import Field, SeedLike, as_seed, sample_sphere, sample_stiefel
from .errors import DegenerateIterate, InvalidQuery, QueryBudgetExceeded, SingularEigenbasis
from .query_model import QueryOracle, UNIT_TOL

__all__ = [
    "PowerMethodResult",
    "power_method",
    "power_method_iteration_bound",
    "example1",
    "example2",
    "example2_sigma",
    "example2_condition_number",
    "example_matrix",
    "random_start",
    "random_query_baseline",
]


@dataclass
class PowerMethodResult:
    iterate: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)
    queries_used: int = 0
    eigenvalue_estimate: complex = 0j
    stopped_early: bool = False


def _matvec(A) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(A, QueryOracle):
        if A.mode == "two-side":
            return lambda v: A.query(v)[0]
        return A.query
    M = np.asarray(A)
    return lambda v: M @ v


def random_start(d: int, seed: SeedLike = None) -> np.ndarray:
    """Uniformly distributed unit vector on the complex sphere."""
    return sample_sphere(d, Field.COMPLEX, as_seed(seed).generator(7))


def power_method(A, v0: np.ndarray, max_iters: int, tol: float | None = None,
                 stop: Callable[[int, np.ndarray], bool] | None = None) -> PowerMethodResult:
    """Run v_t = A v_{t-1} / ||A v_{t-1}|| for at most ``max_iters`` steps.

    ``A`` is an array or a :class:`QueryOracle`; each step costs one
    matrix-vector product.  Step t records the residual
    ``||A v_{t-1} - rho v_{t-1}||`` with ``rho = v_{t-1}* A v_{t-1}``; the run
    stops once that residual is at most ``tol``, or once ``stop(t, v_t)`` is
    true.  With neither given the iteration count is fixed.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    v = np.asarray(v0)
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise InvalidQuery("start vector must have unit norm")
    v = v.astype(np.result_type(v.dtype, np.float64))
    matvec = _matvec(A)
    residuals: list[float] = []
    rho = 0j
    early = False
    t = 0
    for t in range(1, int(max_iters) + 1):
        w = matvec(v)
        rho = complex(np.vdot(v, w))
        residuals.append(float(np.linalg.norm(w - rho * v)))
        nw = np.linalg.norm(w)
        if nw == 0.0 or not np.isfinite(nw):
            raise DegenerateIterate(f"image of the iterate vanished at step {t}")
        v = w / nw
        if tol is not None and residuals[-1] <= tol:
            early = True
            break
        if stop is not None and stop(t, v):
            early = True
            break
    return PowerMethodResult(iterate=v, iterations=t, residual_history=residuals, queries_used=t,
                             eigenvalue_estimate=rho, stopped_early=early)


def power_method_iteration_bound(kappa: float, d: int, epsilon: float, gap: float) -> float:
    """(ln(kappa d) + ln(2/epsilon + 1)) / ln(1/(1-gap))."""
    if kappa < 1:
        raise ValueError(f"kappa must be at least 1, got {kappa}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < gap < 1:
        raise ValueError(f"gap must lie in (0, 1), got {gap}")
    return (math.log(kappa * d) + math.log(2.0 / epsilon + 1.0)) / -math.log1p(-gap)


def example1(d: int, gap: float) -> np.ndarray:
    """diag(1, 1-gap, ..., 1-gap)."""
    if not 0 < gap < 1:
        raise ValueError(f"gap must lie in (0, 1), got {gap}")
    if d < 2:
        raise ValueError("d must be at least 2")
    diag = np.full(d, 1.0 - gap)
    diag[0] = 1.0
    return np.diag(diag)


def _check_theta(theta: float) -> None:
    if not 0 <= theta <= math.pi / 2 + 1e-15:
        raise ValueError(f"theta must lie in [0, pi/2), got {theta}")
    if math.cos(theta) <= 1e-12:
        raise SingularEigenbasis("eigenvectors coincide at theta = pi/2")


def example2_sigma(theta: float) -> np.ndarray:
    _check_theta(theta)
    return np.array([[1.0, 0.0], [math.sin(theta), math.cos(theta)]])


def example2(theta: float, gap: float) -> np.ndarray:
    """Sigma diag(1, gap-1) Sigma^{-1}: eigenvalues 1 and gap-1 with eigenvectors
    along the (non-orthogonal) columns of Sigma."""
    if not 0 < gap < 1:
        raise ValueError(f"gap must lie in (0, 1), got {gap}")
    sigma = example2_sigma(theta)
    s, c = math.sin(theta), math.cos(theta)
    sigma_inv = np.array([[1.0, 0.0], [-s / c, 1.0 / c]])
    return sigma @ np.diag([1.0, gap - 1.0]) @ sigma_inv


def example2_condition_number(theta: float) -> float:
    """(1 + sin theta)/(1 - sin theta), the conditioning constant of the example.

    This equals the square of the spectral condition number of Sigma.
    """
    _check_theta(theta)
    s = math.sin(theta)
    return (1.0 + s) / (1.0 - s)


def example_matrix(which: str, **kwargs) -> np.ndarray:
    if which == "example1":
        return example1(kwargs["d"], kwargs["gap"])
    if which == "example2":
        return example2(kwargs["theta"], kwargs["gap"])
    raise ValueError(f"unknown example {which!r}")


def random_query_baseline(oracle: QueryOracle, T: int, seed: SeedLike = None) -> np.ndarray:
    """Query T Haar-random orthonormal real directions and return the unit
    vector in their span with the largest observed Rayleigh quotient.

    The quotient x* Q* M Q x is maximized through the Hermitian part of the
    T×T compression Q* M Q, assembled from the responses.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if T > oracle.remaining:
        raise QueryBudgetExceeded(f"baseline needs {T} queries, {oracle.remaining} remain")
    Q = sample_stiefel(oracle.d, T, Field.REAL, as_seed(seed)).columns
    matvec = _matvec(oracle)
    W = np.column_stack([matvec(Q[:, j]) for j in range(T)])
    H = Q.T @ W
    herm = 0.5 * (H + H.conj().T)
    _, vecs = np.linalg.eigh(herm)
    x = vecs[:, -1]
    vhat = Q @ x
    return vhat / np.linalg.norm(vhat)
