"""Dense nonsymmetric spectra and the statistics derived from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy import stats

from .ensembles import PlantedInstance
from .errors import EigensolverFailure, InvalidRegion, RootFindingFailure, UndefinedGap

__all__ = [
    "Spectrum",
    "ESDStats",
    "AlignmentReport",
    "eigen",
    "sort_eigenvalues",
    "norm2_estimate",
    "eigenvector_for",
    "spectral_gap",
    "detect_outliers",
    "circular_law_stats",
    "outlier_roots_via_resolvent",
    "alignment",
    "phase_aligned_distance",
]

# Relative shift applied to the eigenvalue estimate before inverse iteration so
# that the shifted matrix is not exactly singular.
_SHIFT_REGULARIZATION = 1e-10


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    top_right_eigenvector: np.ndarray
    residual: float
    norm_estimate: float

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)


@dataclass(frozen=True)
class ESDStats:
    radial_ks: float
    angular_ks: float
    bulk_count: int
    outlier_count: int
    clipped_count: int


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    overlaps: np.ndarray
    weighted_sums: np.ndarray
    phase_aligned_distance: float
    raw_distance: float


def sort_eigenvalues(values) -> np.ndarray:
    """Descending modulus, ties by descending real part then imaginary part."""
    z = np.asarray(values, dtype=complex)
    order = np.lexsort((-z.imag, -z.real, -np.abs(z)))
    return z[order]


def norm2_estimate(M: np.ndarray, iters: int = 30) -> float:
    """Lower estimate of the spectral norm by power iteration on M*M.

    The start vector is fixed so the estimate is deterministic.
    """
    n = M.shape[1]
    x = np.cos(np.arange(1, n + 1, dtype=float)) + 1.5
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = M.conj().T @ (M @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return float(np.linalg.norm(M @ x))
        x = y / ny
        est = np.sqrt(ny)
    return float(est)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    ph = v[k] / abs(v[k])
    return v / ph


def eigenvector_for(M: np.ndarray, lam: complex, tol: float = 1e-10, max_steps: int = 8):
    """Unit right eigenvector for an eigenvalue estimate by inverse iteration.

    Returns ``(vector, residual)`` with ``residual = ||M v - lam v||``.
    """
    d = M.shape[0]
    lam = complex(lam)
    scale = max(abs(lam), 1.0)
    sigma = lam * (1.0 + _SHIFT_REGULARIZATION) if lam != 0 else complex(_SHIFT_REGULARIZATION)
    if not np.iscomplexobj(M) and sigma.imag == 0:
        B = M.astype(np.float64, copy=True)
        B[np.diag_indices(d)] -= sigma.real
    else:
        B = M.astype(np.complex128, copy=True)
        B[np.diag_indices(d)] -= sigma
    dtype = B.dtype
    lu = sla.lu_factor(B, check_finite=False)
    x = np.cos(0.7 * np.arange(1, d + 1, dtype=float)) + 0.1
    x = (x / np.linalg.norm(x)).astype(dtype)
    target = tol * max(scale, 1.0)
    residual = np.inf
    for _ in range(max_steps):
        y = sla.lu_solve(lu, x, check_finite=False)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            break
        x = _fix_phase(y / ny)
        residual = float(np.linalg.norm(M @ x - lam * x))
        if residual <= target:
            break
    return x, residual


def eigen(M: np.ndarray, tol: float = 1e-10) -> Spectrum:
    """Eigenvalues of a dense square matrix, sorted, plus the top right eigenvector.

    Eigenvalues come from LAPACK's Hessenberg reduction followed by shifted QR
    iteration; the eigenvector for the largest-modulus eigenvalue comes from
    inverse iteration on a slightly regularized shift.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not 0 < tol <= 1e-4:
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    d = M.shape[0]
    nrm = norm2_estimate(M)
    try:
        values = sla.eigvals(M, check_finite=False, overwrite_a=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverFailure("eigenvalue iteration did not converge",
                                 {"d": d, "norm_estimate": nrm, "lapack": str(exc)}) from exc
    if not np.all(np.isfinite(values)):
        raise EigensolverFailure("eigenvalue iteration returned non-finite values",
                                 {"d": d, "norm_estimate": nrm})
    values = sort_eigenvalues(values)
    v1, res = eigenvector_for(M, values[0], tol=tol)
    if nrm > 0 and not res <= 1e-8 * nrm:
        raise EigensolverFailure("inverse iteration did not reach the residual contract",
                                 {"d": d, "norm_estimate": nrm, "residual": res, "lambda_1": complex(values[0])})
    return Spectrum(eigenvalues=values, top_right_eigenvector=v1, residual=res, norm_estimate=nrm)


def spectral_gap(s: Spectrum) -> float:
    mods = s.moduli
    if mods.size < 2:
        raise UndefinedGap("the gap needs at least two eigenvalues")
    if mods[0] == 0:
        raise UndefinedGap("the largest eigenvalue is zero")
    return float((mods[0] - mods[1]) / mods[0])


def detect_outliers(s: Spectrum | np.ndarray, epsilon: float):
    """Split eigenvalues into those outside the disk of radius 1+epsilon and the rest."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    z = s.eigenvalues if isinstance(s, Spectrum) else np.asarray(s, dtype=complex)
    outside = np.abs(z) > 1.0 + epsilon
    return z[outside], z[~outside]


def circular_law_stats(s: Spectrum | np.ndarray, r_exclude: int = 0) -> ESDStats:
    """KS distances of the bulk against the uniform law on the unit disk.

    Moduli are clipped to 1 before the radial test; the number clipped is
    reported so the bias can be judged.
    """
    z = s.eigenvalues if isinstance(s, Spectrum) else sort_eigenvalues(s)
    d = z.size
    if not 0 <= r_exclude < d:
        raise ValueError(f"r_exclude must lie in [0, d), got {r_exclude}")
    bulk = z[r_exclude:]
    radii = np.abs(bulk)
    clipped = int(np.count_nonzero(radii > 1.0))
    radii = np.clip(radii, 0.0, 1.0)
    angles = np.mod(np.angle(bulk), 2.0 * np.pi)
    radial = stats.kstest(radii, lambda r: np.square(r)).statistic
    angular = stats.kstest(angles, stats.uniform(loc=0.0, scale=2.0 * np.pi).cdf).statistic
    return ESDStats(radial_ks=float(radial), angular_ks=float(angular), bulk_count=int(bulk.size),
                    outlier_count=int(r_exclude), clipped_count=clipped)


def _resolvent_factors(instance: PlantedInstance):
    left, lam, right = instance.factors()
    return np.asarray(left), np.asarray(lam), np.asarray(right)


def outlier_roots_via_resolvent(instance: PlantedInstance, epsilon: float = 0.05,
                                max_iter: int = 60, rtol: float = 1e-13) -> np.ndarray:
    """Outlier eigenvalues as roots of the r×r resolvent determinant.

    With the perturbation written as ``L diag(lam) R*`` the outliers outside
    the bulk are the zeros of ``det(I - diag(lam) R* (zI - G)^{-1} L)`` where
    ``G`` is the noise part.  Newton's method is run from every spike seed
    using ``f'/f = tr(F^{-1} diag(lam) R* (zI-G)^{-2} L)``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    G = instance.noise
    d = G.shape[0]
    left, lam, right = _resolvent_factors(instance)
    r = lam.size
    if np.abs(lam).min() <= 1.0 + 3.0 * epsilon:
        raise InvalidRegion(f"every spike modulus must exceed 1+3*epsilon = {1 + 3 * epsilon}")
    radius = 1.0 + 2.0 * epsilon
    lam_rc = lam[:, np.newaxis] * right.conj().T
    eye_r = np.eye(r)
    # Every eigenvalue of the matrix is bounded by ||G||_F + ||L|| max|lam| ||R||.
    escape = 2.0 * (np.linalg.norm(G, "fro") + np.linalg.norm(left, 2) * np.abs(lam).max() * np.linalg.norm(right, 2))
    roots = []
    for seed in lam:
        z = complex(seed)
        if abs(z) <= radius:
            raise InvalidRegion(f"seed {z} lies inside the disk of radius {radius}")
        converged = False
        for _ in range(max_iter):
            zr = z.real if (z.imag == 0 and not np.iscomplexobj(G)) else z
            A = -G.astype(np.result_type(G.dtype, np.asarray(zr).dtype), copy=True)
            A[np.diag_indices(d)] += zr
            lu = sla.lu_factor(A, check_finite=False)
            X = sla.lu_solve(lu, left, check_finite=False)
            Y = sla.lu_solve(lu, X, check_finite=False)
            F = eye_r - lam_rc @ X
            dF = lam_rc @ Y
            try:
                logderiv = np.trace(np.linalg.solve(F, dF))
            except np.linalg.LinAlgError:
                # F singular means z is already a root to working precision.
                converged = True
                break
            if logderiv == 0 or not np.isfinite(logderiv):
                raise RootFindingFailure(f"Newton step undefined at z={z}")
            step = 1.0 / logderiv
            z = z - step
            if abs(z) > escape:
                raise RootFindingFailure(f"Newton iterate diverged from seed {seed}: z={z}")
            if abs(z) <= radius or not np.isfinite(z):
                raise RootFindingFailure(f"Newton iterate left the region |z| > {radius}: z={z}")
            if abs(step) <= rtol * max(abs(z), 1.0):
                converged = True
                break
        if not converged:
            raise RootFindingFailure(f"Newton did not converge from seed {seed} in {max_iter} steps")
        roots.append(z)
    return sort_eigenvalues(roots)


def phase_aligned_distance(vhat: np.ndarray, v: np.ndarray) -> float:
    """min over unit phases c of ||vhat - c v|| for unit vectors."""
    inner = np.vdot(v, vhat)
    c = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.linalg.norm(vhat - c * v))


def alignment(instance: PlantedInstance, s: Spectrum, n_vectors: int | None = None) -> AlignmentReport:
    """Overlaps between the planted frame and the top right eigenvectors.

    ``overlaps[i, j] = |u_i* v_j|^2``; the top eigenvector is taken from the
    spectrum, further ones by inverse iteration at the next eigenvalues.
    ``phase_aligned_distance`` compares the top planted direction with v_1 after
    optimal phase alignment; ``raw_distance`` is the unaligned value.
    """
    left, lam, right = _resolvent_factors(instance)
    r = lam.size if n_vectors is None else int(n_vectors)
    vecs = [s.top_right_eigenvector]
    for j in range(1, r):
        v, _ = eigenvector_for(instance.matrix, s.eigenvalues[j])
        vecs.append(v)
    V = np.column_stack(vecs)
    overlaps = np.abs(left.conj().T @ V) ** 2
    overlaps = np.clip(overlaps, 0.0, 1.0)
    weights = np.abs(lam) ** 2
    weighted = weights @ overlaps
    u1 = left[:, 0]
    v1 = s.top_right_eigenvector
    return AlignmentReport(overlaps=overlaps, weighted_sums=np.asarray(weighted, dtype=float),
                           phase_aligned_distance=phase_aligned_distance(v1, u1),
                           raw_distance=float(np.linalg.norm(v1 - u1)))
