"""Closed-form concentration bounds and Monte-Carlo testers for them.

Tail testers return a :class:`TailTestReport` with a 95% Wilson score
interval; a bound counts as respected when the empirical frequency does not
exceed the bound by more than the interval width.  Moment testers return a
:class:`MomentReport` with a normal-approximation interval and the same
slack rule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .ensembles import EntryLaw, Field, SeedLike, _draw_entries, _haar_frame, as_seed, sample_sphere
from .errors import BoundDegenerate, BoundInapplicable, UndefinedMoment

__all__ = [
    "HW_VARIANTS",
    "TailTestReport",
    "MomentReport",
    "wilson_interval",
    "hw_bound",
    "hw_empirical",
    "entropy_tail_bound",
    "entropy_tail_empirical",
    "information_increment",
    "pseudo_inverse",
    "gaussian_ratio_moment",
    "gaussian_ratio_empirical",
    "resolvent_bounds",
    "resolvent_norm_check",
    "moment_cross_table",
    "moment_cross_check",
    "moment_uWu_bound",
    "moment_uWu_table",
    "moment_uWu_check",
]

log = logging.getLogger(__name__)

Z95 = 1.959963984540054

# variant -> (deviation constant, denominator uses sqrt(2t/d) instead of 2 sqrt(t/d),
#             frame field, failure-probability (prefactor, r coefficient, constant))
HW_VARIANTS = {
    "real-stiefel": (8.0, False, Field.REAL, (3.0, 2.2, 0.0)),
    "complex-matrix": (16.0, False, Field.REAL, (6.0, 2.2, 0.0)),
    "complex-stiefel-r1": (16.0, True, Field.COMPLEX, (6.0, 0.0, 2.2)),
    "complex-stiefel-general": (32.0, True, Field.COMPLEX, (6.0, 4.4, 2.2)),
    "general-case-real": (16.0, False, Field.REAL, (6.0, 2.2, 0.0)),
    "general-case-complex": (32.0, False, Field.COMPLEX, (6.0, 4.4, 2.2)),
}


def wilson_interval(successes: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    if trials <= 0:
        return (0.0, 1.0)
    from statsmodels.stats.proportion import proportion_confint

    lo, hi = proportion_confint(successes, trials, alpha=alpha, method="wilson")
    p = successes / trials
    return (float(min(max(lo, 0.0), p)), float(max(min(hi, 1.0), p)))


@dataclass
class TailTestReport:
    bound_value: float
    empirical_frequency: float
    trials: int
    wilson_interval: tuple
    variant: str = ""
    params: dict = field(default_factory=dict)

    @property
    def interval_width(self) -> float:
        return self.wilson_interval[1] - self.wilson_interval[0]

    @property
    def within_bound(self) -> bool:
        return self.empirical_frequency <= self.bound_value + self.interval_width

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "params": dict(self.params),
            "bound": self.bound_value,
            "frequency": self.empirical_frequency,
            "trials": self.trials,
            "interval": list(self.wilson_interval),
        }


def _tail_report(exceed: int, trials: int, bound: float, variant: str, params: dict) -> TailTestReport:
    freq = exceed / trials if trials else 0.0
    return TailTestReport(bound_value=float(bound), empirical_frequency=float(freq), trials=int(trials),
                          wilson_interval=wilson_interval(exceed, trials), variant=variant, params=params)


@dataclass
class MomentReport:
    mean: complex
    stderr: float
    trials: int
    bound: float | None = None
    target: float | None = None
    label: str = ""
    params: dict = field(default_factory=dict)

    @property
    def interval(self) -> tuple[float, float]:
        m = float(np.real(self.mean))
        return (m - Z95 * self.stderr, m + Z95 * self.stderr)

    @property
    def interval_width(self) -> float:
        return 2.0 * Z95 * self.stderr

    @property
    def within_bound(self) -> bool:
        return float(np.real(self.mean)) <= self.bound + self.interval_width

    def to_dict(self) -> dict:
        mean = complex(self.mean)
        return {
            "variant": self.label,
            "params": dict(self.params),
            "bound": self.bound,
            "target": self.target,
            "mean_re": mean.real,
            "mean_im": mean.imag,
            "stderr": self.stderr,
            "trials": self.trials,
            "interval": list(self.interval),
        }


def _mc_summary(samples: np.ndarray) -> tuple[complex, float]:
    n = samples.size
    if n == 0:
        return complex("nan"), float("nan")
    mean = samples.mean()
    if n == 1:
        return complex(mean), float("nan")
    sd = np.sqrt(np.sum(np.abs(samples - mean) ** 2) / (n - 1))
    return complex(mean), float(sd / np.sqrt(n))


def hw_bound(A_norms: tuple[float, float], d: int, r: int, t: float, variant: str) -> tuple[float, float]:
    """Deviation threshold and failure probability of a Hanson-Wright variant."""
    if variant not in HW_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(HW_VARIANTS)}")
    if not t < d / 4:
        raise BoundDegenerate(f"need t < d/4, got t={t}, d={d}")
    if t <= 0:
        raise ValueError("t must be positive")
    const, sqrt_2t, _, (pref, r_coef, c0) = HW_VARIANTS[variant]
    op, frob = A_norms
    denom = 1.0 - (math.sqrt(2.0 * t / d) if sqrt_2t else 2.0 * math.sqrt(t / d))
    deviation = const * (t * op + math.sqrt(t) * frob) / (d * denom)
    prob = pref * math.exp(r_coef * r + c0 - t)
    return deviation, prob


def hw_empirical(A: np.ndarray, r: int, variant: str, t: float, trials: int, seed: SeedLike = None) -> TailTestReport:
    """Frequency with which ||U* A U - tr(A)/d I|| exceeds the variant's threshold."""
    A = np.asarray(A)
    d = A.shape[0]
    if variant == "complex-stiefel-r1":
        r = 1
    norms = (float(np.linalg.norm(A, 2)), float(np.linalg.norm(A, "fro")))
    threshold, prob = hw_bound(norms, d, r, t, variant)
    fld = HW_VARIANTS[variant][2]
    center = np.trace(A) / d
    s = as_seed(seed)
    exceed = 0
    for i in range(int(trials)):
        U = _haar_frame(s.generator(i), d, r, fld)
        dev = U.conj().T @ A @ U - center * np.eye(r)
        if np.linalg.norm(dev, 2) > threshold:
            exceed += 1
    params = {"d": d, "r": r, "t": t, "deviation_bound": threshold, "op_norm": norms[0], "frob_norm": norms[1]}
    return _tail_report(exceed, int(trials), prob, variant, params)


def entropy_tail_bound(k: int, tau: float) -> float:
    """exp(-(sqrt(tau) - sqrt(2k))^2 / 2), valid for tau >= 2k."""
    if tau < 2 * k:
        raise BoundInapplicable(f"need tau >= 2k, got tau={tau}, k={k}")
    return math.exp(-0.5 * (math.sqrt(tau) - math.sqrt(2.0 * k)) ** 2)


def entropy_tail_empirical(d: int, V: np.ndarray, tau: float, trials: int, seed: SeedLike = None,
                           batch: int = 10000) -> TailTestReport:
    """Frequency of ||V* u||^2 >= tau/d for u uniform on the real unit sphere."""
    V = np.asarray(V)
    m = V.shape[1]
    if m % 2:
        raise ValueError("V must have an even number (2k) of columns")
    k = m // 2
    bound = entropy_tail_bound(k, tau)
    rng = as_seed(seed).generator()
    exceed = 0
    done = 0
    while done < trials:
        n = min(batch, int(trials) - done)
        u = sample_sphere(d, Field.REAL, rng, size=n)
        proj = np.sum(np.abs(u @ V.conj()) ** 2, axis=1)
        exceed += int(np.count_nonzero(proj >= tau / d))
        done += n
    return _tail_report(exceed, int(trials), bound, "entropy-tail", {"d": d, "k": k, "tau": tau})


def information_increment(eta: float, lam: float, d: int, overlap_sq: float) -> float:
    """exp(eta(1+eta)/2 * lam^2 * d * overlap_sq)."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    if not lam > 1:
        raise ValueError("lambda must exceed 1")
    return math.exp(eta * (1.0 + eta) / 2.0 * lam * lam * d * overlap_sq)


def pseudo_inverse(Sigma: np.ndarray, cutoff: float = 1e-12):
    """Moore-Penrose inverse of a PSD matrix and the projector onto its range."""
    vals, vecs = np.linalg.eigh(np.asarray(Sigma, dtype=float))
    keep = vals > cutoff * max(vals.max(initial=0.0), 0.0)
    Vk = vecs[:, keep]
    return (Vk / vals[keep]) @ Vk.T, Vk @ Vk.T


def _mahalanobis(mu_diff: np.ndarray, Sigma: np.ndarray) -> float:
    mu = np.asarray(mu_diff, dtype=float)
    pinv, proj = pseudo_inverse(Sigma)
    resid = np.linalg.norm(mu - proj @ mu)
    if resid > 1e-8 * max(1.0, np.linalg.norm(mu)):
        raise UndefinedMoment(f"mean difference leaves the range of Sigma (residual {resid:.3e})")
    return float(mu @ pinv @ mu)


def gaussian_ratio_moment(mu_diff: np.ndarray, Sigma: np.ndarray, eta: float) -> float:
    """E_Q[(dP/dQ)^{1+eta}] for P = N(mu1, Sigma), Q = N(mu2, Sigma), mu_diff = mu1 - mu2."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    return math.exp(eta * (1.0 + eta) / 2.0 * _mahalanobis(mu_diff, Sigma))


def gaussian_ratio_empirical(mu_diff: np.ndarray, Sigma: np.ndarray, eta: float, trials: int,
                             seed: SeedLike = None, batch: int = 200000) -> MomentReport:
    """Monte-Carlo average of (dP/dQ)^{1+eta} under Q."""
    mu = np.asarray(mu_diff, dtype=float)
    m2 = _mahalanobis(mu, Sigma)
    pinv, _ = pseudo_inverse(Sigma)
    vals, vecs = np.linalg.eigh(np.asarray(Sigma, dtype=float))
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    a = pinv @ mu
    rng = as_seed(seed).generator()
    chunks = []
    done = 0
    while done < trials:
        n = min(batch, int(trials) - done)
        x = rng.standard_normal((n, mu.size)) @ root.T
        log_ratio = x @ a - 0.5 * m2
        chunks.append(np.exp((1.0 + eta) * log_ratio))
        done += n
    samples = np.concatenate(chunks) if chunks else np.zeros(0)
    mean, se = _mc_summary(samples)
    target = gaussian_ratio_moment(mu, Sigma, eta)
    return MomentReport(mean=mean.real, stderr=se, trials=int(trials), target=target,
                        label="gaussian-ratio", params={"eta": eta, "mahalanobis": m2})


def resolvent_bounds(lam: float) -> tuple[float, float]:
    """(2/gap^2, 1/gap^2) with gap = (lam-1)/lam."""
    if not lam > 1:
        raise ValueError("lambda must exceed 1")
    gap = (lam - 1.0) / lam
    return 2.0 / gap**2, 1.0 / gap**2


def _inverse_norm(B: np.ndarray, max_iter: int = 500, rtol: float = 1e-12) -> float:
    """||B^{-1}||_2 by power iteration on B^{-*} B^{-1} with one LU factorization."""
    lu = sla.lu_factor(B, check_finite=False)
    if np.min(np.abs(np.diagonal(lu[0]))) <= np.finfo(float).eps * np.abs(B).max() * B.shape[0]:
        raise np.linalg.LinAlgError("numerically singular matrix")
    n = B.shape[0]
    x = np.cos(np.arange(1, n + 1, dtype=float)) + 1.2
    x = x / np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = sla.lu_solve(lu, x, check_finite=False)
        x_new = sla.lu_solve(lu, y, trans=2 if np.iscomplexobj(B) else 1, check_finite=False)
        nx = np.linalg.norm(x_new)
        if not np.isfinite(nx):
            raise np.linalg.LinAlgError("non-finite solve")
        new_est = math.sqrt(nx)
        x = x_new / nx
        if abs(new_est - est) <= rtol * new_est:
            est = new_est
            break
        est = new_est
    return est


def resolvent_norm_check(lam: float, d: int, seed: SeedLike = None, W: np.ndarray | None = None,
                         law: EntryLaw | str = EntryLaw.REAL_GAUSSIAN, max_resample: int = 5):
    """(||lam (lam I - W/sqrt(d))^{-1}||_2, 2/gap^2).

    A numerically singular draw is replaced by the next sub-stream with a
    logged warning.  ``W`` may be passed to bypass sampling.
    """
    bound, _ = resolvent_bounds(lam)
    s = as_seed(seed)
    for attempt in range(max_resample + 1):
        Wd = np.asarray(W) if W is not None else _draw_entries(s.generator(attempt), (d, d), EntryLaw(law))
        B = -Wd / math.sqrt(d) / lam
        B[np.diag_indices(d)] += 1.0
        try:
            return _inverse_norm(B), bound
        except np.linalg.LinAlgError:
            if W is not None:
                raise
            log.warning("resolvent draw %d was numerically singular; resampling", attempt)
    raise np.linalg.LinAlgError("every resampled resolvent was singular")


def moment_cross_table(d: int, k_max: int, law: EntryLaw | str = EntryLaw.REAL_GAUSSIAN, trials: int = 50,
                       seed: SeedLike = None):
    """Means and standard errors of (G^{k1} u)* (G^{k2} u) for 0 <= k1, k2 <= k_max,
    G = W/sqrt(d) and u uniform on the complex sphere, from shared draws."""
    if k_max > 4:
        raise ValueError("powers above 4 are not supported")
    s = as_seed(seed)
    vals = np.zeros((int(trials), k_max + 1, k_max + 1), dtype=complex)
    for i in range(int(trials)):
        rng = s.generator(i)
        G = _draw_entries(rng, (d, d), EntryLaw(law)) / math.sqrt(d)
        u = sample_sphere(d, Field.COMPLEX, rng)
        powers = [u]
        for _ in range(k_max):
            powers.append(G @ powers[-1])
        P = np.column_stack(powers)
        vals[i] = P.conj().T @ P
    means = np.zeros((k_max + 1, k_max + 1), dtype=complex)
    ses = np.zeros((k_max + 1, k_max + 1))
    for a in range(k_max + 1):
        for b in range(k_max + 1):
            means[a, b], ses[a, b] = _mc_summary(vals[:, a, b])
    return means, ses


def moment_cross_check(d: int, k1: int, k2: int, law: EntryLaw | str = EntryLaw.REAL_GAUSSIAN,
                       trials: int = 50, seed: SeedLike = None) -> MomentReport:
    if max(k1, k2) > 4 or min(k1, k2) < 0:
        raise ValueError("powers must lie in [0, 4]")
    means, ses = moment_cross_table(d, max(k1, k2), law, trials, seed)
    return MomentReport(mean=means[k1, k2], stderr=float(ses[k1, k2]), trials=int(trials),
                        target=1.0 if k1 == k2 else 0.0, label="cross-moment",
                        params={"d": d, "k1": k1, "k2": k2, "law": EntryLaw(law).value})


def moment_uWu_bound(d: int, k: int) -> float:
    """(2k)!! k^{2k-1} / d."""
    double_fact = 2**k * math.factorial(k)
    return double_fact * float(k) ** (2 * k - 1) / d


def moment_uWu_table(d: int, k_max: int, trials: int = 200, seed: SeedLike = None,
                     law: EntryLaw | str = EntryLaw.COMPLEX_GAUSSIAN) -> list[MomentReport]:
    """Empirical E|u* (W/sqrt(d))^k u|^2 for k = 1..k_max from shared draws,
    u uniform on the complex sphere."""
    if not 1 <= k_max <= 4:
        raise ValueError("k_max must lie in [1, 4]")
    s = as_seed(seed)
    samples = np.zeros((int(trials), k_max))
    for i in range(int(trials)):
        rng = s.generator(i)
        G = _draw_entries(rng, (d, d), EntryLaw(law)) / math.sqrt(d)
        u = sample_sphere(d, Field.COMPLEX, rng)
        x = u
        for k in range(k_max):
            x = G @ x
            samples[i, k] = abs(np.vdot(u, x)) ** 2
    out = []
    for k in range(1, k_max + 1):
        mean, se = _mc_summary(samples[:, k - 1])
        out.append(MomentReport(mean=mean.real, stderr=se, trials=int(trials), bound=moment_uWu_bound(d, k),
                                label="uWu-moment", params={"d": d, "k": k, "law": EntryLaw(law).value}))
    return out


def moment_uWu_check(d: int, k: int, trials: int = 200, seed: SeedLike = None,
                     law: EntryLaw | str = EntryLaw.COMPLEX_GAUSSIAN) -> MomentReport:
    """Empirical E|u* (W/sqrt(d))^k u|^2 next to the bound (2k)!! k^{2k-1}/d."""
    if not 1 <= k <= 4:
        raise ValueError("k must lie in [1, 4]")
    return moment_uWu_table(d, k, trials, seed, law)[k - 1]
