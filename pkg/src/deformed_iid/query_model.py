"""Matrix-vector query oracles, the query ledger and the overlap potential.

An algorithm sees the hidden matrix only through :meth:`QueryOracle.query`.
Every query and response is recorded in a :class:`QueryLedger`, which also
maintains a real orthonormal basis spanning the real and imaginary parts of
all queries made so far.  The squared norm of the projection of the planted
direction onto that basis is the overlap potential tracked by the lower-bound
experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import spike_from_gap, theorem_query_budget
from .ensembles import PlantedInstance, Shape
from .errors import InvalidDelta, InvalidQuery, NonOrthogonalQuery, QueryBudgetExceeded

__all__ = [
    "ThresholdSchedule",
    "QueryLedger",
    "QueryOracle",
    "query",
    "projected_two_side_responses",
    "overlap_potential",
    "tau_k",
    "overlap_bound",
    "append_output_query",
    "ledger_dump",
    "reveal_source",
]

RANK_TOL = 1e-10
UNIT_TOL = 1e-8
ORTHO_TOL = 1e-8


def _check_unit(v: np.ndarray, d: int) -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (d,):
        raise InvalidQuery(f"query must be a vector of length {d}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidQuery("query has non-finite entries")
    n = np.linalg.norm(v)
    if abs(n - 1.0) > UNIT_TOL:
        raise InvalidQuery(f"query must have unit norm, got {n!r}")
    return v


@dataclass(frozen=True)
class ThresholdSchedule:
    lam: float
    delta: float
    d: int
    gap: float

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError(f"lambda must exceed 1, got {self.lam}")
        # The closed endpoint 1/e is admitted: the schedule only needs
        # ln(1/delta) >= 1.
        if not 0 < self.delta <= math.exp(-1.0) * (1 + 1e-15):
            raise InvalidDelta(f"delta must lie in (0, 1/e], got {self.delta}")
        if self.d < 1:
            raise ValueError(f"d must be positive, got {self.d}")
        if not 0 < self.gap < 1:
            raise ValueError(f"gap must lie in (0, 1), got {self.gap}")

    @classmethod
    def from_gap(cls, gap: float, delta: float, d: int) -> "ThresholdSchedule":
        return cls(lam=spike_from_gap(gap), delta=delta, d=d, gap=gap)

    @classmethod
    def from_lambda(cls, lam: float, delta: float, d: int) -> "ThresholdSchedule":
        return cls(lam=lam, delta=delta, d=d, gap=1.0 - 1.0 / lam)

    @property
    def tau0(self) -> float:
        lam = self.lam
        return 64.0 / (lam**2 * (lam - 1.0) ** 2) * (math.log(1.0 / self.delta) + 1.0 / math.log(lam))


def tau_k(sched: ThresholdSchedule, k: int) -> float:
    """lam^{4k} times the base threshold."""
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    return sched.lam ** (4 * k) * sched.tau0


def overlap_bound(sched: ThresholdSchedule, k: int) -> float:
    """High-probability cap on the overlap potential after k queries."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    return (64.0 * sched.lam ** (4 * k - 4) * (math.log(1.0 / sched.delta) + 1.0 / sched.gap)
            / (sched.d * sched.gap**2))


def overlap_potential(basis: np.ndarray, u: np.ndarray) -> float:
    """Squared norm of the projection of u onto the span of an orthonormal basis."""
    basis = np.asarray(basis)
    if basis.shape[1] == 0:
        return 0.0
    c = basis.conj().T @ np.asarray(u)
    return float(np.real(np.vdot(c, c)))


class QueryLedger:
    """History of query/response pairs and an orthonormal basis of the query span.

    The basis is real: each complex query contributes its real and imaginary
    parts, orthogonalized by modified Gram-Schmidt with one full
    re-orthogonalization pass.  Parts already in the span (residual norm below
    ``RANK_TOL``) add no column.  ``coefficients`` records how every raw part
    is expressed in the basis, so ``basis @ coefficients`` reproduces the raw
    parts.
    """

    def __init__(self, d: int, mode: str = "one-side"):
        if mode not in ("one-side", "two-side"):
            raise ValueError(f"unknown query mode {mode!r}")
        self.d = int(d)
        self.mode = mode
        self.queries: list[np.ndarray] = []
        self.responses: list[np.ndarray] = []
        self.adjoint_responses: list[np.ndarray] = []
        self.outputs: list[np.ndarray] = []
        self.widths: list[int] = []
        self._basis = np.zeros((self.d, 0))
        self._coef = np.zeros((0, 0))

    @property
    def k(self) -> int:
        return len(self.queries)

    @property
    def basis(self) -> np.ndarray:
        view = self._basis.view()
        view.flags.writeable = False
        return view

    @property
    def coefficients(self) -> np.ndarray:
        view = self._coef.view()
        view.flags.writeable = False
        return view

    def basis_at(self, k: int) -> np.ndarray:
        """Basis after the first k queries (k = 0 gives an empty basis)."""
        if not 0 <= k <= self.k:
            raise ValueError(f"k must lie in [0, {self.k}], got {k}")
        width = self.widths[k - 1] if k > 0 else 0
        return self.basis[:, :width]

    def potential(self, u: np.ndarray, k: int | None = None) -> float:
        basis = self.basis if k is None else self.basis_at(k)
        return overlap_potential(basis, u)

    def _orthogonalize(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q = self._basis
        coeffs = np.zeros(q.shape[1])
        x = x.astype(float, copy=True)
        for _ in range(2):
            for j in range(q.shape[1]):
                c = q[:, j] @ x
                x -= c * q[:, j]
                coeffs[j] += c
        return x, coeffs

    def _absorb(self, vec: np.ndarray) -> np.ndarray:
        """Add Re/Im parts of vec to the basis; return their coefficient columns."""
        parts = (np.real(vec), np.imag(vec))
        cols = []
        for part in parts:
            resid, coeffs = self._orthogonalize(part)
            nrm = np.linalg.norm(resid)
            if nrm > RANK_TOL:
                self._basis = np.column_stack([self._basis, resid / nrm])
                self._coef = np.vstack([self._coef, np.zeros((1, self._coef.shape[1]))])
                coeffs = np.append(coeffs, nrm)
            cols.append(coeffs)
        width = self._basis.shape[1]
        return np.column_stack([np.pad(c, (0, width - c.size)) for c in cols])

    def record(self, v: np.ndarray, w: np.ndarray, z: np.ndarray | None = None) -> None:
        if (z is None) != (self.mode == "one-side"):
            raise ValueError("adjoint response must be given exactly in two-side mode")
        v = np.array(v, copy=True)
        cols = self._absorb(v)
        self._coef = np.column_stack([self._coef, cols])
        self.queries.append(v)
        self.responses.append(np.array(w, copy=True))
        if z is not None:
            self.adjoint_responses.append(np.array(z, copy=True))
        self.widths.append(self._basis.shape[1])

    def raw_directions(self) -> np.ndarray:
        """Real d×2k matrix [Re v1, Im v1, Re v2, ...]."""
        if not self.queries:
            return np.zeros((self.d, 0))
        return np.column_stack([p for v in self.queries for p in (np.real(v), np.imag(v))])

    def raw_responses(self) -> np.ndarray:
        if not self.responses:
            return np.zeros((self.d, 0))
        return np.column_stack([p for w in self.responses for p in (np.real(w), np.imag(w))])

    def basis_responses(self) -> np.ndarray:
        """Images of the basis columns, recovered from the recorded responses.

        Valid for real matrices, where the image of Re(v) is Re(Mv) and the
        image of Im(v) is Im(Mv).
        """
        width = self._basis.shape[1]
        if width == 0:
            return np.zeros((self.d, 0))
        C = self._coef[:width, :]
        sol, *_ = np.linalg.lstsq(C.T, self.raw_responses().T, rcond=None)
        return sol.T

    def copy(self) -> "QueryLedger":
        other = QueryLedger(self.d, self.mode)
        other.queries = [q.copy() for q in self.queries]
        other.responses = [w.copy() for w in self.responses]
        other.adjoint_responses = [z.copy() for z in self.adjoint_responses]
        other.outputs = [o.copy() for o in self.outputs]
        other.widths = list(self.widths)
        other._basis = self._basis.copy()
        other._coef = self._coef.copy()
        return other


def append_output_query(ledger: QueryLedger, vhat: np.ndarray) -> QueryLedger:
    """Copy of the ledger whose basis also spans Re(vhat) and Im(vhat).

    This models the extra query an algorithm can make on its output, so that
    the potential of the extended basis dominates |vhat* u|^2.
    """
    vhat = _check_unit(vhat, ledger.d)
    out = ledger.copy()
    out._absorb(vhat)
    out.outputs.append(np.array(vhat, copy=True))
    return out


class QueryOracle:
    """Answers matrix-vector queries against a hidden matrix.

    ``source`` is a :class:`PlantedInstance` or a plain square array.  In
    two-side mode each query returns ``(M v, M* v)``.  The default budget for
    a rank-one planted source is the theorem budget; otherwise unlimited.
    """

    def __init__(self, source, mode: str = "one-side", budget: int | None = None):
        if mode not in ("one-side", "two-side"):
            raise ValueError(f"unknown query mode {mode!r}")
        if isinstance(source, PlantedInstance):
            matrix = source.matrix
        else:
            matrix = np.asarray(source)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise ValueError("oracle matrix must be square")
        self.__source = source
        self.__matrix = matrix
        self.__mode = mode
        self.__budget = self._default_budget(source, mode) if budget is None else int(budget)
        self.__count = 0
        self.__ledger = QueryLedger(matrix.shape[0], mode)

    @staticmethod
    def _default_budget(source, mode: str) -> float:
        if isinstance(source, PlantedInstance) and source.spec.shape is not Shape.HERMITIAN_SPIKE:
            lam = float(source.spec.lambdas[0])
            d = source.spec.d
            if mode == "two-side":
                return theorem_query_budget(d, two_side=True, lam=lam)
            return theorem_query_budget(d, 1.0 - 1.0 / lam)
        return math.inf

    @property
    def d(self) -> int:
        return self.__matrix.shape[0]

    @property
    def mode(self) -> str:
        return self.__mode

    @property
    def budget(self):
        return self.__budget

    @property
    def count(self) -> int:
        return self.__count

    @property
    def remaining(self):
        return self.__budget - self.__count

    @property
    def ledger(self) -> QueryLedger:
        """A snapshot of the query history."""
        return self.__ledger.copy()

    def query(self, v: np.ndarray):
        v = _check_unit(v, self.d)
        if self.__count >= self.__budget:
            raise QueryBudgetExceeded(f"query budget of {self.__budget} exhausted")
        M = self.__matrix
        w = M @ v
        self.__count += 1
        if self.__mode == "two-side":
            z = M.conj().T @ v
            self.__ledger.record(v, w, z)
            return w.copy(), z.copy()
        self.__ledger.record(v, w)
        return w.copy()

    def _privileged_source(self):
        return self.__source

    def _privileged_ledger(self) -> QueryLedger:
        return self.__ledger


def reveal_source(oracle: QueryOracle):
    """Evaluation hook for the harness: the hidden instance behind an oracle."""
    return oracle._privileged_source()


def query(oracle: QueryOracle, v: np.ndarray):
    return oracle.query(v)


def projected_two_side_responses(ledger: QueryLedger, v: np.ndarray, M: np.ndarray):
    """(P M v, P M* v) with P the projector onto the complement of the ledger span."""
    v = _check_unit(v, ledger.d)
    V = ledger.basis
    if V.shape[1]:
        leak = np.linalg.norm(V.T @ v)
        if leak > ORTHO_TOL:
            raise NonOrthogonalQuery(f"query has component {leak:.3e} in the span of earlier queries")
    M = np.asarray(M)
    w = M @ v
    z = M.conj().T @ v
    if V.shape[1]:
        w = w - V @ (V.T @ w)
        z = z - V @ (V.T @ z)
    return w, z


def ledger_dump(ledger: QueryLedger, u: np.ndarray | None = None,
                sched: ThresholdSchedule | None = None) -> list[dict]:
    """Per-query records for JSON serialization."""
    out = []
    for i, (v, w) in enumerate(zip(ledger.queries, ledger.responses), start=1):
        rec = {
            "k": i,
            "query_re": np.real(v).tolist(),
            "query_im": np.imag(v).tolist(),
            "response_re": np.real(w).tolist(),
            "response_im": np.imag(w).tolist(),
            "phi": None if u is None else ledger.potential(u, i),
            "tau_k": None if sched is None else tau_k(sched, i),
            "bound_k": None if sched is None else overlap_bound(sched, i),
        }
        out.append(rec)
    return out
