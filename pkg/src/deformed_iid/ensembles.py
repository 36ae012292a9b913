"""Seeded samplers for i.i.d. matrices, Gaussian ensembles, Haar frames and
planted (deformed) instances.

Every sampler is a pure function of its arguments: the randomness comes from a
:class:`Seed`, which maps a ``(value, stream)`` pair onto an independent
Philox counter-based stream.  Trials use the trial index as ``stream`` so the
samples of trial ``i`` do not depend on which worker runs it or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Union

import numpy as np

from .errors import InvalidDimension, InvalidSpikeStrength

__all__ = [
    "Seed",
    "EntryLaw",
    "Field",
    "Shape",
    "StiefelFrame",
    "DeformedSpec",
    "PlantedInstance",
    "as_seed",
    "sample_iid",
    "sample_goe",
    "sample_ginoe",
    "sample_cginoe",
    "sample_stiefel",
    "sample_sphere",
    "build_planted",
]

_U64 = 2**64


@dataclass(frozen=True)
class Seed:
    """A reproducible random stream identified by ``(value, stream)``.

    ``generator(*path)`` derives further independent sub-streams, which lets a
    single trial draw its matrix, frame and start vector from separate streams.
    """

    value: int = 0
    stream: int = 0

    def __post_init__(self):
        for name in ("value", "stream"):
            x = getattr(self, name)
            if not isinstance(x, (int, np.integer)) or not 0 <= int(x) < _U64:
                raise ValueError(f"Seed.{name} must be an unsigned 64-bit integer, got {x!r}")

    def generator(self, *path: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.value), spawn_key=(int(self.stream), *map(int, path)))
        return np.random.Generator(np.random.Philox(ss))

    def with_stream(self, stream: int) -> "Seed":
        return Seed(self.value, stream)


SeedLike = Union[Seed, int, None]


def as_seed(seed: SeedLike) -> Seed:
    if isinstance(seed, Seed):
        return seed
    if seed is None:
        return Seed()
    return Seed(int(seed), 0)


def _rng(seed: SeedLike, *path: int) -> np.random.Generator:
    return as_seed(seed).generator(*path)


class EntryLaw(str, Enum):
    """Unit-variance, mean-zero entry distributions."""

    REAL_GAUSSIAN = "real-gaussian"
    COMPLEX_GAUSSIAN = "complex-gaussian"
    RADEMACHER = "rademacher"
    UNIFORM_SYMMETRIC = "uniform-symmetric"

    @property
    def is_complex(self) -> bool:
        return self is EntryLaw.COMPLEX_GAUSSIAN


class Field(str, Enum):
    REAL = "real"
    COMPLEX = "complex"


class Shape(str, Enum):
    HERMITIAN_SPIKE = "hermitian-spike"
    ONE_SIDE_RANK1 = "one-side-rank1"
    TWO_SIDE_RANK1 = "two-side-rank1"


def _check_dimension(d) -> int:
    if int(d) != d or d < 1:
        raise InvalidDimension(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def _draw_entries(rng: np.random.Generator, shape, law: EntryLaw) -> np.ndarray:
    if law is EntryLaw.REAL_GAUSSIAN:
        return rng.standard_normal(shape)
    if law is EntryLaw.COMPLEX_GAUSSIAN:
        re = rng.standard_normal(shape)
        im = rng.standard_normal(shape)
        return (re + 1j * im) / np.sqrt(2.0)
    if law is EntryLaw.RADEMACHER:
        return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
    if law is EntryLaw.UNIFORM_SYMMETRIC:
        s = np.sqrt(3.0)
        return rng.uniform(-s, s, size=shape)
    raise ValueError(f"unknown entry law {law!r}")


def sample_iid(d: int, law: EntryLaw | str = EntryLaw.REAL_GAUSSIAN, seed: SeedLike = None) -> np.ndarray:
    """A d×d matrix of independent unit-variance entries (not rescaled)."""
    d = _check_dimension(d)
    return _draw_entries(_rng(seed), (d, d), EntryLaw(law))


def sample_goe(d: int, seed: SeedLike = None) -> np.ndarray:
    """Real symmetric matrix, off-diagonal variance 1/d and diagonal variance 2/d."""
    d = _check_dimension(d)
    x = _rng(seed).standard_normal((d, d))
    return (x + x.T) / np.sqrt(2.0 * d)


def sample_ginoe(d: int, seed: SeedLike = None) -> np.ndarray:
    """Real Ginibre matrix with i.i.d. N(0, 1/d) entries."""
    return sample_iid(d, EntryLaw.REAL_GAUSSIAN, seed) / np.sqrt(d)


def sample_cginoe(d: int, seed: SeedLike = None) -> np.ndarray:
    """Complex Ginibre matrix with i.i.d. CN(0, 1/d) entries."""
    return sample_iid(d, EntryLaw.COMPLEX_GAUSSIAN, seed) / np.sqrt(d)


@dataclass(frozen=True, eq=False)
class StiefelFrame:
    """A d×r matrix with orthonormal columns."""

    columns: np.ndarray

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def r(self) -> int:
        return self.columns.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.columns if dtype is None else self.columns.astype(dtype)


def _haar_frame(rng: np.random.Generator, d: int, r: int, fld: Field) -> np.ndarray:
    if fld is Field.REAL:
        g = rng.standard_normal((d, r))
    else:
        g = (rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))) / np.sqrt(2.0)
    q, rr = np.linalg.qr(g)
    diag = np.diagonal(rr)
    mod = np.abs(diag)
    phase = np.where(mod > 0, diag / np.where(mod > 0, mod, 1.0), 1.0)
    # Rotating column j by the phase of R_jj makes the factorisation unique
    # (positive R diagonal), and that unique Q is Haar distributed.
    return q * phase[np.newaxis, :]


def sample_stiefel(d: int, r: int, field: Field | str = Field.REAL, seed: SeedLike = None) -> StiefelFrame:
    d = _check_dimension(d)
    if int(r) != r or r < 1 or r > d:
        raise InvalidDimension(f"frame width must satisfy 1 <= r <= d, got r={r!r}, d={d}")
    return StiefelFrame(_haar_frame(_rng(seed), d, int(r), Field(field)))


def sample_sphere(d: int, field: Field | str = Field.REAL, rng: np.random.Generator | None = None,
                  size: int | None = None) -> np.ndarray:
    """Uniform unit vector(s) on the real or complex sphere.

    With ``size`` given, returns an array of shape ``(size, d)``.
    """
    rng = rng if rng is not None else np.random.default_rng()
    shape = (d,) if size is None else (size, d)
    if Field(field) is Field.REAL:
        x = rng.standard_normal(shape)
    else:
        x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _as_lambdas(lambdas) -> tuple:
    out = []
    for lam in np.atleast_1d(np.asarray(lambdas, dtype=complex)):
        out.append(float(lam.real) if lam.imag == 0 else complex(lam))
    return tuple(out)


@dataclass(frozen=True)
class DeformedSpec:
    """Recipe for one planted instance ``W/sqrt(d) + perturbation``."""

    d: int
    lambdas: tuple
    shape: Shape = Shape.HERMITIAN_SPIKE
    entry_law: EntryLaw = EntryLaw.REAL_GAUSSIAN
    field: Field = Field.REAL
    seed: Seed = dc_field(default_factory=Seed)

    def __post_init__(self):
        object.__setattr__(self, "lambdas", _as_lambdas(self.lambdas))
        object.__setattr__(self, "shape", Shape(self.shape))
        object.__setattr__(self, "entry_law", EntryLaw(self.entry_law))
        object.__setattr__(self, "field", Field(self.field))
        object.__setattr__(self, "seed", as_seed(self.seed))
        _check_dimension(self.d)
        r = self.r
        if r < 1:
            raise InvalidDimension("at least one spike strength is required")
        if self.d < 2 * r:
            raise InvalidDimension(f"need d >= 2r, got d={self.d}, r={r}")
        mods = np.abs(np.asarray(self.lambdas, dtype=complex))
        if np.any(np.diff(mods) > 0):
            raise InvalidSpikeStrength(f"spike strengths must be sorted by descending modulus: {self.lambdas}")
        if self.shape is Shape.HERMITIAN_SPIKE:
            if mods[-1] <= 1.0:
                raise InvalidSpikeStrength(f"smallest spike modulus must exceed 1, got {mods[-1]}")
        else:
            if r != 1:
                raise InvalidDimension(f"{self.shape.value} instances have rank 1, got r={r}")
            lam = self.lambdas[0]
            if isinstance(lam, complex) or lam <= 1.0:
                raise InvalidSpikeStrength(f"rank-one planted instances need a real spike > 1, got {lam}")

    @property
    def r(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    """``matrix = noise + perturbation()`` where ``noise = W/sqrt(d)``.

    ``truth`` is the hidden frame: a d×r matrix for the hermitian spike, a
    unit vector for the one-side rank-one case, and a pair of unit vectors
    ``(u_l, u_r)`` for the two-side case.
    """

    matrix: np.ndarray
    noise: np.ndarray
    truth: object
    spec: DeformedSpec

    def factors(self):
        """Return ``(L, lambdas, R)`` with ``perturbation = L diag(lambdas) R*``."""
        lam = np.asarray(self.spec.lambdas)
        shape = self.spec.shape
        if shape is Shape.HERMITIAN_SPIKE:
            return self.truth, lam, self.truth
        if shape is Shape.ONE_SIDE_RANK1:
            u = self.truth[:, np.newaxis]
            return u, lam, u
        u_l, u_r = self.truth
        return u_l[:, np.newaxis], lam, u_r[:, np.newaxis]

    def perturbation(self) -> np.ndarray:
        left, lam, right = self.factors()
        return (left * lam[np.newaxis, :]) @ right.conj().T


def build_planted(spec: DeformedSpec) -> PlantedInstance:
    d = spec.d
    noise = sample_iid(d, spec.entry_law, spec.seed) / np.sqrt(d)
    frame_rng = spec.seed.generator(1)
    if spec.shape is Shape.HERMITIAN_SPIKE:
        truth = _haar_frame(frame_rng, d, spec.r, spec.field)
    elif spec.shape is Shape.ONE_SIDE_RANK1:
        truth = _haar_frame(frame_rng, d, 1, spec.field)[:, 0]
    else:
        u_l = _haar_frame(frame_rng, d, 1, spec.field)[:, 0]
        u_r = _haar_frame(frame_rng, d, 1, spec.field)[:, 0]
        truth = (u_l, u_r)
    inst = PlantedInstance(matrix=noise, noise=noise, truth=truth, spec=spec)
    matrix = noise + inst.perturbation()
    return PlantedInstance(matrix=matrix, noise=noise, truth=truth, spec=spec)
