"""Population covariance models.

A covariance is described by its distinct eigenvalues, their multiplicities
and (optionally) an eigenbasis whose columns are grouped by eigenvalue in
ascending order.  Sample size lives on the spectral model because every
random-matrix quantity downstream depends on the ratio ``M / N``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np
import scipy.linalg
from scipy.stats import ortho_group, unitary_group

from .errors import (
    DimMismatch,
    MissingBasis,
    ModelError,
    NonPositiveEigenvalue,
    NonPositiveMultiplicity,
    NotHermitian,
    NotPositiveDefinite,
    RhoOutOfRange,
    SampleSizeEqualsDim,
    UnsortedOrDuplicateEigenvalues,
)

DEFAULT_CLUSTER_TOL = 1e-8
FIELDS = ("real", "complex")


class ConditioningWarning(UserWarning):
    """M / N is close enough to 1 that the closed forms lose accuracy."""


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Distinct population eigenvalues, multiplicities and sample size."""

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    sample_size: int
    field: str = "complex"
    cluster_tol: float = DEFAULT_CLUSTER_TOL

    def __post_init__(self):
        gam = _frozen(np.atleast_1d(self.eigenvalues), float)
        mult = np.atleast_1d(np.asarray(self.multiplicities))
        if gam.ndim != 1 or mult.ndim != 1 or gam.size != mult.size:
            raise ModelError("eigenvalues and multiplicities must be 1-d lists of equal length")
        if gam.size == 0:
            raise ModelError("at least one eigenvalue is required")
        if not np.all(np.isfinite(gam)):
            raise ModelError("eigenvalues must be finite")
        if np.any(mult != np.round(mult)):
            raise NonPositiveMultiplicity("multiplicities must be integers")
        mult = _frozen(np.round(mult), np.int64)
        if np.any(mult <= 0):
            raise NonPositiveMultiplicity(f"multiplicities must be positive, got {mult.tolist()}")
        if gam[0] <= 0:
            raise NonPositiveEigenvalue(f"smallest eigenvalue must be > 0, got {gam[0]!r}")
        if gam.size > 1:
            rel_gap = np.diff(gam) / gam[1:]
            if np.any(rel_gap < self.cluster_tol):
                raise UnsortedOrDuplicateEigenvalues(
                    "eigenvalues must be strictly increasing with relative gap "
                    f">= {self.cluster_tol:g}"
                )
        n = int(self.sample_size)
        if n != self.sample_size or n < 1:
            raise ModelError(f"sample_size must be a positive integer, got {self.sample_size!r}")
        if self.field not in FIELDS:
            raise ModelError(f"field must be one of {FIELDS}, got {self.field!r}")
        dim = int(mult.sum())
        if n == dim:
            raise SampleSizeEqualsDim(f"N = M = {n} is excluded (M/N must differ from 1)")
        if abs(1.0 - dim / n) < 1e-3:
            warnings.warn(
                f"M/N = {dim / n:.6f} is within 1e-3 of 1; closed forms are ill-conditioned",
                ConditioningWarning,
                stacklevel=3,
            )
        object.__setattr__(self, "eigenvalues", gam)
        object.__setattr__(self, "multiplicities", mult)
        object.__setattr__(self, "sample_size", n)

    @property
    def dim(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def n_distinct(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def ratio(self) -> float:
        """Dimension over sample size, ``M / N``."""
        return self.dim / self.sample_size

    @property
    def oversampled(self) -> bool:
        return self.sample_size > self.dim

    @property
    def regime(self) -> str:
        return "oversampled" if self.oversampled else "undersampled"

    def with_sample_size(self, sample_size: int) -> "SpectralModel":
        return replace(self, sample_size=sample_size)

    def scaled(self, factor: float) -> "SpectralModel":
        return replace(self, eigenvalues=self.eigenvalues * factor)

    def expanded_eigenvalues(self) -> np.ndarray:
        """All M eigenvalues, ascending, each repeated by its multiplicity."""
        return np.repeat(self.eigenvalues, self.multiplicities)


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """A spectral model together with an orthonormal eigenbasis.

    Columns of ``basis`` are grouped into blocks of sizes ``K_1, ..., K_Mbar``
    following the ascending eigenvalue order of ``spectrum``.
    """

    spectrum: SpectralModel
    basis: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.basis)
        u = _frozen(u, complex if np.iscomplexobj(u) else float)
        m = self.spectrum.dim
        if u.shape != (m, m):
            raise DimMismatch(f"basis must be {m}x{m}, got {u.shape}")
        err = np.linalg.norm(u.conj().T @ u - np.eye(m))
        if err > 1e-12 * max(1.0, np.sqrt(m)):
            raise ModelError(f"basis is not orthonormal (||U^H U - I||_F = {err:.2e})")
        object.__setattr__(self, "basis", u)

    # convenience pass-throughs
    @property
    def dim(self) -> int:
        return self.spectrum.dim

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def multiplicities(self) -> np.ndarray:
        return self.spectrum.multiplicities

    @property
    def sample_size(self) -> int:
        return self.spectrum.sample_size

    @property
    def field(self) -> str:
        return self.spectrum.field

    def with_sample_size(self, sample_size: int) -> "CovarianceModel":
        return replace(self, spectrum=self.spectrum.with_sample_size(sample_size))

    def scaled(self, factor: float) -> "CovarianceModel":
        return replace(self, spectrum=self.spectrum.scaled(factor))

    def blocks(self) -> list[np.ndarray]:
        """Column blocks of the basis, one per distinct eigenvalue."""
        edges = np.concatenate([[0], np.cumsum(self.multiplicities)])
        return [self.basis[:, a:b] for a, b in zip(edges[:-1], edges[1:])]

    def projector(self, k: int) -> np.ndarray:
        v = self.blocks()[k]
        return v @ v.conj().T

    def spectral_function(self, values) -> np.ndarray:
        """``sum_k values[k] * Pi_k`` as a dense Hermitian matrix."""
        values = np.asarray(values)
        if values.shape != (self.spectrum.n_distinct,):
            raise DimMismatch("one value per distinct eigenvalue is required")
        d = np.repeat(values, self.multiplicities)
        return (self.basis * d) @ self.basis.conj().T

    def matrix(self) -> np.ndarray:
        return self.spectral_function(self.eigenvalues)

    def sqrt(self) -> np.ndarray:
        return self.spectral_function(np.sqrt(self.eigenvalues))


Model = Union[SpectralModel, CovarianceModel]


def spectrum_of(model: Model) -> SpectralModel:
    return model.spectrum if isinstance(model, CovarianceModel) else model


def make_spectral_model(
    eigenvalues: Sequence[float],
    multiplicities: Sequence[int],
    sample_size: int,
    *,
    field: str = "complex",
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
) -> SpectralModel:
    """Validated :class:`SpectralModel`; see the class for the invariants."""
    return SpectralModel(eigenvalues, multiplicities, sample_size, field, cluster_tol)


def multiplicities_from_fractions(fractions: Sequence[float], dim: int) -> np.ndarray:
    """Scale relative multiplicities by ``dim``; they must land on integers."""
    frac = np.asarray(fractions, dtype=float)
    if frac.ndim != 1 or frac.size == 0:
        raise ModelError("multiplicity fractions must be a non-empty list")
    if abs(frac.sum() - 1.0) > 1e-9:
        raise ModelError(f"multiplicity fractions must sum to 1, got {frac.sum()!r}")
    k = frac * dim
    ki = np.round(k)
    if np.any(np.abs(k - ki) > 1e-9 * max(1, dim)):
        raise ModelError(f"fractions {frac.tolist()} times M={dim} are not all integers")
    return ki.astype(np.int64)


def _cluster(eigenvalues: np.ndarray, cluster_tol: float) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, eigenvalues.size):
        a, b = eigenvalues[i - 1], eigenvalues[i]
        if abs(b - a) / max(abs(a), abs(b)) < cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def spectral_model_from_dense(
    matrix,
    sample_size: int,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
    *,
    field: str = "complex",
) -> CovarianceModel:
    """Eigendecompose a Hermitian positive definite matrix into a model.

    Eigenvalues whose relative gap is below ``cluster_tol`` are merged into
    one multiplicity group (represented by the group mean).
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > 1e-10 * scale:
        raise NotHermitian("matrix is not Hermitian to 1e-10")
    lam, vec = np.linalg.eigh((a + a.conj().T) / 2)
    if lam[0] <= 1e-10 * max(1.0, abs(lam[-1])):
        raise NotPositiveDefinite(f"smallest eigenvalue {lam[0]:.3e} is not positive")
    groups = _cluster(lam, cluster_tol)
    gam = np.array([lam[g].mean() for g in groups])
    mult = np.array([len(g) for g in groups])
    spec = SpectralModel(gam, mult, sample_size, field, cluster_tol)
    return CovarianceModel(spec, vec)


def toeplitz_covariance(
    rho: float,
    dim: int,
    sample_size: int,
    *,
    field: str = "complex",
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
) -> CovarianceModel:
    """AR(1) Toeplitz covariance with first row ``[1, rho, ..., rho**(dim-1)]``."""
    if not (0.0 <= rho < 1.0):
        raise RhoOutOfRange(f"rho must lie in [0, 1), got {rho!r}")
    if dim < 1:
        raise ModelError("dim must be >= 1")
    t = scipy.linalg.toeplitz(rho ** np.arange(dim))
    return spectral_model_from_dense(t, sample_size, cluster_tol, field=field)


def haar_basis(dim: int, field: str = "complex", seed: int = 0) -> np.ndarray:
    """Haar-distributed orthogonal (real) or unitary (complex) matrix."""
    if int(dim) != dim or dim < 1:
        raise ModelError(f"dim must be a positive integer, got {dim!r}")
    if field not in FIELDS:
        raise ModelError(f"field must be one of {FIELDS}, got {field!r}")
    rng = np.random.default_rng(seed)
    if dim == 1:
        if field == "real":
            return np.array([[rng.choice([-1.0, 1.0])]])
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    group = unitary_group if field == "complex" else ortho_group
    return group.rvs(int(dim), random_state=rng)


def with_haar_basis(spectrum: SpectralModel, seed: int = 0) -> CovarianceModel:
    return CovarianceModel(spectrum, haar_basis(spectrum.dim, spectrum.field, seed))


def diagonal_model(spectrum: SpectralModel) -> CovarianceModel:
    """Model whose eigenbasis is the canonical one (R is diagonal)."""
    return CovarianceModel(spectrum, np.eye(spectrum.dim))


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    """``W[k, m] = tr[Pi_k^(1) Pi_m^(2)]`` between two eigen-decompositions."""

    entries: np.ndarray
    mode: str

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries, float))

    @property
    def T(self) -> "OverlapMatrix":
        return OverlapMatrix(self.entries.T, self.mode)


OVERLAP_MODES = ("explicit", "haar-average")


def projector_overlaps(a: Model, b: Model, mode: str = "explicit") -> OverlapMatrix:
    """Trace overlaps between the eigenprojectors of two models.

    ``explicit`` uses the actual eigenbases (squared Frobenius norms of the
    cross-Gram blocks); ``haar-average`` replaces each entry by its average
    over independent Haar rotations, ``K_k K_m / M``.
    """
    sa, sb = spectrum_of(a), spectrum_of(b)
    if sa.dim != sb.dim:
        raise DimMismatch(f"models have different dimensions ({sa.dim} vs {sb.dim})")
    if mode == "haar-average":
        w = np.outer(sa.multiplicities, sb.multiplicities) / sa.dim
        return OverlapMatrix(w, mode)
    if mode != "explicit":
        raise ModelError(f"overlap mode must be one of {OVERLAP_MODES}, got {mode!r}")
    if not (isinstance(a, CovarianceModel) and isinstance(b, CovarianceModel)):
        raise MissingBasis("explicit overlaps need eigenbases on both models")
    g = np.abs(a.basis.conj().T @ b.basis) ** 2
    ra = np.concatenate([[0], np.cumsum(sa.multiplicities)[:-1]])
    rb = np.concatenate([[0], np.cumsum(sb.multiplicities)[:-1]])
    w = np.add.reduceat(np.add.reduceat(g, ra, axis=0), rb, axis=1)
    return OverlapMatrix(w, mode)
