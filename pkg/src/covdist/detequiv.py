"""Closed-form deterministic equivalents of plug-in covariance distances.

The log-Euclidean equivalent splits as ``alpha_1 - 2 cross + alpha_2`` with
``cross = (1/M) tr[Theta_1 Theta_2]`` and ``Theta_j = sum_k beta_k Pi_k``.
Everything is expressed through the roots returned by :func:`mu_roots`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, InternalInvariantViolation, UndersampledKL
from .rmt import MuRoots, mu_roots
from .spectrum import CovarianceModel, Model, OverlapMatrix, projector_overlaps, spectrum_of
from .special import phi2

METRICS = ("log-euclidean", "euclidean", "symmetrized-kl")


@dataclass(frozen=True, eq=False)
class DetEquivBreakdown:
    alpha1: float
    alpha2: float
    cross: float
    total: float
    beta1: np.ndarray
    beta2: np.ndarray
    regime1: str
    regime2: str


def _checked_log(x, what):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise InternalInvariantViolation(f"{what} must be positive before taking its log")
    return np.log(x)


def beta_coefficients(model: Model, roots: MuRoots | None = None) -> np.ndarray:
    """Eigen-coefficients of the equivalent of ``log R_hat``, one per distinct eigenvalue."""
    spec = spectrum_of(model)
    r = mu_roots(spec) if roots is None else roots
    g = spec.eigenvalues
    lg0 = _checked_log(r.shifted_gammas, "gamma_{k,0}")
    lmu0 = _checked_log(r.shifted_mus, "mu_{m,0}")
    l1g = _checked_log(1.0 - r.gamma0, "1 - Gamma_0")
    g0 = r.shifted_gammas
    gm_mu = r.gamma_minus_mu[:, 1:]  # gamma_k - mu_m, m = 1..Mbar

    beta = g / g0 * (lg0 + l1g - 1.0)
    diff = g[:, None] - g[None, :]
    np.fill_diagonal(diff, np.inf)
    beta = beta + np.sum(g[:, None] / diff * (lg0[None, :] - lg0[:, None]), axis=1)
    beta = beta - np.sum(g[:, None] / gm_mu * (lmu0[None, :] - lg0[:, None]), axis=1)
    return beta


def theta_matrix(model: CovarianceModel, roots: MuRoots | None = None) -> np.ndarray:
    """Dense ``Theta = sum_k beta_k Pi_k``."""
    return model.spectral_function(beta_coefficients(model, roots))


def _alpha_oversampled(spec, r: MuRoots) -> float:
    m, n = spec.dim, spec.sample_size
    c = m / n
    l1c = np.log1p(-c)
    # log(gamma_m / mu_m) through the accurately stored gap gamma_m - mu_m
    gap = np.diag(r.gamma_minus_mu[:, 1:])
    lg = np.log(spec.eigenvalues)
    lratio = -np.log1p(-gap / spec.eigenvalues)
    lmu = lg - lratio
    sq_diff = np.sum(lratio * (lg + lmu))
    return float(-(n / m - 1) * (l1c**2 - 2 * l1c) + (n / m - 1) * sq_diff)


def _alpha_undersampled(spec, r: MuRoots) -> float:
    m, n = spec.dim, spec.sample_size
    a0 = abs(r.mu0)
    la0 = np.log(a0)
    lg0 = np.log(r.shifted_gammas)
    lmu0 = np.log(r.shifted_mus)
    mus = r.mus
    s = 2 * la0 - la0**2 - 2 * la0 * np.log(m / n - 1)
    s -= 2 * np.sum(phi2(r.shifted_gammas / a0) - phi2(r.shifted_mus / a0))
    s += 2 * np.sum(lg0 * (la0 - np.log(spec.eigenvalues)))
    # mu_1 = 0 is skipped
    s -= 2 * np.sum(lmu0[1:] * (la0 - np.log(mus[1:])))
    return float((1 - n / m) * s)


def alpha_coefficient(model: Model, roots: MuRoots | None = None) -> float:
    """Equivalent of ``(1/M) tr[log^2 R_hat]`` (zero eigenvalues contribute 0)."""
    spec = spectrum_of(model)
    r = mu_roots(spec) if roots is None else roots
    m, n = spec.dim, spec.sample_size
    k = spec.multiplicities
    g = spec.eigenvalues
    g0 = r.shifted_gammas
    mu0s = r.shifted_mus
    lg0 = _checked_log(g0, "gamma_{k,0}")
    lmu0 = _checked_log(mu0s, "mu_{m,0}")

    total = 2 * min(n, m) / m
    total += np.sum(k * (lg0**2 - 2 * lg0)) / m

    # rows m, columns k
    absdiff = np.abs(g[None, :] - g[:, None])
    off = ~np.eye(g.size, dtype=bool)
    t2 = k[:, None] * (lg0[:, None] - lg0[None, :]) * (lg0[:, None] - np.log(np.where(off, absdiff, 1.0)))
    total += 2 * np.sum(t2[off]) / m

    abs_mu_gap = np.abs(r.gamma_minus_mu[:, 1:])  # |mu_k - gamma_m|, rows m
    t3 = k[:, None] * (lg0[:, None] - lmu0[None, :]) * (lg0[:, None] - np.log(abs_mu_gap))
    total -= 2 * np.sum(t3) / m

    t4 = k[None, :] * (phi2(g0[:, None] / g0[None, :]) - phi2(mu0s[:, None] / g0[None, :]))
    total += 2 * np.sum(t4) / m

    if spec.oversampled:
        total += _alpha_oversampled(spec, r)
    else:
        total += _alpha_undersampled(spec, r)
    return float(total)


def _resolve_overlaps(a: Model, b: Model, overlaps: OverlapMatrix | None) -> np.ndarray:
    sa, sb = spectrum_of(a), spectrum_of(b)
    if sa.dim != sb.dim:
        raise DimMismatch(f"models have different dimensions ({sa.dim} vs {sb.dim})")
    if overlaps is None:
        overlaps = projector_overlaps(a, b, "explicit")
    w = overlaps.entries
    if w.shape != (sa.n_distinct, sb.n_distinct):
        raise DimMismatch(f"overlap matrix shape {w.shape} does not match the spectra")
    tol = 1e-8 * sa.dim
    if (np.max(np.abs(w.sum(axis=1) - sa.multiplicities)) > tol
            or np.max(np.abs(w.sum(axis=0) - sb.multiplicities)) > tol):
        raise DimMismatch("overlap row/column sums disagree with the multiplicities")
    return w


def le_det_equiv(a: Model, b: Model, overlaps: OverlapMatrix | None = None) -> DetEquivBreakdown:
    """Deterministic equivalent of the plug-in log-Euclidean distance.

    ``overlaps`` defaults to the explicit projector overlaps, which needs
    eigenbases on both models.
    """
    w = _resolve_overlaps(a, b, overlaps)
    sa, sb = spectrum_of(a), spectrum_of(b)
    ra, rb = mu_roots(sa), mu_roots(sb)
    beta1 = beta_coefficients(sa, ra)
    beta2 = beta_coefficients(sb, rb)
    alpha1 = alpha_coefficient(sa, ra)
    alpha2 = alpha_coefficient(sb, rb)
    # correctly rounded sums of commutative products: swapping a and b is exact
    cross = math.fsum((w * np.multiply.outer(beta1, beta2)).ravel()) / sa.dim
    return DetEquivBreakdown(
        alpha1=alpha1,
        alpha2=alpha2,
        cross=cross,
        total=math.fsum((alpha1, -2 * cross, alpha2)),
        beta1=beta1,
        beta2=beta2,
        regime1=sa.regime,
        regime2=sb.regime,
    )


def comparison_det_equiv(a: Model, b: Model, metric: str,
                         overlaps: OverlapMatrix | None = None) -> float:
    """Deterministic equivalents of the plug-in Euclidean and symmetrized-KL distances.

    Euclidean::

        (1/M) tr[(R1 - R2)^2] + sum_j (M/N_j) ((1/M) tr R_j)^2

    Symmetrized KL (both sample covariances must be invertible)::

        sum over (i, j) in {(1, 2), (2, 1)} of
            (1 / (1 - M/N_i)) (1/2M) tr[R_i^{-1} R_j]   minus 1
    """
    w = _resolve_overlaps(a, b, overlaps)
    sa, sb = spectrum_of(a), spectrum_of(b)
    m = sa.dim
    g1, g2 = sa.eigenvalues, sb.eigenvalues
    k1, k2 = sa.multiplicities, sb.multiplicities
    if metric == "euclidean":
        pop = (np.sum(k1 * g1**2) + np.sum(k2 * g2**2) - 2 * g1 @ w @ g2) / m
        return float(pop + sa.ratio * (np.sum(k1 * g1) / m) ** 2 + sb.ratio * (np.sum(k2 * g2) / m) ** 2)
    if metric == "symmetrized-kl":
        if not (sa.oversampled and sb.oversampled):
            raise UndersampledKL("symmetrized KL needs N_j > M for both sample covariances")
        t12 = (1 / g1) @ w @ g2 / (2 * m)
        t21 = g1 @ w @ (1 / g2) / (2 * m)
        return float(t12 / (1 - sa.ratio) + t21 / (1 - sb.ratio) - 1.0)
    if metric == "log-euclidean":
        return le_det_equiv(a, b, overlaps).total
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def population_distance(a: Model, b: Model, metric: str,
                        overlaps: OverlapMatrix | None = None) -> float:
    """The distance between the population covariances themselves."""
    w = _resolve_overlaps(a, b, overlaps)
    sa, sb = spectrum_of(a), spectrum_of(b)
    m = sa.dim
    g1, g2 = sa.eigenvalues, sb.eigenvalues
    k1, k2 = sa.multiplicities, sb.multiplicities
    if metric == "log-euclidean":
        f1, f2 = np.log(g1), np.log(g2)
    elif metric == "euclidean":
        f1, f2 = g1, g2
    elif metric == "symmetrized-kl":
        return float(((1 / g1) @ w @ g2 + g1 @ w @ (1 / g2)) / (2 * m) - 1.0)
    else:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return float((np.sum(k1 * f1**2) + np.sum(k2 * f2**2) - 2 * f1 @ w @ f2) / m)
