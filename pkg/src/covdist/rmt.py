"""Random-matrix machinery shared by the closed forms and the quadrature oracle.

Notation follows the usual sample-covariance setting: ``gamma`` are the
distinct population eigenvalues, ``K`` their multiplicities and
``Psi(mu) = (1/N) sum_r K_r gamma_r / (gamma_r - mu)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    AmbiguousSelection,
    BracketNotFound,
    NoRootSatisfiesSelection,
    PoleEvaluation,
    RootResidualTooLarge,
)
from .spectrum import Model, SpectralModel, spectrum_of

ROOT_RESIDUAL_TOL = 1e-10
OMEGA_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MuRoots:
    """The ``Mbar + 1`` solutions of ``mu * (1 - Psi(mu)) = 0``.

    ``gamma_minus_mu[k, r]`` holds ``gamma_k - mu_r`` computed from the pole
    each root was anchored to, which keeps full relative accuracy when a root
    hugs a population eigenvalue.
    """

    roots: np.ndarray
    regime: str
    shifted_gammas: np.ndarray
    shifted_mus: np.ndarray
    gamma0: float
    gamma_minus_mu: np.ndarray

    @property
    def mu0(self) -> float:
        return float(self.roots[0])

    @property
    def mus(self) -> np.ndarray:
        """``mu_1, ..., mu_Mbar``."""
        return self.roots[1:]


@dataclass(frozen=True)
class SupportEdges:
    """Interval that every integration contour has to enclose."""

    lower: float
    upper: float
    margin: float


def _psi_offset(t, d, kg, n):
    # Psi(anchor + t) with d = gamma - anchor
    return np.sum(kg / (d - t)) / n


def _solve_offset(d, kg, n, lo, hi):
    """Root of ``Psi(anchor + t) = 1`` for ``t`` in ``[lo, hi]``, then Newton polish."""
    f = lambda t: _psi_offset(t, d, kg, n) - 1.0
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if not (flo < 0 < fhi):
        raise BracketNotFound(f"no sign change on [{lo!r}, {hi!r}] ({flo!r}, {fhi!r})")
    t = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(5):
        terms = kg / (d - t)
        res = terms.sum() / n - 1.0
        slope = np.sum(terms / (d - t)) / n
        step = res / slope
        t_new = t - step
        if not (lo <= t_new <= hi) or step == 0:
            break
        res_new = abs(_psi_offset(t_new, d, kg, n) - 1.0)
        if res_new >= abs(res):
            break
        t = t_new
    return t


def _tiny_offset(width, f_sign, f):
    """Walk a pole-side endpoint inwards/outwards until ``f`` has the wanted sign."""
    delta = width * 1e-12
    for _ in range(60):
        if np.sign(f(delta)) == f_sign:
            return delta
        delta *= 1e-4
        if delta < 1e-300:
            break
    raise BracketNotFound("could not separate root from pole")


def mu_roots(model: Model) -> MuRoots:
    """Solve ``mu (1 - Psi(mu)) = 0`` by bracketing between consecutive poles.

    ``mu = 0`` is always a root.  ``Psi`` increases monotonically between
    poles, so each interval ``(gamma_{m-1}, gamma_m)`` holds exactly one
    solution of ``Psi = 1``; the remaining one lies in ``(0, gamma_1)`` when
    ``N > M`` and on the negative axis when ``N < M``.
    """
    spec = spectrum_of(model)
    g = spec.eigenvalues
    kg = spec.multiplicities * g
    n = spec.sample_size
    mbar = g.size

    anchors, offsets = [], []

    def solve_between(a_val, b_val, a_is_pole):
        # interval (a, b) with a pole at b and at a when a_is_pole
        width = b_val - a_val
        mid = a_val + width / 2
        f_mid = _psi_offset(mid, g, kg, n) - 1.0
        if f_mid > 0 and a_is_pole:
            # root in left half, measure from the left pole
            d = g - a_val
            f = lambda t: _psi_offset(t, d, kg, n) - 1.0
            lo = _tiny_offset(width, -1.0, f)
            return a_val, _solve_offset(d, kg, n, lo, width / 2)
        if f_mid > 0:
            d = g - a_val
            return a_val, _solve_offset(d, kg, n, 0.0, width / 2)
        d = g - b_val
        f = lambda t: _psi_offset(-t, d, kg, n) - 1.0
        hi = _tiny_offset(width, 1.0, f)
        return b_val, _solve_offset(d, kg, n, -width / 2, -hi)

    if spec.oversampled:
        anchors.append(0.0)
        offsets.append(0.0)
        a, t = solve_between(0.0, g[0], False)
        anchors.append(a)
        offsets.append(t)
    else:
        # Psi(0) = M/N > 1 and Psi -> 0 at -inf
        lo = -g[0]
        for _ in range(2000):
            if _psi_offset(lo, g, kg, n) < 1.0:
                break
            lo *= 2
        else:
            raise BracketNotFound("undersampled root bracket expansion failed")
        anchors.append(0.0)
        offsets.append(_solve_offset(g, kg, n, lo, 0.0))
        anchors.append(0.0)
        offsets.append(0.0)
    for m in range(1, mbar):
        a, t = solve_between(g[m - 1], g[m], True)
        anchors.append(a)
        offsets.append(t)

    anchors = np.array(anchors)
    offsets = np.array(offsets)
    roots = anchors + offsets
    gmm = (g[:, None] - anchors[None, :]) - offsets[None, :]

    # residual check on the Psi = 1 roots
    for r in range(mbar + 1):
        if roots[r] == 0.0:
            continue
        terms = kg / gmm[:, r] / n
        resid = abs(terms.sum() - 1.0) / max(1.0, np.abs(terms).sum())
        if not resid < ROOT_RESIDUAL_TOL:
            raise RootResidualTooLarge(f"root {r} residual {resid:.2e}")

    mu0 = roots[0]
    g0 = gmm[:, 0]
    mu_shift = (anchors[1:] - mu0) + offsets[1:]
    gamma0 = float(np.sum(spec.multiplicities * (g / g0) ** 2) / n)
    return MuRoots(
        roots=roots,
        regime=spec.regime,
        shifted_gammas=g0,
        shifted_mus=mu_shift,
        gamma0=gamma0,
        gamma_minus_mu=gmm,
    )


def _check_poles(spec: SpectralModel, omega):
    w = np.asarray(omega)
    dist = np.abs(w[..., None] - spec.eigenvalues)
    if np.any(dist < 1e-14 * spec.eigenvalues):
        raise PoleEvaluation("evaluation at a population eigenvalue")


def psi_fn(model: Model, omega):
    spec = spectrum_of(model)
    _check_poles(spec, omega)
    w = np.asarray(omega)[..., None]
    g = spec.eigenvalues
    return np.sum(spec.multiplicities * g / (g - w), axis=-1) / spec.sample_size


def gamma_fn(model: Model, omega):
    """``(1/N) sum_r K_r (gamma_r / (gamma_r - omega))**2``."""
    spec = spectrum_of(model)
    _check_poles(spec, omega)
    w = np.asarray(omega)[..., None]
    g = spec.eigenvalues
    out = np.sum(spec.multiplicities * (g / (g - w)) ** 2, axis=-1) / spec.sample_size
    return out[()] if np.ndim(out) == 0 else out


def z_of_omega(model: Model, omega):
    """The map ``omega -> z = omega (1 - Psi(omega))`` whose inverse is ``solve_omega``."""
    out = np.asarray(omega) * (1.0 - psi_fn(model, omega))
    return out[()] if np.ndim(out) == 0 else out


def _arrowhead_stack(spec: SpectralModel, z: np.ndarray) -> np.ndarray:
    # omega - a - sum b_r / (gamma_r - omega) = 0 with a = z - sum K gamma / N,
    # b = K gamma^2 / N; eigenvalues of [[a, i sqrt(b)], [i sqrt(b), diag(gamma)]]
    g = spec.eigenvalues
    n = spec.sample_size
    k = spec.multiplicities
    size = g.size + 1
    a = z - np.sum(k * g) / n
    off = 1j * np.sqrt(k * g * g / n)
    base = np.zeros((size, size), dtype=complex)
    base[1:, 1:] = np.diag(g)
    base[0, 1:] = off
    base[1:, 0] = off
    stack = np.broadcast_to(base, (z.size, size, size)).copy()
    stack[:, 0, 0] = a
    return stack


def _polish_omega(spec, z, w):
    g = spec.eigenvalues
    k = spec.multiplicities
    n = spec.sample_size
    for _ in range(3):
        ratio = g / (g - w[:, None])
        f = w * (1.0 - np.sum(k * ratio, axis=1) / n) - z
        fp = 1.0 - np.sum(k * ratio**2, axis=1) / n
        w = w - f / fp
    ratio = g / (g - w[:, None])
    f = w * (1.0 - np.sum(k * ratio, axis=1) / n) - z
    scale = np.maximum(np.abs(z), np.abs(w) * (1.0 + np.sum(k * np.abs(ratio), axis=1) / n))
    return w, np.abs(f) / scale


def solve_omega(model: Model, z):
    """Select the root ``omega(z)`` of ``z = omega (1 - Psi(omega))``.

    For ``Im z > 0`` (``< 0``) the unique root in the same half plane is
    returned; for real ``z`` the unique real root with ``Gamma(omega) < 1``.
    All ``Mbar + 1`` candidates come from the eigenvalues of an arrowhead
    linearization of the cleared-denominator polynomial and are then polished
    by Newton steps.  Accepts scalars or arrays.
    """
    spec = spectrum_of(model)
    zz = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if np.any(zz == 0):
        raise NoRootSatisfiesSelection("z = 0 is excluded")
    scale = max(float(spec.eigenvalues[-1]), 1.0)
    cand = np.linalg.eigvals(_arrowhead_stack(spec, zz))
    out = np.empty(zz.size, dtype=complex)
    real_tol = 1e-12 * np.maximum(np.abs(zz), scale)
    is_real = np.abs(zz.imag) <= real_tol
    for i in range(zz.size):
        c = cand[i]
        if is_real[i]:
            cr = c[np.abs(c.imag) <= 1e-8 * max(scale, np.max(np.abs(c)))].real
            gam = np.sum(spec.multiplicities * (spec.eigenvalues / (spec.eigenvalues - cr[:, None])) ** 2,
                         axis=1) / spec.sample_size
            pick = cr[gam < 1.0]
        else:
            side = np.sign(zz[i].imag)
            pick = c[side * c.imag > 1e-14 * max(scale, np.max(np.abs(c)))]
        if pick.size == 0:
            raise NoRootSatisfiesSelection(f"no admissible root for z = {zz[i]!r}")
        if pick.size > 1:
            raise AmbiguousSelection(f"{pick.size} admissible roots for z = {zz[i]!r}")
        out[i] = pick[0]
    zsolve = np.where(is_real, zz.real, zz)
    out, resid = _polish_omega(spec, zsolve, out)
    out = np.where(is_real, out.real, out)
    if np.any(resid > OMEGA_RESIDUAL_TOL):
        raise RootResidualTooLarge(f"omega residual {resid.max():.2e} exceeds {OMEGA_RESIDUAL_TOL}")
    if np.ndim(z) == 0:
        return out[0].real if is_real[0] and np.isrealobj(z) else out[0]
    return out.reshape(np.shape(z))


def support_edges(model: Model, epsilon_frac: float = 0.25) -> SupportEdges:
    """Bounds ``(1 -/+ sqrt(M/N))^2`` times the extreme population eigenvalues."""
    spec = spectrum_of(model)
    if not (0 < epsilon_frac < 1):
        raise ValueError("epsilon_frac must lie in (0, 1)")
    s = np.sqrt(spec.ratio)
    lower = (1 - s) ** 2 * spec.eigenvalues[0]
    upper = (1 + s) ** 2 * spec.eigenvalues[-1]
    return SupportEdges(float(lower), float(upper), float(epsilon_frac * lower))
