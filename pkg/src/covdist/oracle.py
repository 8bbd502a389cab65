"""Contour-quadrature evaluation of the defining integrals.

This is the independent check on :mod:`covdist.detequiv`: nothing here
touches the mu-roots or the dilogarithm.  The only shared ingredient is the
root selection ``omega(z)`` from :func:`covdist.rmt.solve_omega`.

Contours are smooth closed curves sampled with the periodic trapezoid rule,
which converges geometrically for analytic integrands:

* ``N`` contours exclude the origin.  They are ellipses in the ``log z``
  plane, so the principal logarithm is analytic along and inside them.
* ``Z`` contours enclose the origin.  They are circles in the ``z`` plane.

Both are traversed clockwise; with this orientation the resolvent identity
returns ``+I`` (checked by :func:`resolvent_identity_check`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchCutCrossed, DegenerateContour, NumericalError
from .rmt import SupportEdges, mu_roots, solve_omega, support_edges
from .spectrum import CovarianceModel, Model, OverlapMatrix, projector_overlaps, spectrum_of

TWO_PI_J = 2j * np.pi
# half-height of the N ellipse in the log plane, i.e. max |arg z|
LOG_HALF_HEIGHT = 1.0


@dataclass(frozen=True, eq=False)
class Contour:
    kind: str
    nodes: np.ndarray
    weights: np.ndarray  # dz increments, trapezoid weights included
    orientation: int = -1

    @property
    def left(self) -> float:
        return float(self.nodes.real.min())

    def winding_number(self, point: complex = 0.0) -> int:
        ang = np.unwrap(np.angle(np.append(self.nodes, self.nodes[0]) - point))
        return int(np.rint((ang[-1] - ang[0]) / (2 * np.pi)))

    def integrate(self, values) -> complex:
        """``(1/2 pi j) * contour integral`` of sampled ``values``."""
        return np.tensordot(self.weights, values, axes=(0, 0)) / TWO_PI_J


def make_contour(
    edges: SupportEdges,
    kind: str = "N",
    n_nodes: int = 512,
    *,
    enlarge: float = 1.0,
    mu0: float | None = None,
) -> Contour:
    """Clockwise contour around ``[lower - margin, upper + margin]``.

    ``enlarge > 1`` pushes the contour away from the support; integrals must
    not change (Cauchy), which the tests use as a robustness check.
    """
    if kind not in ("N", "Z"):
        raise DegenerateContour(f"contour kind must be 'N' or 'Z', got {kind!r}")
    if n_nodes < 64 or n_nodes % 4:
        raise DegenerateContour("n_nodes must be >= 64 and a multiple of 4")
    if not (0 < edges.margin < edges.lower < edges.upper) or enlarge < 1:
        raise DegenerateContour(f"invalid support edges {edges}")
    t = 2 * np.pi * np.arange(n_nodes) / n_nodes
    dt = 2 * np.pi / n_nodes
    hi = edges.upper + edges.margin
    if kind == "N":
        xl = (edges.lower - edges.margin) / enlarge
        xr = 2 * hi * enlarge
        centre = 0.5 * (np.log(xr) + np.log(xl))
        semi = 0.5 * (np.log(xr) - np.log(xl))
        w = centre + semi * np.cos(t) - 1j * LOG_HALF_HEIGHT * np.sin(t)
        dw = -semi * np.sin(t) - 1j * LOG_HALF_HEIGHT * np.cos(t)
        z = np.exp(w)
        dz = z * dw * dt
    else:
        xl = min(-0.5 * edges.lower, -0.5 * hi)
        if mu0 is not None and mu0 < 0:
            xl = min(xl, 1.5 * mu0)
        xl *= enlarge
        xr = 1.5 * hi * enlarge
        centre = 0.5 * (xl + xr)
        radius = 0.5 * (xr - xl)
        e = np.exp(-1j * t)
        z = centre + radius * e
        dz = -1j * radius * e * dt
    return Contour(kind, z, dz)


def default_contour(model: Model, kind: str = "N", n_nodes: int = 512, **kw) -> Contour:
    spec = spectrum_of(model)
    mu0 = mu_roots(spec).mu0 if kind == "Z" and not spec.oversampled else None
    return make_contour(support_edges(spec), kind, n_nodes, mu0=mu0, **kw)


def qbar_coefficients(model: Model, z) -> np.ndarray:
    """``q_k(z) = (omega/z) / (gamma_k - omega)`` so that ``Qbar(z) = sum_k q_k(z) Pi_k``."""
    spec = spectrum_of(model)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(solve_omega(spec, z), dtype=complex)
    return (w / z)[..., None] / (spec.eigenvalues - w[..., None])


def qbar(model: Model, basis, z: complex) -> np.ndarray:
    """Dense ``Qbar(z) = (omega(z)/z) (R - omega(z) I)^{-1}``."""
    spec = spectrum_of(model)
    if basis is None:
        if not isinstance(model, CovarianceModel):
            raise ValueError("a basis is required for a bare spectral model")
        basis = model.basis
    q = qbar_coefficients(spec, complex(z))
    d = np.repeat(q, spec.multiplicities)
    u = np.asarray(basis)
    return (u * d) @ u.conj().T


def _coeff_integral(spec, contour: Contour, weight_fn=None) -> np.ndarray:
    q = qbar_coefficients(spec, contour.nodes)
    f = 1.0 if weight_fn is None else weight_fn(contour.nodes)[:, None]
    return contour.integrate(f * q)


def _require_n_type(contour: Contour):
    if contour.kind != "N" or np.any(contour.nodes.real <= 0):
        raise BranchCutCrossed("log integrands need an N contour in the open right half plane")


def resolvent_identity_check(model: Model, contour: Contour | None = None) -> float:
    """``|| (1/2 pi j) contour-integral of Qbar - I ||_F``; ~0 on a Z contour."""
    spec = spectrum_of(model)
    if contour is None:
        contour = default_contour(spec, "Z")
    s = _coeff_integral(spec, contour)
    return float(np.sqrt(np.sum(spec.multiplicities * np.abs(s - 1.0) ** 2)))


def alpha_numeric(model: Model, contour: Contour | None = None) -> float:
    """Quadrature of ``(1/2 pi j) contour-integral log^2(z) (1/M) tr Qbar(z) dz``."""
    spec = spectrum_of(model)
    if contour is None:
        contour = default_contour(spec, "N")
    _require_n_type(contour)
    s = _coeff_integral(spec, contour, lambda z: np.log(z) ** 2)
    val = np.sum(spec.multiplicities * s) / spec.dim
    return float(val.real)


def theta_coefficients_numeric(model: Model, contour: Contour | None = None) -> np.ndarray:
    """Eigen-coefficients of ``(1/2 pi j) contour-integral log(z) Qbar(z) dz``."""
    spec = spectrum_of(model)
    if contour is None:
        contour = default_contour(spec, "N")
    _require_n_type(contour)
    s = _coeff_integral(spec, contour, np.log)
    if np.max(np.abs(s.imag)) > 1e-9 * max(1.0, np.max(np.abs(s.real))):
        raise NumericalError(f"Theta has imaginary residue {np.max(np.abs(s.imag)):.2e}")
    return s.real


def theta_numeric(model: CovarianceModel, contour: Contour | None = None) -> np.ndarray:
    """Dense Hermitian ``Theta`` from quadrature."""
    return model.spectral_function(theta_coefficients_numeric(model.spectrum, contour))


def dle_numeric(
    a: Model,
    b: Model,
    overlaps: OverlapMatrix | None = None,
    contours: dict | None = None,
    n_nodes: int = 512,
) -> float:
    """Three-term double contour integral defining the log-Euclidean equivalent.

    ``contours`` may supply any of ``"N1", "Z1", "N2", "Z2"``; missing ones
    get defaults.  The trace ``(1/M) tr[Qbar_1(z1) Qbar_2(z2)]`` is tabulated
    on the full tensor grid of nodes.
    """
    sa, sb = spectrum_of(a), spectrum_of(b)
    if overlaps is None:
        overlaps = projector_overlaps(a, b, "explicit")
    w = overlaps.entries
    c = dict(contours or {})
    c.setdefault("N1", default_contour(sa, "N", n_nodes))
    c.setdefault("Z1", default_contour(sa, "Z", n_nodes))
    c.setdefault("N2", default_contour(sb, "N", n_nodes))
    c.setdefault("Z2", default_contour(sb, "Z", n_nodes))
    _require_n_type(c["N1"])
    _require_n_type(c["N2"])
    q = {
        "N1": qbar_coefficients(sa, c["N1"].nodes),
        "Z1": qbar_coefficients(sa, c["Z1"].nodes),
        "N2": qbar_coefficients(sb, c["N2"].nodes),
        "Z2": qbar_coefficients(sb, c["Z2"].nodes),
    }
    m = sa.dim

    def term(k1, f1, k2, f2):
        kernel = q[k1] @ w @ q[k2].T / m
        v1 = c[k1].weights * f1(c[k1].nodes)
        v2 = c[k2].weights * f2(c[k2].nodes)
        return v1 @ kernel @ v2 / TWO_PI_J**2

    one = np.ones_like
    sq = lambda z: np.log(z) ** 2
    total = term("N1", sq, "Z2", one) - 2 * term("N1", np.log, "N2", np.log) + term("Z1", one, "N2", sq)
    if abs(total.imag) > 1e-8 * max(1.0, abs(total.real)):
        raise NumericalError(f"double integral has imaginary part {total.imag:.2e}")
    return float(total.real)
