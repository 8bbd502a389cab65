"""Self-check suites: algebraic identities of the mu-roots and oracle agreement.

Used both by ``covdist validate`` and by the test-suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import detequiv, oracle
from .rmt import MuRoots, mu_roots
from .spectrum import SpectralModel, make_spectral_model, projector_overlaps, with_haar_basis

PRODUCT_TOL = 1e-10
SUM_TOL = 1e-8
RESOLVENT_TOL = 1e-8
ORACLE_TOL = 1e-6


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    worst: float = 0.0
    tolerance: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases > 0 and not self.failures

    def record(self, deviation: float, label: str):
        self.cases += 1
        if not np.isfinite(deviation) or deviation > self.worst:
            self.worst = deviation if np.isfinite(deviation) else np.inf
        if not deviation <= self.tolerance:
            self.failures.append((label, deviation))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: {self.cases} cases, worst deviation "
                f"{self.worst:.3e} (tol {self.tolerance:.0e})")


def random_spectral_model(
    rng: np.random.Generator,
    max_distinct: int = 8,
    ratio_ranges=((0.05, 0.95), (1.05, 8.0)),
    max_multiplicity: int = 6,
    eig_range=(0.1, 50.0),
    min_rel_gap: float = 1e-2,
) -> SpectralModel:
    """Random spectrum with ascending eigenvalues and a random regime.

    ``M / N`` is drawn uniformly from one of ``ratio_ranges``; ``N`` is then
    rounded, so the realised ratio can drift slightly when ``M`` is small.
    """
    mbar = int(rng.integers(1, max_distinct + 1))
    while True:
        g = np.sort(np.exp(rng.uniform(*np.log(eig_range), size=mbar)))
        if mbar == 1 or np.min(np.diff(g) / g[1:]) >= min_rel_gap:
            break
    k = rng.integers(1, max_multiplicity + 1, size=mbar)
    m = int(k.sum())
    lo, hi = ratio_ranges[int(rng.integers(len(ratio_ranges)))]
    n = max(1, int(round(m / rng.uniform(lo, hi))))
    if n == m:
        n = m + 1 if (hi < 1 or m == 1) else m - 1
    return make_spectral_model(g, k, n)


def product_identity_residual(model: SpectralModel, roots: MuRoots | None = None) -> float:
    """``|prod mu_{m,0} / gamma_{m,0} - (1 - Gamma_0)| / (1 - Gamma_0)``."""
    r = mu_roots(model) if roots is None else roots
    lhs = np.exp(np.sum(np.log(r.shifted_mus / r.shifted_gammas)))
    rhs = 1.0 - r.gamma0
    return float(abs(lhs - rhs) / abs(rhs))


def sum_identity_residual(model: SpectralModel, roots: MuRoots | None = None) -> float:
    """Worst relative violation, over ``m``, of the ``K_{m,0}`` sum identity.

    With ``K_{m,0} = K_m gamma_m / (gamma_m - mu_0)``, for every ``m``::

        sum_{r != m} K_{r,0} g_r / (g_r - g_m) - sum_r K_{r,0} g_r / (g_r - mu_m)
          = sum_{k != m} K_{m,0} g_m / (g_m - g_k) - sum_r K_{m,0} g_m / (g_m - mu_r)

    The residual is scaled by the sum of absolute values of all terms.
    """
    r = mu_roots(model) if roots is None else roots
    g = model.eigenvalues
    k0 = model.multiplicities * g / r.shifted_gammas
    gmm = r.gamma_minus_mu[:, 1:]  # gamma_i - mu_j, j = 1..Mbar
    worst = 0.0
    for m in range(g.size):
        others = np.arange(g.size) != m
        go = g[others]
        terms = np.concatenate([
            k0[others] * go / (go - g[m]),
            -(k0 * g / gmm[:, m]),
            -(k0[m] * g[m] / (g[m] - go)),
            k0[m] * g[m] / gmm[m, :],
        ])
        worst = max(worst, abs(terms.sum()) / np.sum(np.abs(terms)))
    return float(worst)


def identity_suite(n_models: int = 1000, seed: int = 12345) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    prod = SuiteResult("product identity", tolerance=PRODUCT_TOL)
    summ = SuiteResult("K_{m,0} sum identity", tolerance=SUM_TOL)
    for i in range(n_models):
        model = random_spectral_model(rng)
        r = mu_roots(model)
        label = f"model {i}: gamma={model.eigenvalues.tolist()} K={model.multiplicities.tolist()} N={model.sample_size}"
        prod.record(product_identity_residual(model, r), label)
        summ.record(sum_identity_residual(model, r), label)
    return [prod, summ]


def resolvent_suite(models, n_nodes: int = 512) -> SuiteResult:
    res = SuiteResult("resolvent identity", tolerance=RESOLVENT_TOL)
    for i, model in enumerate(models):
        c = oracle.default_contour(model, "Z", n_nodes)
        res.record(oracle.resolvent_identity_check(model, c), f"model {i}")
    return res


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def oracle_suite(n_models: int = 200, seed: int = 2024, n_nodes: int = 512) -> list[SuiteResult]:
    """Closed forms versus contour quadrature on random models (both regimes)."""
    rng = np.random.default_rng(seed)
    alpha = SuiteResult("alpha closed form vs quadrature", tolerance=ORACLE_TOL)
    theta = SuiteResult("Theta coefficients vs quadrature", tolerance=ORACLE_TOL)
    total = SuiteResult("d_LE closed form vs double integral", tolerance=ORACLE_TOL)
    resolvent = SuiteResult("resolvent identity (random models)", tolerance=RESOLVENT_TOL)
    for i in range(n_models):
        # the second model of each pair has its own dimension split, same M
        a = random_spectral_model(rng, max_distinct=6)
        b = _random_partner(rng, a.dim)
        label = f"pair {i}: M={a.dim} N1={a.sample_size} N2={b.sample_size}"
        for model in (a, b):
            alpha.record(_rel(detequiv.alpha_coefficient(model), oracle.alpha_numeric(
                model, oracle.default_contour(model, "N", n_nodes))), label)
            theta.record(_rel(detequiv.beta_coefficients(model), oracle.theta_coefficients_numeric(
                model, oracle.default_contour(model, "N", n_nodes))), label)
            resolvent.record(oracle.resolvent_identity_check(
                model, oracle.default_contour(model, "Z", n_nodes)), label)
        ca = with_haar_basis(a, seed=int(rng.integers(2**31)))
        cb = with_haar_basis(b, seed=int(rng.integers(2**31)))
        w = projector_overlaps(ca, cb, "explicit")
        total.record(_rel(detequiv.le_det_equiv(a, b, w).total,
                          oracle.dle_numeric(a, b, w, n_nodes=n_nodes)), label)
    return [alpha, theta, total, resolvent]


def _random_partner(rng, dim: int) -> SpectralModel:
    mbar = int(rng.integers(1, min(6, dim) + 1))
    cuts = np.sort(rng.choice(np.arange(1, dim), size=mbar - 1, replace=False)) if mbar > 1 else []
    k = np.diff(np.concatenate([[0], cuts, [dim]])).astype(int)
    while True:
        g = np.sort(np.exp(rng.uniform(np.log(0.1), np.log(50.0), size=mbar)))
        if mbar == 1 or np.min(np.diff(g) / g[1:]) >= 1e-2:
            break
    lo, hi = ((0.05, 0.95), (1.05, 8.0))[int(rng.integers(2))]
    n = max(1, int(round(dim / rng.uniform(lo, hi))))
    if n == dim:
        n = dim + 1 if (hi < 1 or dim == 1) else dim - 1
    return make_spectral_model(g, k, n)
