"""Sample covariance matrices, plug-in distances and the Monte Carlo harness."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NonPositiveRetainedEigenvalue, SingularKL
from .spectrum import CovarianceModel, FIELDS

METRICS = ("log-euclidean", "euclidean", "symmetrized-kl")
# trials per work unit; fixed so results never depend on the thread count
CHUNK = 64


@dataclass(frozen=True)
class MonteCarloStats:
    mean: float
    std: float
    trials: int
    seed: int
    config_id: str


def default_threads() -> int:
    env = os.environ.get("COVDIST_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent substream for one trial, keyed by ``(seed, trial)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _noise(rng, m, n, field):
    if field == "real":
        return rng.standard_normal((m, n))
    return (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)


def _scm_from_sqrt(sqrt_r, n, field, rng):
    y = sqrt_r @ _noise(rng, sqrt_r.shape[0], n, field)
    s = y @ y.conj().T / n
    return (s + s.conj().T) / 2


def sample_scm(model: CovarianceModel, n_samples: int, field: str | None = None,
               rng: np.random.Generator | int | None = None) -> np.ndarray:
    """``(1/N) Y Y^H`` with ``Y = R^{1/2} X`` and unit-variance Gaussian ``X``.

    Complex noise is circularly symmetric: real and imaginary parts are
    independent with variance 1/2 each.
    """
    if int(n_samples) != n_samples or n_samples < 1:
        raise ValueError(f"n_samples must be a positive integer, got {n_samples!r}")
    field = model.field if field is None else field
    if field not in FIELDS:
        raise ValueError(f"field must be one of {FIELDS}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return _scm_from_sqrt(model.sqrt(), int(n_samples), field, rng)


def _log_extended_eig(lam, expected_rank):
    lam = np.asarray(lam)
    m = lam.shape[-1]
    if expected_rank < m:
        lam = lam.copy()
        lam[..., : m - expected_rank] = 1.0  # log 1 = 0 for the discarded part
    if np.any(lam <= 0):
        raise NonPositiveRetainedEigenvalue("a retained eigenvalue is not positive")
    return np.log(lam)


def matrix_log_extended(scm, expected_rank: int) -> np.ndarray:
    """Matrix log on the top ``expected_rank`` eigenvalues; the rest map to 0.

    ``expected_rank`` is ``min(M, N)``, the almost-sure rank of the sample
    covariance, so tiny numerical eigenvalues are never logged.
    """
    a = np.asarray(scm)
    m = a.shape[0]
    if not (0 <= expected_rank <= m):
        raise ValueError(f"expected_rank must lie in [0, {m}]")
    lam, v = np.linalg.eigh(a)
    f = _log_extended_eig(lam, expected_rank)
    return (v * f) @ v.conj().T


def plugin_distance(scm1, n1: int, scm2, n2: int, metric: str = "log-euclidean") -> float:
    """Plug-in distance between two sample covariances (normalised by ``M``)."""
    a, b = np.asarray(scm1), np.asarray(scm2)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    m = a.shape[0]
    if metric == "log-euclidean":
        d = matrix_log_extended(a, min(m, n1)) - matrix_log_extended(b, min(m, n2))
        return float(np.sum(np.abs(d) ** 2) / m)
    if metric == "euclidean":
        return float(np.sum(np.abs(a - b) ** 2) / m)
    if metric == "symmetrized-kl":
        if n1 < m or n2 < m:
            raise SingularKL("symmetrized KL needs n1, n2 >= M")
        t = np.trace(np.linalg.solve(a, b)).real + np.trace(np.linalg.solve(b, a)).real
        return float(t / (2 * m) - 1.0)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def _batch_distance(s1, n1, s2, n2, metric):
    m = s1.shape[-1]
    if metric == "log-euclidean":
        l1, v1 = np.linalg.eigh(s1)
        l2, v2 = np.linalg.eigh(s2)
        f1 = _log_extended_eig(l1, min(m, n1))
        f2 = _log_extended_eig(l2, min(m, n2))
        # ||L1 - L2||_F^2 = sum f1^2 + sum f2^2 - 2 sum_ij f1_i f2_j |v1_i^H v2_j|^2
        g = np.abs(np.conj(np.swapaxes(v1, -1, -2)) @ v2) ** 2
        cross = np.einsum("ti,tij,tj->t", f1, g, f2)
        return (np.sum(f1**2, axis=-1) + np.sum(f2**2, axis=-1) - 2 * cross) / m
    return np.array([plugin_distance(a, n1, b, n2, metric) for a, b in zip(s1, s2)])


def _run_chunk(args):
    sq1, n1, sq2, n2, field, metric, seed, start, stop, coupled = args
    s1, s2 = [], []
    for t in range(start, stop):
        rng = trial_rng(seed, t)
        if coupled:
            x = _noise(rng, sq1.shape[0], n1, field)
            y1, y2 = sq1 @ x, sq2 @ x[:, :n2]
            a, b = y1 @ y1.conj().T / n1, y2 @ y2.conj().T / n2
            s1.append((a + a.conj().T) / 2)
            s2.append((b + b.conj().T) / 2)
        else:
            s1.append(_scm_from_sqrt(sq1, n1, field, rng))
            s2.append(_scm_from_sqrt(sq2, n2, field, rng))
    return _batch_distance(np.array(s1), n1, np.array(s2), n2, metric)


def monte_carlo(
    model_a: CovarianceModel,
    model_b: CovarianceModel,
    metric: str = "log-euclidean",
    trials: int = 1000,
    seed: int = 0,
    *,
    field: str | None = None,
    threads: int | None = None,
    coupled: bool = False,
) -> MonteCarloStats:
    """Mean and (population) standard deviation of a plug-in distance.

    Sample sizes come from the models.  Trial ``t`` draws its noise from
    :func:`trial_rng` ``(seed, t)``, and trials are grouped in fixed chunks,
    so the result is bit-identical for any ``threads``.  With ``coupled``
    both sample covariances reuse the same noise draw (a plumbing check:
    identical models then give distance exactly 0).
    """
    if trials < 2:
        raise ValueError("at least two trials are required")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if model_a.dim != model_b.dim:
        raise DimMismatch("models have different dimensions")
    field = model_a.field if field is None else field
    n1, n2 = model_a.sample_size, model_b.sample_size
    if coupled and n2 > n1:
        raise ValueError("coupled sampling needs n2 <= n1")
    sq1, sq2 = model_a.sqrt(), model_b.sqrt()
    jobs = [
        (sq1, n1, sq2, n2, field, metric, seed, s, min(s + CHUNK, trials), coupled)
        for s in range(0, trials, CHUNK)
    ]
    threads = default_threads() if threads is None else max(1, threads)
    if threads == 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    values = np.concatenate(parts)
    config_id = f"{metric}:M={model_a.dim}:N1={n1}:N2={n2}:{field}"
    return MonteCarloStats(float(np.mean(values)), float(np.std(values)), trials, seed, config_id)
