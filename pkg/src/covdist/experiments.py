"""Experiment orchestration and CSV emission.

Every runner returns a list of :class:`Row` in deterministic config order
(dims outer, ratio pairs next, then grid points, then metrics), whatever the
order in which parallel work completes.
"""

from __future__ import annotations

import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import validation
from .config import ExperimentConfig
from .detequiv import comparison_det_equiv, le_det_equiv
from .empirical import default_threads, monte_carlo
from .errors import ConfigError, NumericalError, SingularKL, UndersampledKL
from .spectrum import make_spectral_model, projector_overlaps, toeplitz_covariance

HEADER = ("experiment", "metric", "M", "N1", "N2", "mode", "value", "std", "trials", "seed",
          "param", "alpha1", "alpha2", "cross", "flags")
LOW_TRIALS = 100


@dataclass(frozen=True)
class Row:
    experiment: str
    metric: str
    M: int
    N1: int
    N2: int
    mode: str
    value: float | None = None
    std: float | None = None
    trials: int | None = None
    seed: int | None = None
    param: float | None = None
    alpha1: float | None = None
    alpha2: float | None = None
    cross: float | None = None
    flags: str = ""


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, f.name)) for f in fields(Row)])
    return buf.getvalue()


def write_csv(rows, out: str | None):
    text = rows_to_csv(rows)
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _with_context(exc: NumericalError, m, n1, n2, metric) -> NumericalError:
    new = type(exc)(f"M={m} N1={n1} N2={n2} metric={metric}: {exc}")
    new.__cause__ = exc
    return new


def _det_equiv_value(a, b, metric, overlaps, m, n1, n2):
    """``(value, breakdown-or-None, flags)`` for one metric."""
    try:
        if metric == "log-euclidean":
            br = le_det_equiv(a, b, overlaps)
            return br.total, br, ""
        return comparison_det_equiv(a, b, metric, overlaps), None, ""
    except UndersampledKL:
        return None, None, "undefined-undersampled"
    except NumericalError as exc:
        raise _with_context(exc, m, n1, n2, metric) from exc


def run_det_equiv(cfg: ExperimentConfig) -> list[Row]:
    """One row per ``(M, ratio pair, metric)``; log-Euclidean rows carry the breakdown."""
    rows = []
    for m, n1, n2 in cfg.cases():
        a, b = cfg.models(m, n1, n2)
        w = projector_overlaps(a, b, cfg.overlap_mode)
        for metric in cfg.metrics:
            val, br, flags = _det_equiv_value(a, b, metric, w, m, n1, n2)
            rows.append(Row("det-equiv", metric, m, n1, n2, cfg.overlap_mode, val, flags=flags,
                            alpha1=br.alpha1 if br else None,
                            alpha2=br.alpha2 if br else None,
                            cross=br.cross if br else None))
    return rows


def run_convergence(cfg: ExperimentConfig, trials: int | None = None,
                    seed: int | None = None, threads: int | None = None) -> list[Row]:
    """Monte Carlo mean and std against the deterministic equivalent.

    Per ``(M, ratio pair, metric)`` three rows: ``empirical`` (mean, std),
    ``det-equiv`` and ``gap`` (absolute difference).  Fewer than 100 trials
    still run but are flagged ``low-trials``.  Empirical rows use the actual
    model eigenbases, whatever ``overlap_mode`` says.
    """
    cfg = cfg.with_overrides(trials=trials, seed=seed)
    low = "low-trials" if cfg.trials < LOW_TRIALS else ""
    rows = []
    for m, n1, n2 in cfg.cases():
        a, b = cfg.models(m, n1, n2)
        w = projector_overlaps(a, b, cfg.overlap_mode)
        mc_mode = f"monte-carlo-{a.field}"
        for metric in cfg.metrics:
            det, _, dflag = _det_equiv_value(a, b, metric, w, m, n1, n2)
            try:
                st = monte_carlo(a, b, metric, cfg.trials, cfg.seed, threads=threads)
                mean, std, eflag = st.mean, st.std, ""
            except SingularKL:
                mean, std, eflag = None, None, "undefined-singular"
            flags = ";".join(f for f in (low, eflag) if f)
            rows.append(Row("empirical", metric, m, n1, n2, mc_mode, mean, std,
                            cfg.trials, cfg.seed, flags=flags))
            rows.append(Row("det-equiv", metric, m, n1, n2, cfg.overlap_mode, det, flags=dflag))
            gap = abs(mean - det) if mean is not None and det is not None else None
            rows.append(Row("gap", metric, m, n1, n2, cfg.overlap_mode, gap, None,
                            cfg.trials, cfg.seed, flags=";".join(f for f in (low, eflag, dflag) if f)))
    return rows


SWEEP_PARAMS = ("rho2",)


def sweep_grid(start: float, stop: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise ConfigError(f"need at least 2 steps, got {steps}", "steps")
    for name, v in (("from", start), ("to", stop)):
        if not 0 <= v < 1:
            raise ConfigError(f"must lie in [0, 1), got {v}", name)
    if stop <= start:
        raise ConfigError("must be greater than 'from'", "to")
    return np.linspace(start, stop, steps)


def run_sweep(cfg: ExperimentConfig, param: str, start: float, stop: float, steps: int,
              threads: int | None = None) -> list[Row]:
    """Deterministic equivalents over a grid of ``rho2`` (the Toeplitz ``rho`` of model_b).

    Grid rows come first, then one ``sweep-argmin`` row per ``(M, ratio pair,
    metric)`` whose ``param`` is the minimising grid value.
    """
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unsupported sweep parameter {param!r} (allowed: {', '.join(SWEEP_PARAMS)})", "param")
    if cfg.model_b.kind != "toeplitz":
        raise ConfigError("sweeping rho2 needs a toeplitz descriptor", "model_b")
    grid = sweep_grid(start, stop, steps)
    threads = default_threads() if threads is None else max(1, threads)

    rows = []
    for m, n1, n2 in cfg.cases():
        a = cfg.model_a.build(m, n1, cfg.field)

        def point(rho):
            b = replace(cfg.model_b, rho=float(rho)).build(m, n2, cfg.field)
            w = projector_overlaps(a, b, cfg.overlap_mode)
            return [_det_equiv_value(a, b, metric, w, m, n1, n2) for metric in cfg.metrics]

        if threads == 1:
            results = [point(r) for r in grid]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(point, grid))
        for rho, res in zip(grid, results):
            for metric, (val, br, flags) in zip(cfg.metrics, res):
                rows.append(Row("sweep", metric, m, n1, n2, cfg.overlap_mode, val, param=float(rho),
                                alpha1=br.alpha1 if br else None,
                                alpha2=br.alpha2 if br else None,
                                cross=br.cross if br else None, flags=flags))
        for j, metric in enumerate(cfg.metrics):
            vals = np.array([np.nan if res[j][0] is None else res[j][0] for res in results])
            if np.all(np.isnan(vals)):
                rows.append(Row("sweep-argmin", metric, m, n1, n2, cfg.overlap_mode,
                                flags="undefined-undersampled"))
                continue
            i = int(np.nanargmin(vals))
            rows.append(Row("sweep-argmin", metric, m, n1, n2, cfg.overlap_mode, float(vals[i]),
                            param=float(grid[i])))
    return rows


def _reference_models():
    """Fixed models for the resolvent suite: both regimes, clustered and spread spectra."""
    out = []
    for n in (4, 25, 45, 75, 150, 600):
        out.append(make_spectral_model([1.0, 6.0, 15.0, 25.0], [5, 10, 15, 20], n))
    for n in (10, 40):
        out.append(toeplitz_covariance(0.75, 20, n).spectrum)
        out.append(make_spectral_model([1.0], [20], n))
    return out


def run_validate(fast: bool = False):
    """Run the self-check suites; returns ``(report_lines, all_passed)``."""
    suites = validation.identity_suite(200 if fast else 1000)
    suites.append(validation.resolvent_suite(_reference_models()))
    suites.extend(validation.oracle_suite(20 if fast else 200))
    lines = [s.line() for s in suites]
    for s in suites:
        for label, dev in s.failures[:3]:
            lines.append(f"  {s.name}: {label}: deviation {dev:.3e}")
    ok = all(s.passed for s in suites)
    lines.append("validation " + ("passed" if ok else "FAILED"))
    return lines, ok
