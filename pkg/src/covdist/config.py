"""JSON experiment configuration: parsing, validation and model construction.

A configuration looks like::

    {
      "model_a": {"spectrum": {"eigenvalues": [1, 6, 15, 25],
                               "multiplicity_fractions": [0.1, 0.2, 0.3, 0.4]},
                  "seed": 0},
      "model_b": {"toeplitz": {"rho": 0.75}},
      "ratios": [[1.5, 3.0]],
      "dims": [10, 60],
      "metrics": ["log-euclidean"],
      "trials": 10000,
      "seed": 0,
      "overlap_mode": "explicit",
      "field": "complex"
    }

Spectrum descriptors get a Haar eigenbasis drawn from their ``seed``
(default 0), so two descriptors with the same seed share one basis.
Toeplitz descriptors carry their own eigenbasis.  Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError, CovDistError
from .spectrum import (
    FIELDS,
    OVERLAP_MODES,
    CovarianceModel,
    make_spectral_model,
    multiplicities_from_fractions,
    toeplitz_covariance,
    with_haar_basis,
)

METRICS = ("log-euclidean", "euclidean", "symmetrized-kl")
_TOP_KEYS = {"model_a", "model_b", "ratios", "dims", "metrics", "trials", "seed",
             "overlap_mode", "field", "name"}
_INT_TOL = 1e-9


@dataclass(frozen=True)
class ModelDescriptor:
    kind: str  # "spectrum" or "toeplitz"
    eigenvalues: tuple = ()
    fractions: tuple = ()
    rho: float = 0.0
    seed: int = 0
    field: str | None = None

    def build(self, dim: int, sample_size: int, field: str) -> CovarianceModel:
        fld = self.field or field
        if self.kind == "toeplitz":
            return toeplitz_covariance(self.rho, dim, sample_size, field=fld)
        k = multiplicities_from_fractions(self.fractions, dim)
        spec = make_spectral_model(self.eigenvalues, k, sample_size, field=fld)
        return with_haar_basis(spec, seed=self.seed)


@dataclass(frozen=True)
class ExperimentConfig:
    model_a: ModelDescriptor
    model_b: ModelDescriptor
    ratios: tuple
    dims: tuple
    metrics: tuple
    trials: int = 1000
    seed: int = 0
    overlap_mode: str = "explicit"
    field: str = "complex"
    name: str = ""

    def sample_sizes(self, dim: int, ratio) -> tuple[int, int]:
        return tuple(int(round(r * dim)) for r in ratio)

    def cases(self):
        """``(M, N1, N2)`` in deterministic config order (dims outer, ratios inner)."""
        for m in self.dims:
            for ratio in self.ratios:
                n1, n2 = self.sample_sizes(m, ratio)
                yield m, n1, n2

    def models(self, dim: int, n1: int, n2: int):
        return (self.model_a.build(dim, n1, self.field),
                self.model_b.build(dim, n2, self.field))

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        _check_trials(cfg.trials, "trials")
        _check_int(cfg.seed, "seed", minimum=0)
        return cfg


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError("expected a JSON object", path or "<root>")
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", where)


def _require(obj, key, path):
    if key not in obj:
        raise ConfigError("missing required key", f"{path}.{key}" if path else key)
    return obj[key]


def _check_int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", path)
    return value


def _check_trials(value, path):
    _check_int(value, path)
    if value < 2:
        raise ConfigError(f"at least 2 trials are needed for a standard deviation, got {value}", path)
    return value


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", path)
    return float(value)


def _number_list(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a non-empty list of numbers", path)
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _parse_field(value, path):
    if value not in FIELDS:
        raise ConfigError(f"must be one of {', '.join(FIELDS)}, got {value!r}", path)
    return value


def _parse_model(obj, path) -> ModelDescriptor:
    _check_keys(obj, {"spectrum", "toeplitz", "seed", "field"}, path)
    kinds = [k for k in ("spectrum", "toeplitz") if k in obj]
    if len(kinds) != 1:
        raise ConfigError("exactly one of 'spectrum' or 'toeplitz' is required", path)
    seed = _check_int(obj.get("seed", 0), f"{path}.seed", minimum=0)
    fld = _parse_field(obj["field"], f"{path}.field") if "field" in obj else None
    if kinds[0] == "toeplitz":
        sub, sp = obj["toeplitz"], f"{path}.toeplitz"
        _check_keys(sub, {"rho"}, sp)
        rho = _number(_require(sub, "rho", sp), f"{sp}.rho")
        if not 0 <= rho < 1:
            raise ConfigError(f"rho must lie in [0, 1), got {rho}", f"{sp}.rho")
        return ModelDescriptor("toeplitz", rho=rho, seed=seed, field=fld)
    sub, sp = obj["spectrum"], f"{path}.spectrum"
    _check_keys(sub, {"eigenvalues", "multiplicity_fractions"}, sp)
    eigs = _number_list(_require(sub, "eigenvalues", sp), f"{sp}.eigenvalues")
    fracs = _number_list(_require(sub, "multiplicity_fractions", sp), f"{sp}.multiplicity_fractions")
    if len(eigs) != len(fracs):
        raise ConfigError("must have as many entries as eigenvalues", f"{sp}.multiplicity_fractions")
    if any(e <= 0 for e in eigs):
        raise ConfigError("eigenvalues must be positive", f"{sp}.eigenvalues")
    if any(b <= a for a, b in zip(eigs, eigs[1:])):
        raise ConfigError("eigenvalues must be strictly ascending", f"{sp}.eigenvalues")
    if any(f <= 0 for f in fracs) or abs(sum(fracs) - 1) > 1e-9:
        raise ConfigError("fractions must be positive and sum to 1", f"{sp}.multiplicity_fractions")
    return ModelDescriptor("spectrum", eigenvalues=eigs, fractions=fracs, seed=seed, field=fld)


def parse_config(obj: Any) -> ExperimentConfig:
    """Validate a decoded JSON document; errors name the offending field."""
    _check_keys(obj, _TOP_KEYS, "")
    a = _parse_model(_require(obj, "model_a", ""), "model_a")
    b = _parse_model(_require(obj, "model_b", ""), "model_b")

    raw = _require(obj, "ratios", "")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("expected a non-empty list of [N1/M, N2/M] pairs", "ratios")
    ratios = []
    for i, pair in enumerate(raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError("expected a pair [N1/M, N2/M]", f"ratios[{i}]")
        r = tuple(_number(v, f"ratios[{i}][{j}]") for j, v in enumerate(pair))
        if min(r) <= 0:
            raise ConfigError("ratios must be positive", f"ratios[{i}]")
        ratios.append(r)

    raw = _require(obj, "dims", "")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("expected a non-empty list of dimensions", "dims")
    dims = tuple(_check_int(v, f"dims[{i}]", minimum=1) for i, v in enumerate(raw))

    raw = _require(obj, "metrics", "")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("expected a non-empty list of metrics", "metrics")
    for i, m in enumerate(raw):
        if m not in METRICS:
            raise ConfigError(f"unknown metric {m!r} (allowed: {', '.join(METRICS)})", f"metrics[{i}]")
    if len(set(raw)) != len(raw):
        raise ConfigError("duplicate metric", "metrics")

    mode = obj.get("overlap_mode", "explicit")
    if mode not in OVERLAP_MODES:
        raise ConfigError(f"must be one of {', '.join(OVERLAP_MODES)}, got {mode!r}", "overlap_mode")
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise ConfigError("expected a string", "name")

    cfg = ExperimentConfig(
        model_a=a,
        model_b=b,
        ratios=tuple(ratios),
        dims=dims,
        metrics=tuple(raw),
        trials=_check_trials(obj.get("trials", 1000), "trials"),
        seed=_check_int(obj.get("seed", 0), "seed", minimum=0),
        overlap_mode=mode,
        field=_parse_field(obj.get("field", "complex"), "field"),
        name=name,
    )
    _check_cases(cfg)
    return cfg


def _check_cases(cfg: ExperimentConfig):
    fa = cfg.model_a.field or cfg.field
    fb = cfg.model_b.field or cfg.field
    if fa != fb:
        raise ConfigError(f"both models must use the same field ({fa} vs {fb})", "model_b.field")
    for m in cfg.dims:
        for i, ratio in enumerate(cfg.ratios):
            for j, r in enumerate(ratio):
                n = r * m
                if abs(n - round(n)) > _INT_TOL * max(1.0, n):
                    raise ConfigError(f"N{j + 1} = {r} * {m} = {n} is not an integer", f"ratios[{i}][{j}]")
                if round(n) == m:
                    raise ConfigError(f"N{j + 1} equals M = {m}", f"ratios[{i}][{j}]")
                if round(n) < 1:
                    raise ConfigError(f"N{j + 1} must be at least 1", f"ratios[{i}][{j}]")
        for key, desc in (("model_a", cfg.model_a), ("model_b", cfg.model_b)):
            if desc.kind == "spectrum":
                try:
                    multiplicities_from_fractions(desc.fractions, m)
                except (CovDistError, ValueError) as exc:
                    raise ConfigError(f"at M = {m}: {exc}", f"{key}.spectrum.multiplicity_fractions") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", str(path)) from exc
    return parse_config(obj)
