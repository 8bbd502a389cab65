"""Real dilogarithm and the continued function used by the alpha closed form."""

import math

import numpy as np
from scipy.special import spence

from .errors import DomainError, NegativeArgument

PI2_6 = math.pi**2 / 6


def li2(x):
    """Real dilogarithm ``Li2(x) = -int_0^x log|1 - y| / y dy`` for ``x <= 1``.

    Backed by :func:`scipy.special.spence` (``Li2(x) = spence(1 - x)``), which
    is accurate to a few ulp on the whole half-line.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise DomainError("li2 is only defined here for real x <= 1; use phi2 above 1")
    out = spence(1.0 - arr)
    return float(out) if out.ndim == 0 else out


def phi2(x):
    """``Li2(x)`` below 1, ``pi^2/3 - log(x)^2 / 2 - Li2(1/x)`` from 1 upwards.

    This is the real part of ``Li2`` analytically continued past the branch
    point.  It is continuous on ``[0, inf)`` with derivative
    ``-log|1 - x| / x``: increasing up to its maximum ``pi^2/4`` at ``x = 2``
    and decreasing beyond.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise NegativeArgument("phi2 requires x >= 0")
    below = arr < 1.0
    safe = np.where(below, 1.0, arr)
    out = np.where(
        below,
        spence(1.0 - np.where(below, arr, 0.0)),
        2 * PI2_6 - 0.5 * np.log(safe) ** 2 - spence(1.0 - 1.0 / safe),
    )
    return float(out) if out.ndim == 0 else out
