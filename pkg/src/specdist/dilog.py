"""Real dilogarithm and the logarithmic integral family built on it."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import CaseError, DomainError

__all__ = ["li2", "li2_array", "f_integral"]

_PI2_6 = math.pi**2 / 6.0
_N_TERMS = 50  # 0.5**50 / 50**2 < 1e-18
_INV_K2 = 1.0 / np.arange(1, _N_TERMS + 1, dtype=float) ** 2


def _series(x: NDArray[np.float64]) -> NDArray[np.float64]:
    # Horner form of sum_{k>=1} x^k / k^2, valid for |x| <= 1/2.
    acc = np.zeros_like(x)
    for c in _INV_K2[::-1]:
        acc = (acc + c) * x
    return acc


def _small_or_landen(u: NDArray[np.float64]) -> NDArray[np.float64]:
    """Li2 on [-1, 0.5]: direct series, or Landen's map for u < -1/2."""
    out = np.empty_like(u)
    direct = u >= -0.5
    out[direct] = _series(u[direct])
    v = u[~direct]
    # Li2(v) = -Li2(v/(v-1)) - log(1-v)^2/2, with v/(v-1) in (1/3, 1/2].
    out[~direct] = -_series(v / (v - 1.0)) - 0.5 * np.log1p(-v) ** 2
    return out


def li2_array(x: ArrayLike) -> NDArray[np.float64]:
    """Vectorized real dilogarithm for ``x <= 1``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise DomainError("li2 argument is NaN")
    if np.any(x > 1.0):
        raise DomainError("li2 is real only for x <= 1")
    flat = x.reshape(-1)
    out = np.empty_like(flat)

    low = flat < -1.0
    mid = (flat >= -1.0) & (flat <= 0.5)
    high = flat > 0.5

    out[mid] = _small_or_landen(flat[mid])

    xh = flat[high]
    one_minus = 1.0 - xh
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = np.where(one_minus > 0.0, np.log(xh) * np.log(one_minus), 0.0)
    # Reflection: Li2(x) = pi^2/6 - log(x) log(1-x) - Li2(1-x).
    out[high] = _PI2_6 - cross - _series(one_minus)

    xl = flat[low]
    # Inversion: Li2(x) = -Li2(1/x) - log(-x)^2/2 - pi^2/6.
    out[low] = -_small_or_landen(1.0 / xl) - 0.5 * np.log(-xl) ** 2 - _PI2_6
    return out.reshape(x.shape)


def li2(x: float) -> float:
    """Real dilogarithm ``-int_0^x log(1-u)/u du`` for ``x <= 1``."""
    return float(li2_array(np.asarray([x], dtype=float))[0])


def f_integral(X: float, Y: float, a: float) -> float:
    """``F(X, Y; a) = int_Y^X log(x - a)/x dx`` through its dilogarithm closed forms.

    Accepted configurations (``x - a > 0`` on the path and the path avoids 0):

    * ``X, Y >= a > 0``
    * ``X, Y > 0 > a``
    * ``X, Y > 0`` and ``a = 0``
    * ``a <= X, Y < 0``: the mirrored case, equal to
      ``int_{-Y}^{-X} log(-a - x)/x dx``.

    Anything else raises :class:`CaseError` rather than picking a branch.
    """
    X, Y, a = float(X), float(Y), float(a)
    if not all(math.isfinite(v) for v in (X, Y, a)):
        raise CaseError("f_integral arguments must be finite")
    if a > 0.0 and X >= a and Y >= a:
        return li2(a / X) - li2(a / Y) + 0.5 * (math.log(X) ** 2 - math.log(Y) ** 2)
    if a == 0.0 and X > 0.0 and Y > 0.0:
        return 0.5 * (math.log(X) ** 2 - math.log(Y) ** 2)
    if a < 0.0 and X > 0.0 and Y > 0.0 and -a <= max(X, Y):
        # Inverted form of the branch below; X/a would overflow as a -> 0-.
        return li2(a / X) - li2(a / Y) + 0.5 * (math.log(X) ** 2 - math.log(Y) ** 2)
    if a < 0.0 and ((X > 0.0 and Y > 0.0) or (a <= X < 0.0 and a <= Y < 0.0)):
        return -li2(X / a) + li2(Y / a) + math.log(X / Y) * math.log(-a)
    raise CaseError(f"no closed form for F({X!r}, {Y!r}; {a!r})")
