"""Corrected estimators of ``(1/p) sum f(lambda_i(C1^{-1} C2))``.

Four closed forms (``t``, ``log t``, ``log(1 + s t)``, ``log^2 t``), their
known-``C1`` limits, the ``c2 > 1`` variant for ``log(1 + s t)``, the generic
contour-integral estimator and the classical plug-in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .dilog import li2_array
from .errors import (
    BracketFailure,
    ContourThroughPole,
    DomainError,
    NonPositiveEigenvalue,
)
from .spectral import (
    POLE_GUARD,
    SpectralModel,
    _coefficients,
    _m_pos,
    eta_points,
    phi_over_psi,
    support_points,
)

__all__ = [
    "Kind",
    "Method",
    "FunctionalSpec",
    "EstimateReport",
    "ContourConfig",
    "est_identity",
    "est_log",
    "find_kappa0",
    "est_log1p",
    "est_log1p_c2gt1",
    "est_log2_exact",
    "est_log2_approx",
    "est_contour",
    "classical_plugin",
    "estimate",
]

_EPS = np.finfo(float).eps


class Kind(str, Enum):
    IDENTITY = "identity"
    LOG = "log"
    LOG1P = "log1p"
    LOG_SQUARED = "log_squared"
    CUSTOM = "custom"


class Method(str, Enum):
    CLOSED_FORM = "ClosedForm"
    CLOSED_FORM_KNOWN_C1 = "ClosedFormKnownC1"
    EXACT_DILOG = "ExactDilog"
    LARGE_P_APPROX = "LargePApprox"
    CONTOUR = "Contour"
    PLUG_IN = "PlugIn"


@dataclass(frozen=True, slots=True)
class FunctionalSpec:
    """The function ``f`` whose spectral average is estimated."""

    kind: Kind
    s: float | None = None
    callback: Callable | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.LOG1P:
            if self.s is None or not (float(self.s) > 0.0) or not math.isfinite(self.s):
                raise DomainError("log1p needs a finite s > 0")
            object.__setattr__(self, "s", float(self.s))
        elif self.s is not None:
            raise DomainError("s is only meaningful for log1p")
        if self.kind is Kind.CUSTOM and not callable(self.callback):
            raise DomainError("custom functional needs a callable")

    @classmethod
    def identity(cls) -> FunctionalSpec:
        return cls(Kind.IDENTITY)

    @classmethod
    def log(cls) -> FunctionalSpec:
        return cls(Kind.LOG)

    @classmethod
    def log1p(cls, s: float) -> FunctionalSpec:
        return cls(Kind.LOG1P, s=s)

    @classmethod
    def log_squared(cls) -> FunctionalSpec:
        return cls(Kind.LOG_SQUARED)

    @classmethod
    def custom(cls, f: Callable) -> FunctionalSpec:
        return cls(Kind.CUSTOM, callback=f)

    @property
    def is_logarithmic(self) -> bool:
        return self.kind in (Kind.LOG, Kind.LOG_SQUARED)

    def on_reals(self, t: NDArray[np.float64]) -> NDArray[np.float64]:
        """Plain evaluation on a real spectrum."""
        t = np.asarray(t, dtype=float)
        if self.kind is Kind.IDENTITY:
            return t
        if self.kind is Kind.LOG1P:
            return np.log1p(self.s * t)
        if self.kind is Kind.CUSTOM:
            return np.real(_call_vectorized(self.callback, t.astype(complex)))
        if np.any(t <= 0.0):
            raise NonPositiveEigenvalue("logarithmic functional needs positive eigenvalues")
        log = np.log(t)
        return log if self.kind is Kind.LOG else log**2


@dataclass(frozen=True, slots=True)
class EstimateReport:
    value: float
    method: Method
    kappa0: float | None = None
    warnings: tuple[str, ...] = ()
    validity: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if not self.validity and not self.warnings:
            raise ValueError("an invalid report must carry a warning")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method.value,
            "kappa0": self.kappa0,
            "warnings": list(self.warnings),
            "validity": self.validity,
        }


@dataclass(frozen=True, slots=True)
class ContourConfig:
    """Quadrature contour around the support.

    The contour crosses the real axis at ``left_margin * zeta_1`` and
    ``right_margin * eta_p``.  ``shape="ellipse"`` is an ellipse in ``z``
    with height/width ratio ``aspect``; ``shape="log-ellipse"`` is the image
    under ``exp`` of an ellipse drawn in ``log z`` (same crossings), which
    resolves spectra spread over several decades with far fewer nodes.
    """

    points: int = 2048
    left_margin: float = 0.5
    right_margin: float = 2.0
    aspect: float = 0.5
    shape: str = "log-ellipse"

    def __post_init__(self) -> None:
        if self.points < 64 or self.points % 2:
            raise DomainError("contour needs an even number of at least 64 points")
        if not (0.0 < self.left_margin < 1.0):
            raise DomainError("left_margin must lie in (0, 1) to keep the left crossing positive")
        if not (self.right_margin > 1.0):
            raise DomainError("right_margin must exceed 1")
        if not (self.aspect > 0.0):
            raise DomainError("aspect must be positive")
        if self.shape not in ("ellipse", "log-ellipse"):
            raise DomainError("shape must be 'ellipse' or 'log-ellipse'")


# Helpers --------------------------------------------------------------------


def _call_vectorized(f: Callable, w: NDArray[np.complex128]) -> NDArray[np.complex128]:
    try:
        out = np.asarray(f(w), dtype=complex)
        if out.shape != w.shape:
            out = np.broadcast_to(out, w.shape).copy()
        return out
    except (TypeError, ValueError):
        return np.asarray([complex(f(complex(v))) for v in w.reshape(-1)]).reshape(w.shape)


def _require_c2_below_one(model: SpectralModel, what: str) -> None:
    if model.c2 >= 1.0:
        raise DomainError(f"{what} requires c2 < 1 (got c2 = {model.c2:.6g})")


def _require_positive(model: SpectralModel) -> None:
    if model.lam[0] <= 0.0:
        raise NonPositiveEigenvalue("logarithmic functional needs positive eigenvalues")


def _ratios(model: SpectralModel, c1_known: bool) -> tuple[float, float]:
    if model.c1 == 0.0 and not c1_known:
        raise DomainError("model has a known C1 (n1 infinite); use the c1_known variant")
    return (0.0 if c1_known else model.c1), model.c2


def _closed_tag(c1_known: bool) -> Method:
    return Method.CLOSED_FORM_KNOWN_C1 if c1_known else Method.CLOSED_FORM


def _xlogx_ratio(c: float) -> float:
    """(1 - c)/c * log(1 - c), continuous at c = 0 where it equals -1."""
    if c == 0.0:
        return -1.0
    return (1.0 - c) / c * math.log1p(-c)


# Closed forms ----------------------------------------------------------------


def est_identity(model: SpectralModel, *, c1_known: bool = False) -> EstimateReport:
    """Corrected mean eigenvalue ``(1 - c1) mean(lambda)``."""
    c1, _ = _ratios(model, c1_known)
    return EstimateReport((1.0 - c1) * float(np.mean(model.lam)), _closed_tag(c1_known))


def est_log(model: SpectralModel, *, c1_known: bool = False) -> EstimateReport:
    """Corrected mean log-eigenvalue."""
    _require_c2_below_one(model, "log estimator")
    _require_positive(model)
    c1, c2 = _ratios(model, c1_known)
    mean_log = float(np.mean(np.log(model.lam)))
    return EstimateReport(
        mean_log - _xlogx_ratio(c1) + _xlogx_ratio(c2), _closed_tag(c1_known)
    )


def _psi_plus_s_phi(model: SpectralModel, x: float, s: float, c1_known: bool) -> float:
    c1, c2, b0, a0 = _coefficients(model, c1_known)
    xm = x * float(_m_pos(model, np.asarray(x)))
    return a0 - c2 * xm + s * x * (b0 + c1 * xm)


def find_kappa0(model: SpectralModel, s: float, *, c1_known: bool = False) -> float:
    """Negative root of ``1 + s phi(x)/psi(x)``, bracketed in ``(-1/(s(1-c1)), 0)``.

    Bisection on ``psi + s phi``, which has the same root there and no pole
    on the negative axis.  The bracket is shrunk to relative width of a few
    ulps.
    """
    _require_c2_below_one(model, "kappa0")
    if not (s > 0.0 and math.isfinite(s)):
        raise DomainError("s must be positive and finite")
    c1, _ = _ratios(model, c1_known)
    lo, hi = -1.0 / (s * (1.0 - c1)), 0.0
    g_lo = _psi_plus_s_phi(model, lo, s, c1_known)
    g_hi = _psi_plus_s_phi(model, hi, s, c1_known)
    if not (g_lo < 0.0 < g_hi):
        raise BracketFailure(f"no sign change for kappa0 (g(lo)={g_lo!r}, g(0)={g_hi!r})")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _psi_plus_s_phi(model, mid, s, c1_known) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2.0 * _EPS * abs(lo):
            break
    return 0.5 * (lo + hi)


def est_log1p(model: SpectralModel, s: float, *, c1_known: bool = False) -> EstimateReport:
    """Corrected mean of ``log(1 + s lambda)`` for ``c2 < 1``."""
    _require_c2_below_one(model, "log1p estimator")
    c1, c2 = _ratios(model, c1_known)
    kappa0 = find_kappa0(model, s, c1_known=c1_known)
    tail = float(np.mean(np.log1p(-model.lam / kappa0)))
    if c1_known:
        v = s * kappa0  # in (-1, 0)
        value = (1.0 + v + math.log1p(-(1.0 + v))) / c2 + tail
    else:
        u = (1.0 - c1) * s * kappa0  # in (-1, 0)
        k = (c1 + c2 - c1 * c2) / (c1 * c2)
        denom = (1.0 - c1) * c2 - c1 * u
        # log((c1+c2-c1c2)/((1-c1)(c2 - s c1 kappa0))) written as log1p of its excess
        value = k * math.log1p(c1 * (1.0 + u) / denom) + math.log1p(-(1.0 + u)) / c2 + tail
    return EstimateReport(value, _closed_tag(c1_known), kappa0=kappa0)


def _zeta_left(model: SpectralModel) -> float:
    """Largest root of psi below the smallest positive eigenvalue (c2 > 1)."""
    if model.n_zero:
        return 0.0
    c2 = model.c2
    lo, hi = -c2 * model.lam_max, 0.0
    psi_at = lambda x: (1.0 - c2) - c2 * x * float(_m_pos(model, np.asarray(x)))  # noqa: E731
    if not (psi_at(lo) > 0.0 > psi_at(hi)):
        raise BracketFailure("psi root below the spectrum is not bracketed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if psi_at(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2.0 * _EPS * max(abs(lo), abs(hi), 1e-300):
            break
    return 0.5 * (lo + hi)


def _kappa0_scan(model: SpectralModel, s: float, grid: int = 2048) -> float:
    """Smallest real root of ``1 + s phi/psi`` left of the first positive eigenvalue."""
    c1 = model.c1
    left = -1.0 / (s * (1.0 - c1))  # 1 + s phi/psi < 0 for every x below this
    right = float(model._values[0]) * (1.0 - 1e-9)
    xs = np.concatenate((np.linspace(left, 0.0, grid // 2, endpoint=False),
                         np.linspace(0.0, right, grid // 2)))
    h = 1.0 + s * phi_over_psi(model, xs)
    idx = np.nonzero(h >= 0.0)[0]
    if idx.size == 0 or idx[0] == 0:
        raise BracketFailure("no sign change of 1 + s phi/psi left of the spectrum")
    lo, hi = float(xs[idx[0] - 1]), float(xs[idx[0]])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if 1.0 + s * phi_over_psi(model, mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2.0 * _EPS * max(abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def _c2gt1_validity(
    model: SpectralModel, s: float, equal_covariances: bool
) -> tuple[bool, list[str]]:
    c1, c2 = model.c1, model.c2
    z_left = _zeta_left(model)
    lam1 = float(model._values[0])
    probe = z_left + 0.99 * (lam1 - z_left)
    x_minus = phi_over_psi(model, probe)
    notes = [
        f"edge value x- approximated by phi/psi at x={probe:.6g} (finite-p proxy): {x_minus:.6g}"
    ]
    valid = 1.0 + s * x_minus > 0.0
    if not valid:
        notes.append(f"1 + s*x- = {1.0 + s * x_minus:.6g} <= 0: estimator not valid for this s")
    if equal_covariances:
        root = math.sqrt(c1 + c2 - c1 * c2)
        bound = (1.0 - c1) / (root - 1.0) if root > 1.0 else math.inf
        if not s < bound:
            valid = False
            notes.append(f"s = {s:.6g} violates the equal-covariance bound s < {bound:.6g}")
    return valid, notes


def est_log1p_c2gt1(
    model: SpectralModel, s: float, *, equal_covariances: bool = False
) -> EstimateReport:
    """Mean of ``log(1 + s lambda)`` when ``c2 > 1``.

    ``kappa0`` becomes the smallest real root of ``psi + s phi`` (the removable
    common zero at the origin excluded) and the logarithms take absolute
    values.  The result carries ``validity=False`` when the edge condition
    fails, instead of raising.
    """
    if model.c2 <= 1.0:
        raise DomainError("est_log1p_c2gt1 requires c2 > 1")
    if model.c1 == 0.0:
        raise DomainError("the c2 > 1 log1p estimator has no known-C1 form")
    if not (s > 0.0 and math.isfinite(s)):
        raise DomainError("s must be positive and finite")
    c1, c2 = model.c1, model.c2
    kappa0 = _kappa0_scan(model, s)
    k = (c1 + c2 - c1 * c2) / (c1 * c2)
    value = (
        k * math.log((c1 + c2 - c1 * c2) / ((1.0 - c1) * abs(c2 - s * c1 * kappa0)))
        + math.log(abs(s * kappa0 * (1.0 - c1))) / c2
        + float(np.mean(np.log(np.abs(1.0 - model.lam / kappa0))))
    )
    valid, notes = _c2gt1_validity(model, s, equal_covariances)
    return EstimateReport(value, Method.CLOSED_FORM, kappa0=kappa0,
                          warnings=tuple(notes), validity=valid)


# log^2 -----------------------------------------------------------------------


def _li2_one_minus(ratio: NDArray[np.float64]) -> NDArray[np.float64]:
    return li2_array(1.0 - ratio)


def est_log2_exact(model: SpectralModel, *, c1_known: bool = False) -> EstimateReport:
    """Corrected mean of ``log^2 lambda`` through the O(p^2) dilogarithm sum."""
    _require_c2_below_one(model, "log^2 estimator")
    _require_positive(model)
    sp = support_points(model, c1_known=c1_known)
    lam, eta, zeta = model.lam, sp.eta, sp.zeta
    p = model.p
    c1, c2 = _ratios(model, c1_known)
    tail_c2 = (1.0 - c2) / c2
    lz = _li2_one_minus(zeta[:, None] / lam[None, :]).sum()
    if c1_known:
        ll = _li2_one_minus(lam[:, None] / lam[None, :]).sum()
        log_lam = np.log(lam)
        # Limit of the eta-dependent part as eta -> lambda, written with
        # g(x) = d/dx Li2(1 - x) = log(x)/(1 - x), g(1) = -1.
        drift = (_dli2_one_minus(zeta[:, None] / lam[None, :]) * zeta[:, None]
                 - _dli2_one_minus(lam[:, None] / lam[None, :]) * lam[:, None]) / lam[None, :]
        value = (
            2.0 / p * log_lam.sum()
            + 2.0 / p * drift.sum()
            - tail_c2 * (math.log1p(-c2) ** 2 + np.sum(log_lam**2 - np.log(zeta) ** 2))
            - (2.0 * (lz - ll) - np.sum(log_lam**2)) / p
        )
        return EstimateReport(value, Method.EXACT_DILOG)
    k = (c1 + c2 - c1 * c2) / (c1 * c2)
    le = _li2_one_minus(eta[:, None] / lam[None, :]).sum()
    shift = math.log1p(-c1)
    log_lam = np.log(lam) + shift
    log_step = np.log1p(sp.eta_gap / lam)  # log(eta/lambda) without cancellation
    log2_lam = log_lam**2
    s1 = lz - le
    # The k-weighted bracket is O(c1) and k ~ 1/c1, so every piece is formed
    # from the eta - lambda gaps directly instead of as a difference of sums.
    step = sp.eta_gap / (lam * eta)  # 1/lambda_j - 1/eta_j
    cross = (_li2_diff(zeta[:, None] / lam[None, :], zeta[:, None] * step[None, :]).sum()
             + _li2_diff(eta[:, None] / eta[None, :], -eta[:, None] * step[None, :]).sum())
    value = (
        k * (np.sum(log_step * (2.0 * log_lam + log_step)) + 2.0 * cross)
        - tail_c2 * (math.log1p(-c2) ** 2 - shift**2
                     + np.sum(np.log(eta) ** 2 - np.log(zeta) ** 2))
        - (2.0 * s1 - np.sum(log2_lam)) / p
    )
    return EstimateReport(value, Method.EXACT_DILOG)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


def _li2_diff(x: NDArray[np.float64], width: NDArray[np.float64]) -> NDArray[np.float64]:
    """``Li2(1 - x) - Li2(1 - (x - width))`` without cancellation for small widths.

    Short intervals use Gauss-Legendre on the derivative ``log(t)/(1 - t)``,
    which is analytic away from ``t = 0``; long ones subtract directly.
    """
    y = x - width
    short = np.abs(width) <= 0.125 * np.minimum(x, y)
    if short.all():
        xs, ws = x.reshape(-1), width.reshape(-1)
    else:
        xs, ws = x[short], width[short]
    nodes = (xs - 0.5 * ws)[:, None] + 0.5 * ws[:, None] * _GL_NODES[None, :]
    quad = 0.5 * ws * (_dli2_one_minus(nodes) @ _GL_WEIGHTS)
    if short.all():
        return quad.reshape(x.shape)
    out = np.empty_like(x)
    out[short] = quad
    out[~short] = _li2_one_minus(x[~short]) - _li2_one_minus(y[~short])
    return out


def _dli2_one_minus(x: NDArray[np.float64]) -> NDArray[np.float64]:
    """``d/dx Li2(1 - x) = log(x)/(1 - x)``, equal to -1 at x = 1."""
    t = x - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.log1p(t) / t
    small = np.abs(t) < 1e-4
    if small.any():
        ts = t[small]
        out[small] = -(1.0 - ts / 2.0 + ts * ts / 3.0 - ts**3 / 4.0)
    return out


def _ratio_kernels(lam: NDArray[np.float64]):
    """Pairwise kernels in ``t = lambda_i/lambda_j - 1`` with stable small-t series.

    Returns ``(a, b, c)`` with ``a = (t - log1p t)/t^2``,
    ``b = ((1+t) log1p t - t)/t^2`` and ``c = log1p(t)/t``.
    """
    t = (lam[:, None] - lam[None, :]) / lam[None, :]
    small = np.abs(t) < 1e-4
    ts = np.where(small, 1.0, t)
    l1p = np.log1p(ts)
    a = np.where(small, 0.5 - t / 3.0 + t * t / 4.0 - t**3 / 5.0, (ts - l1p) / ts**2)
    b = np.where(small, 0.5 - t / 6.0 + t * t / 12.0 - t**3 / 20.0,
                 ((1.0 + ts) * l1p - ts) / ts**2)
    c = np.where(small, 1.0 - t / 2.0 + t * t / 3.0 - t**3 / 4.0, l1p / ts)
    return a, b, c


def est_log2_approx(model: SpectralModel, *, c1_known: bool = False) -> EstimateReport:
    """Large-p simplification of the log^2 estimator (quadratic forms, no dilogarithms)."""
    _require_c2_below_one(model, "log^2 estimator")
    _require_positive(model)
    sp = support_points(model, c1_known=c1_known)
    lam = model.lam
    p = model.p
    c1, c2 = _ratios(model, c1_known)
    tail_c2 = (1.0 - c2) / c2
    a, b, c = _ratio_kernels(lam)
    inv_j = 1.0 / lam[None, :]
    if c1_known:
        d_zl = sp.zeta_gap  # lambda - zeta
        log_lam = np.log(lam)
        q_mat = b * inv_j
        value = (
            np.mean(log_lam**2)
            + 2.0 / p * log_lam.sum()
            - 2.0 / p * d_zl @ q_mat.sum(axis=1)
            - 2.0 * tail_c2 * (0.5 * math.log1p(-c2) ** 2 + d_zl @ (log_lam / lam))
        )
        return EstimateReport(value, Method.LARGE_P_APPROX)
    k = (c1 + c2 - c1 * c2) / (c1 * c2)
    d_le = sp.eta_gap  # eta - lambda
    d_ze = sp.eta_gap + sp.zeta_gap  # eta - zeta
    log_shift = np.log(lam) + math.log1p(-c1)
    r = log_shift / lam
    m_mat = a * inv_j**2
    n_mat = c * inv_j
    value = (
        np.mean(log_shift**2)
        + 2.0 * k * (d_ze @ m_mat @ d_le + d_le @ r)
        - 2.0 / p * d_ze @ n_mat.sum(axis=1)
        - 2.0 * tail_c2 * (0.5 * (math.log1p(-c1) + math.log1p(-c2)) ** 2 + d_ze @ r)
    )
    return EstimateReport(value, Method.LARGE_P_APPROX)


# Contour ---------------------------------------------------------------------


def _contour_nodes(x_left: float, x_right: float, cfg: ContourConfig):
    theta = 2.0 * np.pi * np.arange(cfg.points) / cfg.points
    cos, sin = np.cos(theta), np.sin(theta)
    if cfg.shape == "ellipse":
        center = 0.5 * (x_left + x_right)
        a = 0.5 * (x_right - x_left)
        b = cfg.aspect * a
        z = center + a * cos + 1j * b * sin
        dz = -a * sin + 1j * b * cos
    else:
        lo, hi = math.log(x_left), math.log(x_right)
        center = 0.5 * (lo + hi)
        a = 0.5 * (hi - lo)
        b = min(cfg.aspect * a, 0.45 * math.pi)  # keeps Re z > 0
        w = center + a * cos + 1j * b * sin
        z = np.exp(w)
        dz = z * (-a * sin + 1j * b * cos)
    return z, dz


def _unwrapped_log(u: NDArray[np.complex128]) -> NDArray[np.complex128]:
    # Node 0 sits on the right real crossing where u > 0, seeding the phase at 0.
    return np.log(np.abs(u)) + 1j * np.unwrap(np.angle(u))


def _kappa0_for(model: SpectralModel, s: float, c1_known: bool) -> float:
    if model.c2 < 1.0:
        return find_kappa0(model, s, c1_known=c1_known)
    return _kappa0_scan(model, s)


def est_contour(
    model: SpectralModel,
    f: FunctionalSpec,
    cfg: ContourConfig | None = None,
    *,
    c1_known: bool = False,
) -> EstimateReport:
    """Trapezoidal quadrature of the contour-integral representation.

    Integrates ``f(phi/psi) (phi'/phi - psi'/psi) psi/c2 / (2 pi i)`` on a
    closed curve around every ``zeta_i``, ``lambda_i`` and ``eta_i``.  The
    logarithm of ``phi/psi`` (or ``1 + s phi/psi``) is phase unwrapped along
    the curve.  The difference with the half-density rule (every other node)
    is reported as a warning when it exceeds 1e-8.
    """
    cfg = cfg or ContourConfig()
    if f.is_logarithmic and model.c2 >= 1.0:
        raise DomainError("log and log^2 contour estimates require c2 < 1")
    if model.c2 < 1.0:
        z_left = float(support_points(model, c1_known=c1_known).zeta[0])
    else:
        z_left = float(model._values[0])
    e_right = float(eta_points(model, c1_known=c1_known)[-1])
    x_left, x_right = cfg.left_margin * z_left, cfg.right_margin * e_right
    z, dz = _contour_nodes(x_left, x_right, cfg)

    dist = np.abs(z[:, None] - model._values[None, :]).min()
    if dist < POLE_GUARD * model.lam_max:
        raise ContourThroughPole("a quadrature node lies on a sample eigenvalue")

    c1, c2, b0, a0 = _coefficients(model, c1_known)
    m = _m_pos(model, z)
    mp = _m_pos(model, z, 2)
    ph = z * (b0 + c1 * z * m)
    ps = a0 - c2 * z * m
    dph = b0 + 2.0 * c1 * z * m + c1 * z * z * mp
    dps = -c2 * (m + z * mp)
    w = ph / ps

    notes: list[str] = []
    valid = True
    kappa0 = None
    if f.kind is Kind.IDENTITY:
        fw = w
    elif f.kind is Kind.LOG:
        fw = _unwrapped_log(w)
    elif f.kind is Kind.LOG_SQUARED:
        fw = _unwrapped_log(w) ** 2
    elif f.kind is Kind.LOG1P:
        u = 1.0 + f.s * w
        if u[0].real <= 0.0 or u[cfg.points // 2].real <= 0.0:
            valid = False
            notes.append("1 + s phi/psi is not positive at a real crossing; branch cut crossed")
        fw = _unwrapped_log(u)
        kappa0 = _kappa0_for(model, f.s, c1_known)
    else:
        fw = _call_vectorized(f.callback, w)

    g = fw * (dph / ph - dps / ps) * ps / c2 * dz
    total = np.sum(g) / (1j * cfg.points)
    half = np.sum(g[::2]) / (1j * (cfg.points // 2))
    if not np.isfinite(total):
        raise ContourThroughPole("integrand is not finite on the contour")
    if abs(total.imag) > 1e-8:
        notes.append(f"imaginary residual {total.imag:.3e}")
    gap = abs(total - half)
    if gap > 1e-8:
        notes.append(f"quadrature not converged: half-rule difference {gap:.3e}")
    return EstimateReport(total.real, Method.CONTOUR, kappa0=kappa0,
                          warnings=tuple(notes), validity=valid)


# Plug-in and dispatch ----------------------------------------------------------


def classical_plugin(model: SpectralModel, f: FunctionalSpec) -> EstimateReport:
    """Uncorrected ``(1/p) sum f(lambda_i)``."""
    return EstimateReport(float(np.mean(f.on_reals(model.lam))), Method.PLUG_IN)


def estimate(
    model: SpectralModel,
    f: FunctionalSpec,
    method: str = "rmt",
    *,
    c1_known: bool = False,
    exact: bool = False,
    equal_covariances: bool = False,
    contour: ContourConfig | None = None,
) -> EstimateReport:
    """Route ``f`` to the estimator selected by ``method`` (rmt, plugin or contour).

    ``exact`` picks the dilogarithm form over the large-p form for ``log^2``.
    ``log1p`` with ``c2 > 1`` is routed to :func:`est_log1p_c2gt1`.
    """
    if method == "plugin":
        return classical_plugin(model, f)
    if method == "contour":
        return est_contour(model, f, contour, c1_known=c1_known)
    if method != "rmt":
        raise DomainError(f"unknown method {method!r}")
    if f.kind is Kind.IDENTITY:
        return est_identity(model, c1_known=c1_known)
    if f.kind is Kind.LOG:
        return est_log(model, c1_known=c1_known)
    if f.kind is Kind.LOG1P:
        if model.c2 > 1.0:
            if c1_known:
                raise DomainError("the c2 > 1 log1p estimator has no known-C1 form")
            return est_log1p_c2gt1(model, f.s, equal_covariances=equal_covariances)
        return est_log1p(model, f.s, c1_known=c1_known)
    if f.kind is Kind.LOG_SQUARED:
        if exact:
            return est_log2_exact(model, c1_known=c1_known)
        return est_log2_approx(model, c1_known=c1_known)
    return est_contour(model, f, contour, c1_known=c1_known)
