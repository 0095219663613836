"""Sample eigenvalues, empirical transforms and their support points.

Every estimator consumes a :class:`SpectralModel`: the ascending eigenvalues
of ``C1_hat^{-1} C2_hat`` together with the sample sizes.  The rational
functions ``phi`` and ``psi`` built from the empirical Stieltjes transform,
and their zeros (``eta`` for ``phi``, ``zeta`` for ``psi``), are exposed
here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .errors import (
    BracketFailure,
    DimensionMismatch,
    DomainError,
    NonFinite,
    NonPositiveEigenvalue,
    PoleHit,
    SingularC1,
)

__all__ = [
    "MERGE_RTOL",
    "POLE_GUARD",
    "SpectralModel",
    "SupportPoints",
    "sample_eigenvalues",
    "known_c1_eigenvalues",
    "stieltjes",
    "stieltjes_prime",
    "phi",
    "psi",
    "phi_prime",
    "psi_prime",
    "phi_over_psi",
    "eta_points",
    "support_points",
    "support_points_rank_one",
]

MERGE_RTOL = 1e-12
POLE_GUARD = 1e-13
_BISECT_MAX_ITER = 200
_BISECT_ABS = 1e-14
_POLE_OFFSET = 1e-10


@dataclass(frozen=True, slots=True)
class SpectralModel:
    """Ascending sample eigenvalues plus the two sample sizes.

    ``n1`` and ``n2`` are usually integers; non-integer values are accepted
    so that a model can be pinned to exact ratios (see :meth:`from_ratios`).
    ``n1 = inf`` describes a known first covariance (``c1 = 0``); such a
    model is only accepted by the known-C1 variants of the closed forms.
    Exact zeros in ``lam`` are allowed only when ``n2 < p``, where the second
    sample covariance is rank deficient and ``p - n2`` eigenvalues vanish.
    """

    lam: NDArray[np.float64]
    n1: float
    n2: float
    _values: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    _counts: NDArray[np.int64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lam = np.array(self.lam, dtype=float).reshape(-1)
        if lam.size == 0:
            raise DomainError("at least one eigenvalue is required")
        if not np.all(np.isfinite(lam)):
            raise NonFinite("eigenvalues must be finite")
        lam = np.sort(lam)
        p = lam.size
        n1, n2 = float(self.n1), float(self.n2)
        if np.isnan(n1) or not np.isfinite(n2):
            raise NonFinite("n1 must be a number (inf allowed) and n2 finite")
        if n1 <= p:
            raise DomainError("n1 must exceed p")
        if n2 <= 0:
            raise DomainError("n2 must be positive")
        if lam[0] < 0:
            raise NonPositiveEigenvalue("eigenvalues must be nonnegative")
        n_zero = int(np.count_nonzero(lam == 0.0))
        if n_zero and (n2 >= p or n_zero > p - n2 + 1e-9):
            raise NonPositiveEigenvalue(
                "zero eigenvalues are only admissible when n2 < p (at most p - n2 of them)"
            )
        if n_zero == p:
            raise NonPositiveEigenvalue("at least one eigenvalue must be positive")
        lam.setflags(write=False)
        values, counts = _merge(lam[n_zero:])
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n2", n2)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_counts", counts)

    @classmethod
    def known_c1(cls, lam: ArrayLike, n2: float) -> SpectralModel:
        """Eigenvalues of ``C1^{-1} C2_hat`` for an exactly known ``C1``."""
        return cls(lam, math.inf, n2)

    @classmethod
    def from_ratios(cls, lam: ArrayLike, c1: float, c2: float) -> SpectralModel:
        """Model with prescribed ratios ``p/n1`` and ``p/n2``."""
        lam = np.asarray(lam, dtype=float).reshape(-1)
        if not (0 < c1 < 1):
            raise DomainError("c1 must lie in (0, 1)")
        if c2 <= 0:
            raise DomainError("c2 must be positive")
        return cls(lam, lam.size / c1, lam.size / c2)

    @property
    def p(self) -> int:
        return int(self.lam.size)

    @property
    def c1(self) -> float:
        return self.p / self.n1

    @property
    def c2(self) -> float:
        return self.p / self.n2

    @property
    def n_zero(self) -> int:
        """Number of exact zero eigenvalues (rank deficient second sample)."""
        return self.p - int(self._counts.sum())

    @property
    def positive(self) -> NDArray[np.float64]:
        return self.lam[self.n_zero:]

    @property
    def lam_max(self) -> float:
        return float(self.lam[-1])


@dataclass(frozen=True, slots=True)
class SupportPoints:
    """Zeros of ``phi`` (eta) and of ``psi`` (zeta), index aligned with lambda.

    ``eta_gap = eta - lambda`` and ``zeta_gap = lambda - zeta`` are kept
    separately because they are computed directly by the root finder and
    remain accurate when a root sits very close to its eigenvalue.
    """

    eta: NDArray[np.float64]
    zeta: NDArray[np.float64]
    eta_gap: NDArray[np.float64]
    zeta_gap: NDArray[np.float64]


def _merge(lam: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Collapse eigenvalues closer than ``MERGE_RTOL * max`` into weighted atoms."""
    if lam.size == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    tol = MERGE_RTOL * lam[-1]
    starts = np.concatenate(([0], np.nonzero(np.diff(lam) >= tol)[0] + 1))
    counts = np.diff(np.concatenate((starts, [lam.size])))
    values = np.add.reduceat(lam, starts) / counts
    values.setflags(write=False)
    return values, counts.astype(np.int64)


def _check_finite(x: NDArray) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFinite("observation matrix contains NaN or Inf")


def sample_eigenvalues(x1: ArrayLike, x2: ArrayLike) -> SpectralModel:
    """Eigenvalues of ``C1_hat^{-1} C2_hat`` from two ``p x n`` observation matrices.

    The first sample covariance is Cholesky factored as ``L L^*`` and the
    second one is whitened to ``L^{-1} C2_hat L^{-*}``, a self-adjoint matrix
    whose spectrum is real by construction.  When ``n2 < p`` the smallest
    ``p - n2`` eigenvalues are structurally zero and are set to exactly 0.
    """
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    if x1.ndim != 2 or x2.ndim != 2:
        raise DimensionMismatch("observation matrices must be two dimensional")
    if x1.shape[0] != x2.shape[0]:
        raise DimensionMismatch(
            f"row counts differ: {x1.shape[0]} vs {x2.shape[0]}"
        )
    _check_finite(x1)
    _check_finite(x2)
    p, n1 = x1.shape
    n2 = x2.shape[1]
    if n1 <= p:
        raise DomainError("n1 must exceed p")
    if n2 < 1:
        raise DomainError("n2 must be positive")
    c1_hat = (x1 @ x1.conj().T) / n1
    try:
        chol = linalg.cholesky(c1_hat, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularC1("sample covariance of x1 is not positive definite") from exc
    y = linalg.solve_triangular(chol, x2, lower=True)
    w = (y @ y.conj().T) / n2
    lam = linalg.eigvalsh(w)
    lam = np.maximum(lam.real if np.iscomplexobj(lam) else lam, 0.0)
    if n2 < p:
        lam[: p - n2] = 0.0
    elif lam[0] <= 0.0:
        raise NonPositiveEigenvalue("whitened second covariance is numerically singular")
    return SpectralModel(lam, n1, n2)


def known_c1_eigenvalues(c1: ArrayLike, x2: ArrayLike) -> SpectralModel:
    """Eigenvalues of ``C1^{-1} C2_hat`` when the population ``C1`` is known.

    Same whitening route as :func:`sample_eigenvalues` with the exact ``C1``
    in place of its sample estimate; the model carries ``n1 = inf``.
    """
    c1 = np.asarray(c1)
    x2 = np.asarray(x2)
    if c1.ndim != 2 or c1.shape[0] != c1.shape[1] or x2.ndim != 2:
        raise DimensionMismatch("C1 must be square and x2 two dimensional")
    if c1.shape[0] != x2.shape[0]:
        raise DimensionMismatch(f"row counts differ: {c1.shape[0]} vs {x2.shape[0]}")
    _check_finite(c1)
    _check_finite(x2)
    p, n2 = x2.shape
    try:
        chol = linalg.cholesky(c1, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularC1("C1 is not positive definite") from exc
    y = linalg.solve_triangular(chol, x2, lower=True)
    lam = np.maximum(linalg.eigvalsh((y @ y.conj().T) / n2), 0.0)
    if n2 < p:
        lam[: p - n2] = 0.0
    elif lam[0] <= 0.0:
        raise NonPositiveEigenvalue("whitened second covariance is numerically singular")
    return SpectralModel.known_c1(lam, n2)


# Transforms ---------------------------------------------------------------


def _guard(model: SpectralModel, z: NDArray, include_zero: bool) -> None:
    tol = POLE_GUARD * model.lam_max
    poles = model._values
    if include_zero and model.n_zero:
        poles = np.concatenate(([0.0], poles))
    dist = np.abs(z.reshape(-1, 1) - poles.reshape(1, -1))
    if dist.size and dist.min() < tol:
        raise PoleHit("evaluation point within the pole guard of a sample eigenvalue")


def _out(z_in, value):
    return complex(value) if np.ndim(z_in) == 0 else value


def _m_pos(model: SpectralModel, z: NDArray, power: int = 1) -> NDArray:
    """(1/p) * sum over positive eigenvalues of 1/(lambda - z)**power."""
    d = model._values
    w = model._counts / model.p
    diff = d.reshape((1,) * z.ndim + (-1,)) - z[..., None]
    return np.sum(w / diff**power, axis=-1)


def stieltjes(model: SpectralModel, z: complex | ArrayLike) -> complex | NDArray:
    """Empirical Stieltjes transform ``(1/p) sum 1/(lambda_i - z)``."""
    zz = np.asarray(z, dtype=complex)
    _guard(model, zz, include_zero=True)
    out = _m_pos(model, zz)
    if model.n_zero:
        out = out - (model.n_zero / model.p) / zz
    return _out(z, out)


def stieltjes_prime(model: SpectralModel, z: complex | ArrayLike) -> complex | NDArray:
    """Derivative ``(1/p) sum 1/(lambda_i - z)^2``."""
    zz = np.asarray(z, dtype=complex)
    _guard(model, zz, include_zero=True)
    out = _m_pos(model, zz, 2)
    if model.n_zero:
        out = out + (model.n_zero / model.p) / zz**2
    return _out(z, out)


def _coefficients(model: SpectralModel, c1_known: bool) -> tuple[float, float, float, float]:
    """(c1, c2, b0, a0) with phi = z (b0 + c1 z m+) and psi = a0 - c2 z m+.

    ``m+`` sums over positive eigenvalues only, which keeps both functions
    free of a removable pole at zero when exact zero eigenvalues are present.
    """
    c1 = 0.0 if c1_known else model.c1
    c2 = model.c2
    zero_weight = model.n_zero / model.p
    b0 = 1.0 - c1 * zero_weight
    a0 = (model.n2 - (model.p - model.n_zero)) / model.n2
    return c1, c2, b0, a0


def _transforms(model: SpectralModel, z: NDArray, c1_known: bool, derivatives: bool):
    _guard(model, z, include_zero=False)
    c1, c2, b0, a0 = _coefficients(model, c1_known)
    m = _m_pos(model, z)
    ph = z * (b0 + c1 * z * m)
    ps = a0 - c2 * z * m
    if not derivatives:
        return ph, ps
    mp = _m_pos(model, z, 2)
    dph = b0 + 2.0 * c1 * z * m + c1 * z * z * mp
    dps = -c2 * (m + z * mp)
    return ph, ps, dph, dps


def phi(model: SpectralModel, z: complex | ArrayLike, *, c1_known: bool = False):
    """``z + c1 z^2 m(z)``; with ``c1_known`` the first ratio is taken as 0."""
    zz = np.asarray(z, dtype=complex)
    return _out(z, _transforms(model, zz, c1_known, False)[0])


def psi(model: SpectralModel, z: complex | ArrayLike, *, c1_known: bool = False):
    """``1 - c2 - c2 z m(z)``."""
    zz = np.asarray(z, dtype=complex)
    return _out(z, _transforms(model, zz, c1_known, False)[1])


def phi_prime(model: SpectralModel, z: complex | ArrayLike, *, c1_known: bool = False):
    """``1 + 2 c1 z m + c1 z^2 m'``."""
    zz = np.asarray(z, dtype=complex)
    return _out(z, _transforms(model, zz, c1_known, True)[2])


def psi_prime(model: SpectralModel, z: complex | ArrayLike, *, c1_known: bool = False):
    """``-c2 (m + z m')``."""
    zz = np.asarray(z, dtype=complex)
    return _out(z, _transforms(model, zz, c1_known, True)[3])


def phi_over_psi(model: SpectralModel, x: float | ArrayLike, *, c1_known: bool = False):
    """Ratio ``phi/psi`` on real points, with the removable 0/0 at the origin resolved."""
    xx = np.asarray(x, dtype=float)
    _guard(model, xx, include_zero=False)
    c1, c2, b0, a0 = _coefficients(model, c1_known)
    m = _m_pos(model, xx)
    if a0 == 0.0:
        out = (b0 + c1 * xx * m) / (-c2 * m)
    else:
        out = xx * (b0 + c1 * xx * m) / (a0 - c2 * xx * m)
    return float(out) if np.ndim(x) == 0 else out


# Support points -------------------------------------------------------------


def _secular_roots(
    values: NDArray[np.float64],
    weights: NDArray[np.float64],
    target: float,
    gaps: NDArray[np.float64],
    right: bool,
    abs_tol: float,
) -> NDArray[np.float64]:
    """Solve ``sum_j w_j d_j/(d_j - x) - 1 = target`` next to every atom.

    With ``right`` the root is sought at ``x = d_k + delta`` with
    ``delta`` in ``(0, gaps[k])``, otherwise at ``x = d_k - delta``.  Working
    in the offset ``delta`` keeps full relative precision when a root hugs its
    pole.  All intervals are bisected simultaneously.
    """
    sign = 1.0 if right else -1.0
    wd = weights * values
    dd = values[None, :] - values[:, None]  # dd[k, j] = d_j - d_k

    def g(delta: NDArray[np.float64]) -> NDArray[np.float64]:
        val = (wd[None, :] / (dd - sign * delta[:, None])).sum(axis=1) - 1.0 - target
        return sign * val  # increasing in delta, -inf at the pole

    with np.errstate(divide="ignore", invalid="ignore"):
        return _bisect_offsets(g, gaps, abs_tol)


def _bisect_offsets(g, gaps: NDArray[np.float64], abs_tol: float) -> NDArray[np.float64]:
    """Vectorized bisection of an increasing ``g`` on every ``(0, gaps[k])``."""
    lo = _POLE_OFFSET * gaps
    hi = gaps * (1.0 - _POLE_OFFSET)
    glo, ghi = g(lo), g(hi)
    if not (np.all(np.isfinite(glo)) and np.all(np.isfinite(ghi))):
        raise BracketFailure("secular function is not finite at the bracket ends")
    # A root inside the offset band: the pole side limit is -inf (left end) or
    # +inf (interior right end), so the full open interval still brackets it.
    lo = np.where(glo >= 0.0, 0.0, lo)
    hi = np.where(ghi <= 0.0, gaps, hi)
    eps = np.finfo(float).eps
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        neg = gm < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        # Relative convergence on the offset is never looser than abs_tol.
        if ((hi - lo) <= np.maximum(4.0 * eps * lo, abs_tol)).all():
            break
    return 0.5 * (lo + hi)


def _expand(
    values: NDArray[np.float64],
    counts: NDArray[np.int64],
    delta: NDArray[np.float64],
    lam: NDArray[np.float64],
    root_last: bool,
) -> NDArray[np.float64]:
    """Per-eigenvalue gaps ``|root - lambda_i|`` from per-atom offsets.

    A cluster of multiplicity k pins k - 1 roots on its members (gap 0); the
    remaining root belongs to the last member for eta and the first member
    for zeta, and its gap is corrected from the cluster value to that member.
    """
    gap = np.zeros(lam.size)
    ends = np.cumsum(counts)
    pos = ends - 1 if root_last else ends - counts
    drift = values - lam[pos]
    gap[pos] = delta + drift if root_last else delta - drift
    return gap


def _eta_gap(model: SpectralModel, c1: float) -> NDArray[np.float64]:
    values, counts, lam = model._values, model._counts, model.positive
    if c1 == 0.0:
        return np.zeros(lam.size)
    weights = counts / model.p
    upper_gap = c1 / (1.0 - c1) * float(np.sum(weights * values))
    gaps = np.concatenate((np.diff(values), [upper_gap]))
    delta = _secular_roots(values, weights, -1.0 / c1, gaps, True, _abs_tol(model))
    return _expand(values, counts, delta, lam, root_last=True)


def _zeta_gap(model: SpectralModel) -> NDArray[np.float64]:
    values, counts, lam = model._values, model._counts, model.positive
    weights = counts / model.p
    c2 = model.c2
    gaps = np.concatenate(([values[0]], np.diff(values)))
    delta = _secular_roots(values, weights, (1.0 - c2) / c2, gaps, False, _abs_tol(model))
    return _expand(values, counts, delta, lam, root_last=False)


def _abs_tol(model: SpectralModel) -> float:
    # Floor far below the 1e-14 * lambda_max width; the offset is bisected to
    # relative precision so roots hugging a pole stay accurate.
    return _BISECT_ABS * model.lam_max * np.finfo(float).eps


def eta_points(model: SpectralModel, *, c1_known: bool = False) -> NDArray[np.float64]:
    """Zeros of ``phi`` other than the origin, one per positive eigenvalue.

    Available for any ``c2``; when ``c1_known`` the zeros coincide with the
    eigenvalues themselves.
    """
    c1 = 0.0 if c1_known else model.c1
    return model.positive + _eta_gap(model, c1)


def support_points(model: SpectralModel, *, c1_known: bool = False) -> SupportPoints:
    """Interlaced zeros ``zeta_i < lambda_i < eta_i`` of ``psi`` and ``phi``.

    Each root is found by bisection of the monotone map ``x -> x m(x)`` on its
    interlacing interval.  Clusters of (numerically) repeated eigenvalues are
    merged; each cluster of multiplicity ``k`` contributes ``k - 1`` roots
    equal to the cluster value.
    """
    if model.c2 >= 1.0 or model.n_zero:
        raise DomainError("zeta points require c2 < 1")
    lam = model.lam
    eta_gap = _eta_gap(model, 0.0 if c1_known else model.c1)
    zeta_gap = _zeta_gap(model)
    arrays = (lam + eta_gap, lam - zeta_gap, eta_gap, zeta_gap)
    for a in arrays:
        a.setflags(write=False)
    return SupportPoints(*arrays)


def support_points_rank_one(model: SpectralModel) -> SupportPoints:
    """Independent route: eigenvalues of rank-one updates of ``diag(lambda)``.

    ``eta`` are the eigenvalues of ``diag(lambda) - s s^T/(p - n1)`` and
    ``zeta`` those of ``diag(lambda) - s s^T/n2`` with ``s = sqrt(lambda)``.
    Used to cross-check :func:`support_points`.
    """
    if model.c2 >= 1.0 or model.n_zero:
        raise DomainError("zeta points require c2 < 1")
    lam = model.lam
    root = np.sqrt(lam)
    outer = np.outer(root, root)
    eta = linalg.eigvalsh(np.diag(lam) - outer / (model.p - model.n1))
    zeta = linalg.eigvalsh(np.diag(lam) - outer / model.n2)
    return SupportPoints(eta=eta, zeta=zeta, eta_gap=eta - lam, zeta_gap=lam - zeta)
