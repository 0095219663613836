"""Invariant suites shared by ``specdist verify`` and the test-suite.

Each suite draws seeded random spectral models, evaluates an identity or an
oracle comparison on every one of them and keeps the worst deviation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import integrate

from .dilog import f_integral, li2, li2_array
from .errors import SpecDistError
from .estimators import (
    ContourConfig,
    FunctionalSpec,
    est_contour,
    est_identity,
    est_log,
    est_log1p,
    est_log2_approx,
    est_log2_exact,
    find_kappa0,
)
from .spectral import (
    SpectralModel,
    phi,
    phi_over_psi,
    phi_prime,
    psi,
    psi_prime,
    stieltjes,
    stieltjes_prime,
    support_points,
    support_points_rank_one,
)

__all__ = [
    "CheckResult",
    "SuiteReport",
    "SUITES",
    "DEFAULT_MODELS",
    "random_model",
    "duplicate_model",
    "spectral_suite",
    "dilog_suite",
    "oracle_suite",
    "limits_suite",
    "run_suites",
]


@dataclass(frozen=True, slots=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    cases: int
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name, "passed": self.passed, "worst": self.worst,
            "tolerance": self.tolerance, "cases": self.cases, "detail": self.detail,
        }


@dataclass(frozen=True, slots=True)
class SuiteReport:
    suite: str
    seed: int
    models: int
    checks: tuple[CheckResult, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [f"{self.suite}/{c.name}" for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "suite": self.suite, "seed": self.seed, "models": self.models,
            "passed": self.passed, "checks": [c.to_dict() for c in self.checks],
        }


class _Tracker:
    """Running worst-case for one named check."""

    def __init__(self, name: str, tol: float) -> None:
        self.name, self.tol = name, tol
        self.worst = 0.0
        self.cases = 0
        self.detail = ""
        self.errors = 0

    def add(self, err: float, where: str = "") -> None:
        self.cases += 1
        err = float(err)
        if not math.isfinite(err):
            err = math.inf
        if err > self.worst:
            self.worst = err
            self.detail = where

    def add_batch(self, errs, where: str = "") -> None:
        """One case per element; ``where`` is tagged with the worst index."""
        errs = np.atleast_1d(np.asarray(errs, dtype=float))
        errs = np.where(np.isfinite(errs), errs, np.inf)
        k = int(np.argmax(errs))
        self.cases += errs.size - 1
        self.add(errs[k], f"{where} [{k}]")

    def fail(self, where: str) -> None:
        self.cases += 1
        self.errors += 1
        self.worst = math.inf
        self.detail = where

    def result(self) -> CheckResult:
        ok = self.errors == 0 and self.worst <= self.tol
        return CheckResult(self.name, ok, self.worst, self.tol, self.cases,
                           "" if ok else self.detail)


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


# Model generators ------------------------------------------------------------


def random_model(
    rng: np.random.Generator,
    p_max: int = 32,
    c_range: tuple[float, float] = (0.05, 0.9),
    spread: tuple[float, float] = (0.1, 10.0),
    duplicates: bool = False,
) -> SpectralModel:
    """Log-uniform eigenvalues with ratios drawn uniformly in ``c_range``."""
    p = int(rng.integers(1, p_max + 1))
    lam = np.exp(rng.uniform(math.log(spread[0]), math.log(spread[1]), p))
    if duplicates and p > 1:
        k = int(rng.integers(1, p))
        lam[:k] = lam[p - 1]  # a cluster of k + 1 equal values
    c1, c2 = rng.uniform(*c_range, size=2)
    return SpectralModel.from_ratios(lam, float(c1), float(c2))


def duplicate_model() -> SpectralModel:
    """Fixed degenerate fixture: a triple and a double eigenvalue."""
    return SpectralModel(np.array([0.5, 1.0, 1.0, 1.0, 2.0, 3.0, 3.0]), 20, 15)


def _complex_points(rng: np.random.Generator, model: SpectralModel, n: int) -> np.ndarray:
    scale = model.lam_max
    x = rng.uniform(-0.5 * scale, 2.0 * scale, n)
    y = rng.uniform(0.1, 2.0 * scale + 0.1, n) * rng.choice([-1.0, 1.0], n)
    return x + 1j * y


# Suites ------------------------------------------------------------------------


def _spectral_checks(model: SpectralModel, rng: np.random.Generator, t: dict, tag: str) -> None:
    lam, p, c1, c2 = model.lam, model.p, model.c1, model.c2
    sp = support_points(model)
    eta, zeta = sp.eta, sp.zeta

    chain = np.empty(3 * p)
    chain[0::3], chain[1::3], chain[2::3] = zeta, lam, eta
    distinct = np.concatenate(([True], np.diff(lam) > 0))
    # Interlacing is strict between distinct eigenvalues; merged clusters pin
    # their extra roots on the cluster members.
    strict = np.all(zeta > 0) and np.all(np.diff(chain) >= 0)
    strict &= bool(np.all(sp.eta_gap[-1:] > 0) and np.all(sp.zeta_gap[distinct] > 0))
    t["interlacing"].add(0.0 if strict else math.inf, tag)

    t["eta_product"].add(abs(math.expm1(np.sum(np.log1p(sp.eta_gap / lam)) + math.log1p(-c1))), tag)
    t["zeta_product"].add(abs(math.expm1(np.sum(np.log1p(-sp.zeta_gap / lam)) - math.log1p(-c2))), tag)
    t["zeta_trace"].add(abs(np.sum(sp.zeta_gap) - c2 / p * np.sum(lam)) / np.sum(lam), tag)

    r1 = support_points_rank_one(model)
    t["rank_one_agreement"].add(
        max(np.max(np.abs(r1.eta - eta)), np.max(np.abs(r1.zeta - zeta))) / model.lam_max, tag)

    z = _complex_points(rng, model, 100)
    h = 1e-6 * model.lam_max
    fd = (stieltjes(model, z + h) - stieltjes(model, z - h)) / (2 * h)
    t["stieltjes_finite_difference"].add(_rel(stieltjes_prime(model, z), fd), tag)
    fd_phi = (phi(model, z + h) - phi(model, z - h)) / (2 * h)
    fd_psi = (psi(model, z + h) - psi(model, z - h)) / (2 * h)
    t["transform_derivatives"].add(
        max(_rel(phi_prime(model, z), fd_phi), _rel(psi_prime(model, z), fd_psi)), tag)

    z = z[:50]
    ph, ps = phi(model, z), psi(model, z)
    lhs = (phi_prime(model, z) / ph - psi_prime(model, z) / ps) * ps / c2
    k = (c1 + c2 - c1 * c2) / (c1 * c2)
    inv_lam = (1.0 / (z[:, None] - lam[None, :])).sum(axis=1)
    inv_eta = (1.0 / (z[:, None] - eta[None, :])).sum(axis=1)
    rhs = (1.0 / p - k) * inv_lam + (1.0 - c2) / c2 / z + k * inv_eta
    t["residue_expansion"].add(_rel(lhs, rhs), tag)

    z = z[:20]
    ratio_eta = np.prod((z[:, None] - eta[None, :]) / (z[:, None] - lam[None, :]), axis=1)
    ratio_zeta = np.prod((z[:, None] - zeta[None, :]) / (z[:, None] - lam[None, :]), axis=1)
    t["product_forms"].add(
        max(_rel(phi(model, z), (1.0 - c1) * z * ratio_eta), _rel(psi(model, z), ratio_zeta)), tag)

    right = eta[-1] * (1.0 + np.geomspace(1e-6, 10.0, 200))
    left = zeta[0] * np.linspace(1e-3, 1.0 - 1e-6, 200)
    mono = np.all(np.diff(phi_over_psi(model, right)) > 0) and np.all(
        np.diff(phi_over_psi(model, left)) > 0)
    t["ratio_monotonicity"].add(0.0 if mono else math.inf, tag)

    below = float(model._values[0]) * np.linspace(-2.0, 0.999, 64)
    gaps = np.concatenate((below, 0.5 * (model._values[:-1] + model._values[1:]),
                           [2.0 * model.lam_max]))
    signs = np.all(np.real(phi_prime(model, below)) > 0) and np.all(
        np.real(psi_prime(model, gaps)) < 0)
    t["derivative_signs"].add(0.0 if signs else math.inf, tag)


def spectral_suite(models: int = 1000, seed: int = 0) -> SuiteReport:
    """Interlacing, product/trace identities, expansion, finite differences, monotonicity."""
    rng = np.random.default_rng([seed, 1])
    spec = {
        "interlacing": 0.0, "eta_product": 1e-10, "zeta_product": 1e-10,
        "zeta_trace": 1e-10, "rank_one_agreement": 1e-10,
        "stieltjes_finite_difference": 1e-5, "transform_derivatives": 1e-6,
        "residue_expansion": 1e-9, "product_forms": 1e-8,
        "ratio_monotonicity": 0.0, "derivative_signs": 0.0,
    }
    t = {k: _Tracker(k, v) for k, v in spec.items()}
    fixtures = [("duplicate fixture", duplicate_model())]
    for i in range(max(models - 1, 0)):
        fixtures.append((f"model {i}", random_model(rng, duplicates=(i % 10 == 9))))
    for tag, model in fixtures:
        try:
            _spectral_checks(model, rng, t, tag)
        except (SpecDistError, ArithmeticError, ValueError) as exc:
            for tr in t.values():
                tr.fail(f"{tag}: {type(exc).__name__}: {exc}")
    return SuiteReport("spectral", seed, len(fixtures), tuple(tr.result() for tr in t.values()))


def _quad(fun: Callable[[float], float], lo: float, hi: float) -> float:
    with warnings.catch_warnings():
        # quad flags roundoff when the 1e-13 target is already met to machine precision
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fun, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def _f_integral_triples(rng: np.random.Generator, n: int) -> Iterable[tuple[float, float, float]]:
    for i in range(n):
        case = i % 4
        if case == 0:  # X, Y >= a > 0
            a = math.exp(rng.uniform(-3, 2))
            X, Y = a * np.exp(rng.uniform(0, 3, 2))
        elif case == 1:  # X, Y > 0 > a
            a = -math.exp(rng.uniform(-3, 2))
            X, Y = np.exp(rng.uniform(-3, 3, 2))
        elif case == 2:  # a <= X, Y < 0
            a = -math.exp(rng.uniform(-1, 3))
            X, Y = a * np.exp(-rng.uniform(0, 3, 2))
        else:  # a = 0
            a = 0.0
            X, Y = np.exp(rng.uniform(-3, 3, 2))
        yield float(X), float(Y), float(a)


def dilog_suite(points: int = 100, seed: int = 0, triples: int = 200) -> SuiteReport:
    """Inversion, reflection and Landen identities, second-order expansion, F versus quadrature."""
    rng = np.random.default_rng([seed, 2])
    t = {
        "special_values": _Tracker("special_values", 1e-13),
        "inversion": _Tracker("inversion", 1e-12),
        "reflection": _Tracker("reflection", 1e-12),
        "landen": _Tracker("landen", 1e-12),
        "second_order_expansion": _Tracker("second_order_expansion", 1.0),
        "f_integral_quadrature": _Tracker("f_integral_quadrature", 1e-9),
    }
    pi2_6 = math.pi**2 / 6.0
    for x, ref in ((0.0, 0.0), (1.0, pi2_6), (-1.0, -pi2_6 / 2.0), (0.5, pi2_6 / 2 - math.log(2) ** 2 / 2)):
        t["special_values"].add(abs(li2(x) - ref), f"x={x}")

    x = -np.exp(rng.uniform(math.log(1e-6), math.log(1e6), points))
    res = li2_array(1.0 / x) + li2_array(x) + 0.5 * np.log(-x) ** 2 + pi2_6
    t["inversion"].add_batch(np.abs(res), "inversion batch")

    x = rng.uniform(0.0, 1.0, points)
    res = li2_array(1.0 - x) + li2_array(x) + np.log(x) * np.log1p(-x) - pi2_6
    t["reflection"].add_batch(np.abs(res), "reflection batch")
    res = li2_array(1.0 - x) + li2_array(1.0 - 1.0 / x) + 0.5 * np.log(x) ** 2
    t["landen"].add_batch(np.abs(res), "landen batch")

    # Residual after the second-order term, in units of eps^3 / (1 - x)^2.
    eps = 1e-4
    x = rng.uniform(-0.9, 0.9, points)
    x = np.where(np.abs(x) < 0.05, 0.05 * np.sign(x) + (x == 0) * 0.05, x)
    second = ((1 - x) * np.log1p(-x) + x) / (2 * (1 - x) * x**2)
    res = li2_array(x + eps) - li2_array(x) + eps * np.log1p(-x) / x - eps**2 * second
    t["second_order_expansion"].add_batch(np.abs(res) * (1 - x - eps) ** 2 / eps**3,
                                          "expansion batch")

    for X, Y, a in _f_integral_triples(rng, triples):
        ref = _quad(lambda u: math.log(u - a) / u, Y, X)
        got = f_integral(X, Y, a)
        t["f_integral_quadrature"].add(abs(got - ref) / max(abs(ref), 1e-300),
                                       f"F({X!r}, {Y!r}; {a!r})")
    return SuiteReport("dilog", seed, points, tuple(tr.result() for tr in t.values()))


_ORACLE_S = (0.1, 1.0, 10.0)


def oracle_suite(models: int = 200, seed: int = 0, invariance_models: int = 20) -> SuiteReport:
    """Contour quadrature against every closed form, plus contour placement invariance."""
    rng = np.random.default_rng([seed, 3])
    tol = 1e-7
    names = (["constant_one", "identity", "log"] + [f"log1p_s={s:g}" for s in _ORACLE_S]
             + ["log_squared_exact", "known_c1_closed_forms", "contour_placement_invariance"])
    t = {n: _Tracker(n, 1e-10 if n == "constant_one" else tol) for n in names}
    base = ContourConfig()
    variants = (
        ContourConfig(points=2 * base.points),
        ContourConfig(left_margin=0.4, right_margin=1.6),
        ContourConfig(left_margin=0.6, right_margin=2.4),
    )
    one = FunctionalSpec.custom(lambda w: np.ones_like(w))
    for i in range(models):
        model = random_model(rng, p_max=16)
        tag = f"model {i} (p={model.p}, c1={model.c1:.4g}, c2={model.c2:.4g})"
        try:
            contour = lambda f, k=False, cfg=base: est_contour(model, f, cfg, c1_known=k).value  # noqa: E731
            t["constant_one"].add(abs(contour(one) - 1.0), tag)
            t["identity"].add(abs(contour(FunctionalSpec.identity()) - est_identity(model).value), tag)
            t["log"].add(abs(contour(FunctionalSpec.log()) - est_log(model).value), tag)
            for s in _ORACLE_S:
                t[f"log1p_s={s:g}"].add(
                    abs(contour(FunctionalSpec.log1p(s)) - est_log1p(model, s).value), tag)
            l2 = FunctionalSpec.log_squared()
            ref = contour(l2)
            t["log_squared_exact"].add(abs(ref - est_log2_exact(model).value), tag)
            known = max(
                abs(contour(FunctionalSpec.identity(), True) - est_identity(model, c1_known=True).value),
                abs(contour(FunctionalSpec.log(), True) - est_log(model, c1_known=True).value),
                abs(contour(FunctionalSpec.log1p(1.0), True) - est_log1p(model, 1.0, c1_known=True).value),
                abs(contour(l2, True) - est_log2_exact(model, c1_known=True).value),
            )
            t["known_c1_closed_forms"].add(known, tag)
            if i < invariance_models:
                t["contour_placement_invariance"].add(
                    max(abs(contour(l2, False, cfg) - ref) for cfg in variants), tag)
        except (SpecDistError, ArithmeticError, ValueError) as exc:
            for tr in t.values():
                tr.fail(f"{tag}: {type(exc).__name__}: {exc}")
    return SuiteReport("oracle", seed, models, tuple(tr.result() for tr in t.values()))


def limits_suite(models: int = 50, seed: int = 0) -> SuiteReport:
    """Large and small ``s`` limits of log1p, kappa0 placement, known-C1 continuity."""
    rng = np.random.default_rng([seed, 4])
    t = {
        "large_s_limit": _Tracker("large_s_limit", 1e-3),
        "small_s_limit": _Tracker("small_s_limit", 1e-3),
        "limit_monotone": _Tracker("limit_monotone", 0.0),
        "kappa0_bracket": _Tracker("kappa0_bracket", 0.0),
        "kappa0_large_s": _Tracker("kappa0_large_s", 1e-2),
        "known_c1_continuity": _Tracker("known_c1_continuity", 1e-5),
    }
    for i in range(models):
        model = random_model(rng)
        tag = f"model {i} (p={model.p}, c1={model.c1:.4g}, c2={model.c2:.4g})"
        try:
            log_ref = est_log(model).value
            id_ref = est_identity(model).value
            big = [abs(est_log1p(model, s).value - math.log(s) - log_ref) for s in (1e2, 1e4, 1e6)]
            small = [abs(est_log1p(model, s).value / s - id_ref) / abs(id_ref)
                     for s in (1e-2, 1e-4, 1e-6)]
            t["large_s_limit"].add(big[-1], tag)
            t["small_s_limit"].add(small[-1], tag)
            mono = big[0] > big[1] > big[2] and small[0] > small[1] > small[2]
            t["limit_monotone"].add(0.0 if mono else math.inf, tag)

            for s in (1e-6, 1e-2, 1.0, 1e2, 1e6):
                for known in (False, True):
                    c1 = 0.0 if known else model.c1
                    k0 = find_kappa0(model, s, c1_known=known)
                    inside = -1.0 / (s * (1.0 - c1)) < k0 < 0.0
                    t["kappa0_bracket"].add(0.0 if inside else math.inf, f"{tag}, s={s:g}")
            k0 = find_kappa0(model, 1e6)
            t["kappa0_large_s"].add(abs(k0 * 1e6 / -(1.0 - model.c2) - 1.0), tag)

            near = SpectralModel.from_ratios(model.lam, 1e-8, model.c2)
            pairs = (
                (est_identity(near), est_identity(model, c1_known=True)),
                (est_log(near), est_log(model, c1_known=True)),
                (est_log1p(near, 1.0), est_log1p(model, 1.0, c1_known=True)),
                (est_log2_approx(near), est_log2_approx(model, c1_known=True)),
                (est_log2_exact(near), est_log2_exact(model, c1_known=True)),
            )
            t["known_c1_continuity"].add(max(abs(a.value - b.value) for a, b in pairs), tag)
        except (SpecDistError, ArithmeticError, ValueError) as exc:
            for tr in t.values():
                tr.fail(f"{tag}: {type(exc).__name__}: {exc}")
    return SuiteReport("limits", seed, models, tuple(tr.result() for tr in t.values()))


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "spectral": spectral_suite,
    "dilog": dilog_suite,
    "oracle": oracle_suite,
    "limits": limits_suite,
}

DEFAULT_MODELS = {"spectral": 1000, "dilog": 100, "oracle": 200, "limits": 50}


def run_suites(names: Iterable[str], models: int | None = None, seed: int = 0) -> list[SuiteReport]:
    """Run the named suites; ``models`` overrides every suite's default count."""
    out = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}")
        count = DEFAULT_MODELS[name] if models is None else int(models)
        out.append(SUITES[name](count, seed))
    return out
