"""Monte Carlo harness: Toeplitz ground truth, Gaussian samplers and the trial runner."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field as dc_field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .distances import DistanceKind, distance, population_distance
from .errors import DomainError, FactorizationFailure, SpecDistError
from .estimators import FunctionalSpec, estimate
from .spectral import SpectralModel, known_c1_eigenvalues, sample_eigenvalues

__all__ = [
    "Field",
    "ExperimentConfig",
    "MethodSummary",
    "TrialSummary",
    "ESTIMATOR_TAGS",
    "toeplitz_spectrum",
    "toeplitz_matrix",
    "sample_gaussian",
    "trial_rng",
    "worker_count",
    "run_experiment",
]

ESTIMATOR_TAGS = ("rmt", "rmt-exact", "plugin", "contour")


class Field(str, Enum):
    REAL = "real"
    COMPLEX = "complex"


def toeplitz_matrix(p: int, a: float) -> NDArray[np.float64]:
    if not abs(a) < 1.0:
        raise DomainError("Toeplitz parameter must satisfy |a| < 1")
    return linalg.toeplitz(a ** np.arange(p, dtype=float))


def toeplitz_spectrum(p: int, a: float) -> NDArray[np.float64]:
    """Ascending eigenvalues of ``T_ij = a^|i-j|``."""
    return linalg.eigvalsh(toeplitz_matrix(p, a))


def sample_gaussian(
    cov: ArrayLike, n: int, field: Field | str, rng: np.random.Generator
) -> NDArray:
    """``p x n`` matrix of i.i.d. zero-mean Gaussian columns with covariance ``cov``.

    Complex draws are circularly symmetric: real and imaginary parts are
    independent with variance 1/2 per unit-variance entry.
    """
    cov = np.asarray(cov)
    field = Field(field)
    try:
        factor = linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise FactorizationFailure("covariance is not positive definite") from exc
    p = cov.shape[0]
    if field is Field.REAL:
        z = rng.standard_normal((p, n))
    else:
        z = (rng.standard_normal((p, n)) + 1j * rng.standard_normal((p, n))) / np.sqrt(2.0)
    return factor @ z


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream keyed by ``(seed, trial)``."""
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(trial)])
    return np.random.Generator(np.random.Philox(key))


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("SPECDIST_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    """One Monte Carlo cell: C1 = I, C2 = Toeplitz(toeplitz_a).

    ``estimators`` are tags from ``ESTIMATOR_TAGS``, optionally suffixed
    with ``-c1known`` to use the known-C1 variant.  ``kind`` is a distance or
    a bare spectral functional.
    """

    p: int
    n1: int
    n2: int
    toeplitz_a: float = 0.3
    field: Field = Field.REAL
    trials: int = 10000
    seed: int = 0
    estimators: tuple[str, ...] = ("rmt", "plugin")
    kind: DistanceKind | FunctionalSpec = dc_field(default_factory=DistanceKind.fisher)
    kl_convention: str = "paper"
    workers: int | None = dc_field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", Field(self.field))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.p < 1 or self.n1 <= self.p or self.n2 < 1:
            raise DomainError("need p >= 1, n1 > p and n2 >= 1")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if not abs(self.toeplitz_a) < 1.0:
            raise DomainError("Toeplitz parameter must satisfy |a| < 1")
        for tag in self.estimators:
            base = tag.removesuffix("-c1known")
            if base not in ESTIMATOR_TAGS:
                raise DomainError(f"unknown estimator tag {tag!r}")

    def to_dict(self) -> dict:
        kind = self.kind
        if isinstance(kind, DistanceKind):
            kind_desc = {"distance": kind.name.value, "alpha": kind.alpha}
        else:
            kind_desc = {"functional": kind.kind.value, "s": kind.s}
        return {
            "p": self.p, "n1": self.n1, "n2": self.n2, "toeplitz_a": self.toeplitz_a,
            "field": self.field.value, "trials": self.trials, "seed": self.seed,
            "estimators": list(self.estimators), "kind": kind_desc,
            "kl_convention": self.kl_convention,
        }


@dataclass(frozen=True, slots=True)
class MethodSummary:
    method: str
    mean: float
    std: float
    rel_error: float
    trials_ok: int
    failures: int
    values: NDArray[np.float64] = dc_field(repr=False, compare=False)


@dataclass(frozen=True, slots=True)
class TrialSummary:
    config: ExperimentConfig
    population_value: float
    trials_run: int
    methods: dict[str, MethodSummary]
    warnings: tuple[str, ...] = ()
    seconds: float = dc_field(default=0.0, compare=False)


def _population(config: ExperimentConfig) -> float:
    nu = toeplitz_spectrum(config.p, config.toeplitz_a)
    if isinstance(config.kind, DistanceKind):
        return population_distance(nu, config.kind, kl_convention=config.kl_convention)
    return float(np.mean(config.kind.on_reals(nu)))


def _one_trial(config: ExperimentConfig, trial: int, c2_factor: NDArray) -> tuple[list, list]:
    rng = trial_rng(config.seed, trial)
    ident = np.eye(config.p)
    x1 = sample_gaussian(ident, config.n1, config.field, rng)
    z2 = sample_gaussian(ident, config.n2, config.field, rng)
    x2 = c2_factor @ z2
    models: dict[bool, SpectralModel] = {}
    values, notes = [], []
    for tag in config.estimators:
        known = tag.endswith("-c1known")
        base = tag.removesuffix("-c1known")
        try:
            if known not in models:
                if known:
                    models[known] = known_c1_eigenvalues(ident, x2)
                else:
                    models[known] = sample_eigenvalues(x1, x2)
            model = models[known]
            method = "rmt" if base.startswith("rmt") else base
            exact = base == "rmt-exact"
            if isinstance(config.kind, DistanceKind):
                rep = distance(model, config.kind, method, c1_known=known,
                               kl_convention=config.kl_convention, fisher_exact=exact)
            else:
                rep = estimate(model, config.kind, method, c1_known=known, exact=exact,
                               equal_covariances=config.toeplitz_a == 0.0)
            if not rep.validity:
                notes.append(f"trial {trial} {tag}: flagged invalid: {'; '.join(rep.warnings)}")
            values.append(rep.value)
        except (SpecDistError, ArithmeticError, linalg.LinAlgError) as exc:
            values.append(np.nan)
            notes.append(f"trial {trial} {tag}: {type(exc).__name__}: {exc}")
    return values, notes


def run_experiment(config: ExperimentConfig) -> TrialSummary:
    """Run ``config.trials`` independent draws and aggregate per estimator.

    Trial ``i`` always uses the stream ``trial_rng(seed, i)`` and its results
    land in slot ``i``, so the summary does not depend on scheduling.
    """
    start = time.perf_counter()
    population = _population(config)
    c2_factor = linalg.cholesky(toeplitz_matrix(config.p, config.toeplitz_a), lower=True)
    n_methods = len(config.estimators)
    table = np.full((config.trials, n_methods), np.nan)
    notes: list[list[str]] = [[] for _ in range(config.trials)]

    def work(trial: int) -> None:
        vals, msgs = _one_trial(config, trial, c2_factor)
        table[trial] = vals
        notes[trial] = msgs

    workers = worker_count(config.workers)
    if workers == 1:
        for t in range(config.trials):
            work(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(config.trials)))

    methods: dict[str, MethodSummary] = {}
    for j, tag in enumerate(config.estimators):
        col = table[:, j]
        ok = col[np.isfinite(col)]
        if ok.size:
            mean = float(np.mean(ok))
            std = float(np.std(ok, ddof=1)) if ok.size > 1 else 0.0
        else:
            mean = std = float("nan")
        rel = abs(mean - population) / abs(population) if population != 0.0 else float("nan")
        methods[tag] = MethodSummary(tag, mean, std, rel, int(ok.size),
                                     int(config.trials - ok.size), col.copy())
    flat = tuple(m for msgs in notes for m in msgs)
    return TrialSummary(config, population, config.trials, methods, flat,
                        time.perf_counter() - start)
