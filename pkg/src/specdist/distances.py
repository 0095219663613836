"""Covariance distances and divergences assembled from spectral functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike

from .errors import DomainError, NonPositiveEigenvalue
from .estimators import (
    ContourConfig,
    EstimateReport,
    FunctionalSpec,
    Method,
    estimate,
)
from .spectral import SpectralModel

__all__ = ["DistanceName", "DistanceKind", "distance", "population_distance"]

KL_CONVENTIONS = ("paper", "standard")


class DistanceName(str, Enum):
    FISHER_SQ = "fisher"
    BHATTACHARYYA = "bhattacharyya"
    KL = "kl"
    RENYI = "renyi"


@dataclass(frozen=True, slots=True)
class DistanceKind:
    name: DistanceName
    alpha: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", DistanceName(self.name))
        if self.name is DistanceName.RENYI:
            if self.alpha is None or not (0.0 < float(self.alpha) < 1.0):
                raise DomainError("Renyi alpha must lie in (0, 1)")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.alpha is not None:
            raise DomainError("alpha is only meaningful for the Renyi divergence")

    @classmethod
    def fisher(cls) -> DistanceKind:
        return cls(DistanceName.FISHER_SQ)

    @classmethod
    def bhattacharyya(cls) -> DistanceKind:
        return cls(DistanceName.BHATTACHARYYA)

    @classmethod
    def kl(cls) -> DistanceKind:
        return cls(DistanceName.KL)

    @classmethod
    def renyi(cls, alpha: float) -> DistanceKind:
        return cls(DistanceName.RENYI, alpha)

    def label(self) -> str:
        if self.name is DistanceName.RENYI:
            return f"renyi({self.alpha:g})"
        return self.name.value


def _compose(
    kind: DistanceKind, mean_of: Callable[[FunctionalSpec], float], kl_convention: str
) -> float:
    if kl_convention not in KL_CONVENTIONS:
        raise DomainError(f"kl_convention must be one of {KL_CONVENTIONS}")
    if kind.name is DistanceName.FISHER_SQ:
        return mean_of(FunctionalSpec.log_squared())
    if kind.name is DistanceName.BHATTACHARYYA:
        return (
            0.5 * mean_of(FunctionalSpec.log1p(1.0))
            - 0.25 * mean_of(FunctionalSpec.log())
            - 0.5 * math.log(2.0)
        )
    if kind.name is DistanceName.KL:
        sign = 1.0 if kl_convention == "paper" else -1.0
        return 0.5 * mean_of(FunctionalSpec.identity()) - 0.5 + sign * 0.5 * mean_of(
            FunctionalSpec.log()
        )
    alpha = kind.alpha
    s = (1.0 - alpha) / alpha
    return (
        -(math.log(alpha) + mean_of(FunctionalSpec.log1p(s))) / (2.0 * (alpha - 1.0))
        + 0.5 * mean_of(FunctionalSpec.log())
    )


def distance(
    model: SpectralModel,
    kind: DistanceKind,
    method: str = "rmt",
    *,
    c1_known: bool = False,
    kl_convention: str = "paper",
    fisher_exact: bool = False,
    contour: ContourConfig | None = None,
) -> EstimateReport:
    """Estimate a distance between the two population covariances.

    ``method`` is ``rmt`` (closed-form corrected estimators), ``plugin``
    (classical) or ``contour`` (numerical contour integral for every term).
    The squared Fisher distance uses the large-p form unless
    ``fisher_exact`` selects the dilogarithm form.
    """
    parts: list[EstimateReport] = []

    def mean_of(f: FunctionalSpec) -> float:
        rep = estimate(model, f, method, c1_known=c1_known, exact=fisher_exact,
                       contour=contour)
        parts.append(rep)
        return rep.value

    value = _compose(kind, mean_of, kl_convention)
    notes = tuple(w for rep in parts for w in rep.warnings)
    kappas = [rep.kappa0 for rep in parts if rep.kappa0 is not None]
    tags = {rep.method for rep in parts}
    tag = parts[0].method if len(tags) == 1 else _dominant(tags)
    return EstimateReport(
        value,
        tag,
        kappa0=kappas[0] if kappas else None,
        warnings=notes,
        validity=all(rep.validity for rep in parts),
    )


def _dominant(tags: set[Method]) -> Method:
    for m in (Method.EXACT_DILOG, Method.LARGE_P_APPROX, Method.CONTOUR, Method.PLUG_IN,
              Method.CLOSED_FORM_KNOWN_C1):
        if m in tags:
            return m
    return Method.CLOSED_FORM


def population_distance(
    nu_eigs: ArrayLike, kind: DistanceKind, *, kl_convention: str = "paper"
) -> float:
    """Distance evaluated on the exact eigenvalues of ``C1^{-1} C2``."""
    nu = np.asarray(nu_eigs, dtype=float).reshape(-1)
    if nu.size == 0 or np.any(nu <= 0.0) or not np.all(np.isfinite(nu)):
        raise NonPositiveEigenvalue("population eigenvalues must be positive and finite")
    return _compose(kind, lambda f: float(np.mean(f.on_reals(nu))), kl_convention)
