from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdist.errors import (
    BracketFailure,
    DimensionMismatch,
    DomainError,
    NonFinite,
    NonPositiveEigenvalue,
    PoleHit,
    SingularC1,
)
from specdist.spectral import (
    SpectralModel,
    eta_points,
    known_c1_eigenvalues,
    phi,
    phi_over_psi,
    phi_prime,
    psi,
    psi_prime,
    sample_eigenvalues,
    stieltjes,
    stieltjes_prime,
    support_points,
    support_points_rank_one,
)

# Reference values from tests/oracles/make_oracles.py (40-digit mpmath).
STIELTJES_124 = complex(0.2974358974358974359, 0.11282051282051282051)
P3 = dict(lam=[0.5, 1.3, 2.9], c1=0.2, c2=0.4)
P3_ETA = [0.53350873338620846412, 1.3972146525831763633, 3.1609432806972818392]
P3_ZETA = [0.39795458483319708009, 1.1062049974318974738, 2.5691737510682387795]


def model(lam, c1=0.5, c2=0.5):
    return SpectralModel.from_ratios(lam, c1, c2)


spectra = st.lists(st.floats(0.05, 20.0), min_size=1, max_size=24)
ratios = st.floats(0.02, 0.95)


# SpectralModel -----------------------------------------------------------------


def test_model_sorts_and_freezes():
    m = SpectralModel([3.0, 1.0, 2.0], 10, 20)
    assert m.lam.tolist() == [1.0, 2.0, 3.0]
    assert (m.p, m.c1, m.c2) == (3, 0.3, 0.15)
    with pytest.raises(ValueError):
        m.lam[0] = 5.0


@pytest.mark.parametrize(
    "lam,n1,n2,exc",
    [
        ([1.0, 2.0], 2, 10, DomainError),
        ([1.0, 2.0], 1, 10, DomainError),
        ([-1.0, 2.0], 10, 10, NonPositiveEigenvalue),
        ([0.0, 2.0], 10, 10, NonPositiveEigenvalue),
        ([1.0, float("nan")], 10, 10, NonFinite),
        ([], 10, 10, DomainError),
    ],
)
def test_model_rejects_invalid(lam, n1, n2, exc):
    with pytest.raises(exc):
        SpectralModel(lam, n1, n2)


def test_zero_eigenvalues_only_for_rank_deficient_second_sample():
    m = SpectralModel([0.0, 0.0, 1.0, 2.0], 10, 2)
    assert m.n_zero == 2 and m.positive.tolist() == [1.0, 2.0]
    with pytest.raises(NonPositiveEigenvalue):
        SpectralModel([0.0, 0.0, 0.0, 2.0], 10, 2)


def test_from_ratios_and_known_c1():
    m = SpectralModel.from_ratios([1.0, 2.0], 0.25, 0.5)
    assert (m.n1, m.n2) == (8.0, 4.0)
    k = SpectralModel.known_c1([1.0, 2.0], 4)
    assert k.c1 == 0.0 and math.isinf(k.n1)
    with pytest.raises(DomainError):
        SpectralModel.from_ratios([1.0], 1.0, 0.5)


# sample_eigenvalues --------------------------------------------------------------


def test_identical_samples_give_unit_spectrum():
    x = np.random.default_rng(0).standard_normal((5, 12))
    m = sample_eigenvalues(x, x)
    assert np.allclose(m.lam, 1.0, atol=1e-12)


def test_diagonal_engineered_samples():
    r2 = math.sqrt(2.0)
    x1 = np.array([[r2, -r2, 0.0, 0.0], [0.0, 0.0, r2, -r2]])  # C1_hat = I
    x2 = np.array([[2.0, 0.0], [0.0, math.sqrt(6.0)]])  # C2_hat = diag(2, 3)
    m = sample_eigenvalues(x1, x2)
    assert np.allclose(m.lam, [2.0, 3.0], rtol=1e-14)


@pytest.mark.parametrize("complex_data", [False, True])
def test_matches_general_eigensolver(complex_data):
    rng = np.random.default_rng(7)
    shape1, shape2 = (4, 8), (4, 8)
    x1, x2 = rng.standard_normal(shape1), rng.standard_normal(shape2)
    if complex_data:
        x1 = x1 + 1j * rng.standard_normal(shape1)
        x2 = x2 + 1j * rng.standard_normal(shape2)
    c1 = x1 @ x1.conj().T / 8
    c2 = x2 @ x2.conj().T / 8
    ref = np.sort(np.linalg.eigvals(np.linalg.inv(c1) @ c2).real)
    got = sample_eigenvalues(x1, x2).lam
    assert np.allclose(got, ref, rtol=1e-10, atol=0)


def test_rank_deficient_second_sample_has_exact_zeros():
    rng = np.random.default_rng(1)
    m = sample_eigenvalues(rng.standard_normal((6, 20)), rng.standard_normal((6, 4)))
    assert m.lam[:2].tolist() == [0.0, 0.0] and np.all(m.lam[2:] > 0)


def test_sample_eigenvalue_errors():
    rng = np.random.default_rng(2)
    with pytest.raises(DimensionMismatch):
        sample_eigenvalues(rng.standard_normal((3, 10)), rng.standard_normal((4, 10)))
    with pytest.raises(DomainError, match="n1 must exceed p"):
        sample_eigenvalues(rng.standard_normal((4, 4)), rng.standard_normal((4, 10)))
    singular = np.vstack([rng.standard_normal((1, 10))] * 3)
    with pytest.raises(SingularC1):
        sample_eigenvalues(singular, rng.standard_normal((3, 10)))
    bad = rng.standard_normal((3, 10))
    bad[0, 0] = np.inf
    with pytest.raises(NonFinite):
        sample_eigenvalues(bad, rng.standard_normal((3, 10)))


def test_known_c1_eigenvalues_whiten_by_population_matrix():
    rng = np.random.default_rng(3)
    c1 = np.array([[2.0, 0.5], [0.5, 1.0]])
    x2 = rng.standard_normal((2, 30))
    m = known_c1_eigenvalues(c1, x2)
    ref = np.sort(np.linalg.eigvals(np.linalg.inv(c1) @ (x2 @ x2.T / 30)).real)
    assert np.allclose(m.lam, ref, rtol=1e-12) and m.c1 == 0.0
    with pytest.raises(SingularC1):
        known_c1_eigenvalues(np.zeros((2, 2)), x2)


# Transforms --------------------------------------------------------------------


def test_stieltjes_examples():
    assert stieltjes(model([1.0]), 0.0) == pytest.approx(1.0)
    assert stieltjes(model([1.0, 3.0]), 2.0) == pytest.approx(0.0, abs=1e-15)
    assert abs(stieltjes(model([1.0, 2.0, 4.0]), -1 + 1j) - STIELTJES_124) < 1e-15
    assert stieltjes_prime(model([1.0]), 0.0) == pytest.approx(1.0)
    assert stieltjes_prime(model([2.0]), 1 + 0j) == pytest.approx(1.0)


def test_pole_guard():
    with pytest.raises(PoleHit):
        stieltjes(model([1.0, 2.0]), 2.0)
    with pytest.raises(PoleHit):
        phi(model([1.0, 2.0]), 1.0 + 1e-15)


@settings(max_examples=50, deadline=None)
@given(spectra, st.floats(-3.0, 30.0), st.floats(0.1, 5.0))
def test_stieltjes_derivative_matches_finite_difference(lam, x, y):
    m = model(lam)
    z = complex(x, y)
    h = 1e-6
    fd = (stieltjes(m, z + h) - stieltjes(m, z - h)) / (2 * h)
    assert abs(stieltjes_prime(m, z) - fd) <= 1e-5 * abs(fd)


def test_phi_psi_examples():
    m = model([1.0, 2.5], c1=0.3, c2=0.4)
    assert psi(m, 0.0) == pytest.approx(0.6, abs=1e-15)
    assert phi(m, 0.0) == 0.0
    assert phi(model([1.0], 0.5, 0.5), 2.0) == pytest.approx(0.0, abs=1e-15)


def test_transform_derivatives_match_finite_difference():
    m = model([0.5, 1.3, 2.9], 0.2, 0.4)
    z, h = 0.5 + 0.5j, 1e-6
    for f, fp in ((phi, phi_prime), (psi, psi_prime)):
        fd = (f(m, z + h) - f(m, z - h)) / (2 * h)
        assert abs(fp(m, z) - fd) <= 1e-6 * abs(fd)


@settings(max_examples=50, deadline=None)
@given(spectra, ratios, ratios)
def test_derivative_signs_on_real_axis(lam, c1, c2):
    m = model(lam, c1, c2)
    v = m._values
    below = v[0] * np.linspace(-3.0, 0.99, 40)
    assert np.all(np.real(phi_prime(m, below)) > 0)
    mids = np.concatenate((below, 0.5 * (v[:-1] + v[1:]), [2.0 * v[-1]]))
    assert np.all(np.real(psi_prime(m, mids)) < 0)


def test_phi_over_psi_is_real_and_resolves_origin():
    m = model([1.0, 2.0], 0.3, 0.4)
    assert phi_over_psi(m, 0.0) == 0.0
    x = np.array([-1.0, 0.25, 5.0])
    ref = np.real(phi(m, x) / psi(m, x))
    assert np.allclose(phi_over_psi(m, x), ref, rtol=1e-14)


# Support points ----------------------------------------------------------------


def test_single_eigenvalue_support_points():
    sp = support_points(model([1.0], 0.5, 0.5))
    assert sp.eta[0] == pytest.approx(2.0, rel=1e-14)
    assert sp.zeta[0] == pytest.approx(0.5, rel=1e-14)


def test_three_point_support_matches_high_precision_roots():
    m = SpectralModel.from_ratios(**P3)
    sp = support_points(m)
    assert np.allclose(sp.eta, P3_ETA, rtol=1e-14, atol=0)
    assert np.allclose(sp.zeta, P3_ZETA, rtol=1e-14, atol=0)


@settings(max_examples=100, deadline=None)
@given(spectra, ratios, ratios)
def test_interlacing_and_product_identities(lam, c1, c2):
    m = model(lam, c1, c2)
    sp = support_points(m)
    chain = np.column_stack([sp.zeta, m.lam, sp.eta]).ravel()
    assert np.all(np.diff(chain) >= 0) and sp.zeta[0] > 0
    assert math.expm1(np.sum(np.log1p(sp.eta_gap / m.lam)) + math.log1p(-c1)) == pytest.approx(0, abs=1e-10)
    assert math.expm1(np.sum(np.log1p(-sp.zeta_gap / m.lam)) - math.log1p(-c2)) == pytest.approx(0, abs=1e-10)
    lhs, rhs = np.sum(sp.zeta), (1 - c2 / m.p) * np.sum(m.lam)
    assert abs(lhs - rhs) <= 1e-10 * rhs


@settings(max_examples=50, deadline=None)
@given(spectra, ratios, ratios)
def test_rank_one_route_agrees(lam, c1, c2):
    m = model(lam, c1, c2)
    a, b = support_points(m), support_points_rank_one(m)
    scale = m.lam_max
    assert np.max(np.abs(a.eta - b.eta)) <= 1e-10 * scale
    assert np.max(np.abs(a.zeta - b.zeta)) <= 1e-10 * scale


def test_roots_are_zeros_of_the_transforms():
    m = SpectralModel.from_ratios(**P3)
    sp = support_points(m)
    assert np.max(np.abs(phi(m, sp.eta))) < 1e-12
    assert np.max(np.abs(psi(m, sp.zeta))) < 1e-12


def test_duplicate_eigenvalues_are_merged():
    m = SpectralModel([0.5, 1.0, 1.0, 1.0 + 1e-14, 2.0], 20, 15)
    assert m._values.size == 3 and m._counts.tolist() == [1, 3, 1]
    sp = support_points(m)
    # Two of the three roots of each kind are pinned to the cluster.
    assert np.count_nonzero(sp.eta_gap == 0.0) == 2
    assert np.count_nonzero(sp.zeta_gap == 0.0) == 2
    assert np.all(np.diff(np.column_stack([sp.zeta, m.lam, sp.eta]).ravel()) >= 0)
    ref = support_points_rank_one(m)
    assert np.allclose(sp.eta, ref.eta, atol=1e-12) and np.allclose(sp.zeta, ref.zeta, atol=1e-12)


def test_zeta_requires_c2_below_one():
    with pytest.raises(DomainError):
        support_points(model([1.0, 2.0], 0.5, 1.0))
    # eta alone stays available when c2 > 1
    m = SpectralModel([0.0, 0.0, 1.0, 2.0], 10, 2)
    eta = eta_points(m)
    assert eta.size == 2 and np.all(eta > m.positive)
    assert np.all(np.abs(phi(m, eta)) < 1e-12)


def test_known_c1_eta_equals_lambda():
    m = model([1.0, 2.0, 3.0], 0.4, 0.3)
    assert np.array_equal(support_points(m, c1_known=True).eta, m.lam)


def test_bracket_failure_is_an_arithmetic_error():
    assert issubclass(BracketFailure, ArithmeticError)
