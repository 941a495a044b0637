import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ulampoly.hypergeometric import (
    DegenerateEigenvalues,
    HyperParams,
    RigidityGrid,
    degree2_closed_form,
    degree3_closed_form,
    eigen_residual,
    recurrence_coeffs,
    ulam_constraints,
    ulam_rigidity_check,
)

finite = dict(allow_nan=False, allow_infinity=False)
small_complex = st.complex_numbers(max_magnitude=2, **finite)
SAMPLES = 0.8 * np.exp(2j * np.pi * np.arange(16) / 16)


def away_from_poles(alpha, n):
    return HyperParams(alpha).eigenvalues_injective(n, tol=1e-2)


@settings(max_examples=80, deadline=None)
@given(st.floats(-3, 3, **finite), small_complex, small_complex)
def test_closed_forms_match_recurrence(alpha, beta, delta):
    assume(away_from_poles(alpha, 3))
    p = HyperParams(alpha, beta, delta)
    for n, closed in ((2, degree2_closed_form), (3, degree3_closed_form)):
        rec = recurrence_coeffs(p, n).coeffs
        ref = closed(alpha, beta, delta)
        assert np.max(np.abs(rec - ref)) <= 1e-9 * max(1.0, np.max(np.abs(ref)))


@settings(max_examples=50, deadline=None)
@given(small_complex, small_complex, small_complex, small_complex, st.integers(0, 6))
def test_recurrence_solves_the_ode(alpha, beta, delta, a1, n):
    p = HyperParams(alpha, beta, delta, a1)
    assume(p.eigenvalues_injective(n, tol=1e-2))
    poly = recurrence_coeffs(p, n)
    scale = max(1.0, float(np.max(np.abs(poly.full_coeffs())))) * (n + 1) ** 2
    assert eigen_residual(poly, p, SAMPLES) <= 1e-9 * scale * max(1.0, abs(alpha) + abs(beta) + abs(delta))


@settings(max_examples=100, deadline=None)
@given(small_complex, st.integers(1, 12), st.data())
def test_eigenvalue_difference_identity(alpha, n, data):
    j = data.draw(st.integers(1, n))
    p = HyperParams(alpha)
    diff = p.eigenvalue(n) - p.eigenvalue(n - j)
    closed = j * (1 - (2 * n - j - 1) * alpha)
    assert abs(diff - closed) <= 1e-14 * max(1.0, abs(n * n * alpha))


@pytest.mark.parametrize("alpha", [-1.0, 0.0, 0.1, 0.35, 2.0, 0.3 + 0.4j])
def test_trivial_family_is_power(alpha):
    for n in range(11):
        p = HyperParams(alpha)
        if not p.eigenvalues_injective(n):
            continue
        poly = recurrence_coeffs(p, n)
        assert np.all(poly.coeffs == 0)
        assert eigen_residual(poly, p, SAMPLES) <= 1e-12


def test_degenerate_eigenvalues():
    with pytest.raises(DegenerateEigenvalues):
        recurrence_coeffs(HyperParams(0.5), 2)
    assert not HyperParams(0.2).eigenvalues_injective(4)
    with pytest.raises(ValueError):
        recurrence_coeffs(HyperParams(0.1), -1)


def test_degree2_example():
    # alpha = 0 reduces the closed form to (-2 beta, -delta)
    p = HyperParams(0.0, 1.0, 3.0)
    assert np.allclose(recurrence_coeffs(p, 2).coeffs, degree2_closed_form(0.0, 1.0, 3.0))
    assert np.allclose(degree2_closed_form(0.0, 1.0, 3.0), [-2, -3])


def test_constraints_vanish_at_origin():
    for alpha in (-1.0, 0.1, 2.0):
        assert np.max(np.abs(ulam_constraints(alpha, 0, 0))) == 0
    assert np.max(np.abs(ulam_constraints(0.1, 1.0, 0.0))) > 1e-3


def test_grid_presets():
    for name in ("default", "wide", "fine"):
        RigidityGrid.preset(name).check()
    with pytest.raises(ValueError):
        RigidityGrid.preset("huge")
    with pytest.raises(ValueError):
        RigidityGrid(alphas=(0.25,)).check()


def test_rigidity_default_grid():
    rep = ulam_rigidity_check()
    assert rep.passed
    assert not rep.unexpected_zeros()
    assert rep.origin_found_for_every_alpha()
    assert all(s["violated"] for s in rep.spot_checks)
    by_alpha = {(h["alpha"], h["n"]): h for h in rep.higher_degree}
    assert by_alpha[(0.2, 4)]["degenerate"]
    for h in rep.higher_degree:
        if not h["degenerate"]:
            assert h["ulam_residual"] <= 1e-10
    d = rep.to_dict()
    assert d["passed"] and d["unexpected_zero_count"] == 0


def test_rigidity_small_custom_grid():
    grid = RigidityGrid(alphas=(0.7,), beta_values=(0.0, 1.0), delta_values=(0.0,), n_starts=5)
    rep = ulam_rigidity_check(grid)
    assert rep.passed and len(rep.minimizers) == 5 and len(rep.spot_checks) == 1
