import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import solved
from ulampoly.ulam_map import (
    FixedPointRecord,
    MaxIterations,
    OrbitEscape,
    ResidualSystem,
    SingularJacobian,
    iterate_map,
    jacobian,
    min_pairwise_gap,
    newton_polish,
    pad_check,
    residual,
    ulam_map,
    verify_equivalent_system,
    verify_identities,
    zero_tail,
    zero_tail_ok,
)

FULL, TILDE = ResidualSystem.FULL, ResidualSystem.TILDE

# orbit of (0.1, 0.1): the tail decays geometrically onto the 2-cycle (a, 0) <-> (-a, 0)
ORBIT_01 = [
    [0.1, 0.1],
    [-0.2, 0.010000000000000002],
    [0.19, -0.0020000000000000005],
    [-0.188, -0.0003800000000000001],
    [0.18838, 7.144000000000002e-05],
    [-0.18845144, 1.3457867200000003e-05],
    [0.1884379821328, -2.5361544531687686e-06],
]


def test_known_fixed_points():
    for c in ([0], [1, -2], [1, -1, -1], [1, -2, 0], [0, 0, 0, 0]):
        assert np.allclose(ulam_map(c), c, atol=1e-15)
        assert np.max(np.abs(residual(c))) == 0


def test_tilde_residual_at_repeated_point():
    # c1*c2 + 1 = 0 at (1, -1, -1)
    assert np.max(np.abs(residual([1, -1, -1], TILDE))) == 0
    assert residual([1, 2, 5], TILDE)[-1] == 3


def test_degrees_and_bezout():
    assert FULL.degrees(4) == [1, 2, 3, 4] and FULL.bezout_number(5) == 120
    assert TILDE.degrees(4) == [1, 2, 3, 3] and TILDE.bezout_number(5) == 96
    with pytest.raises(ValueError):
        TILDE.degrees(1)


@pytest.mark.parametrize("system", [FULL, TILDE])
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_jacobian_finite_difference(system, n):
    rng = np.random.default_rng(n)
    h = 1e-6
    for _ in range(50):
        c = rng.uniform(-1.5, 1.5, n) + 1j * rng.uniform(-1.5, 1.5, n)
        jac = jacobian(c, system)
        fd = np.empty_like(jac)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            fd[:, i] = (residual(c + e, system) - residual(c - e, system)) / (2 * h)
        assert np.max(np.abs(jac - fd)) <= 1e-6 * max(1.0, np.max(np.abs(jac)))


def test_jacobian_is_holomorphic():
    c = np.array([0.3 + 0.2j, -1.1, 0.7j])
    h = 1e-6
    for i in range(3):
        e = np.zeros(3, dtype=complex)
        e[i] = 1j * h
        fd = (residual(c + e) - residual(c - e)) / (2j * h)
        assert np.allclose(fd, jacobian(c)[:, i], atol=1e-8)


def test_newton_polish_converges():
    rec = newton_polish(np.array([1.01, -1.98]))
    assert np.allclose(rec.point, [1, -2], atol=1e-12)
    assert rec.residual <= 1e-12


def test_newton_polish_exact_start():
    rec = newton_polish([1, -2])
    assert rec.residual == 0


def test_newton_polish_singular_at_double_root():
    with pytest.raises(SingularJacobian):
        newton_polish(np.array([1, -1, -1, 0]) + 1e-9)


def test_newton_polish_iteration_cap():
    with pytest.raises(MaxIterations):
        newton_polish([0.5 + 0.5j, 0.3, -0.4j], max_iter=1)


def test_record_helpers():
    rec = FixedPointRecord.from_point([1, -2, 0, 0], 0.0)
    assert rec.zero_tail == 2 and rec.is_real and rec.n == 4
    assert not rec.all_nonzero() and not rec.has_distinct_entries()
    assert zero_tail([0, 1]) == 0
    assert min_pairwise_gap([1]) == np.inf
    with pytest.raises(ValueError):
        rec.point[0] = 3


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_identities_on_every_fixed_point(n):
    for rec in solved(n).records:
        rep = verify_identities(rec.point)
        assert rep.passed(1e-8), (rec.point, rep)
        if rec.has_distinct_entries():
            assert rep.skipped == []
        else:
            assert rep.skipped == ["rel2", "rel3"] and rep.rel2 is None


def test_identity_defect_for_non_fixed_point():
    assert not verify_identities([0.4, 0.9, -0.3j]).passed()


@pytest.mark.parametrize("n", [2, 3, 4])
def test_equivalent_system_on_fixed_points(n):
    rng = np.random.default_rng(7)
    for rec in solved(n).records:
        t = rng.normal(size=n) + 1j * rng.normal(size=n)
        assert verify_equivalent_system(rec.point, t, 1)
        assert verify_equivalent_system(rec.point, t, 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
def test_equivalent_system_iff_fixed(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)
    t = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
    fixed = np.max(np.abs(residual(c))) <= 1e-8
    assert verify_equivalent_system(c, t, 1) == fixed
    assert verify_equivalent_system(c, t, 2) == fixed


def test_equivalent_system_rejects_repeated_nodes():
    with pytest.raises(ValueError):
        verify_equivalent_system([1, -2], [0.5, 0.5], 1)
    with pytest.raises(ValueError):
        verify_equivalent_system([1, -2, 0], [0.1, 0.5, 0.5], 2)
    with pytest.raises(ValueError):
        verify_equivalent_system([1, -2], [0.1, 0.5], 3)
    with pytest.raises(ValueError):
        verify_equivalent_system([1, -2], [0.1], 1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_padding_and_zero_tail(n):
    for rec in solved(n).records:
        assert pad_check(rec.point, 1) and pad_check(rec.point, 3)
        assert zero_tail_ok(rec.point)


def test_zero_tail_violation():
    assert not zero_tail_ok([1, 0, 2])
    assert zero_tail_ok([1, 2, 0, 0])


def test_iterate_map_regression():
    orbit = iterate_map([0.1, 0.1], 40)
    for got, want in zip(orbit.points, ORBIT_01):
        assert np.allclose(got, want, rtol=0, atol=1e-15)
    assert (orbit.cycle_start, orbit.period) == (11, 2)
    a = orbit.points[-1]
    assert np.allclose(ulam_map(a), [-a[0], 0], atol=1e-9)


def test_iterate_map_fixed_point_has_period_one():
    orbit = iterate_map([1, -1, -1], 3)
    assert orbit.cycle_start == 0 and orbit.period == 1


def test_iterate_map_escape():
    with pytest.raises(OrbitEscape):
        iterate_map([10, 10], 10)
    with pytest.raises(ValueError):
        iterate_map([1], -1)
