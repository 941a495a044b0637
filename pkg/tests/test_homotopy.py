import numpy as np
import pytest

from conftest import match_sets, solved
from ulampoly.homotopy import (
    PathStatus,
    TrackerOptions,
    TrackingError,
    cluster_endpoints,
    count_ulam,
    gamma_constant,
    intersection_records,
    nontrivial_existence_check,
    solve_system,
    start_constants,
    start_system,
    track_path,
)
from ulampoly.ulam_map import ResidualSystem

FULL, TILDE = ResidualSystem.FULL, ResidualSystem.TILDE


@pytest.mark.parametrize("degrees", [[1], [1, 2], [1, 2, 3, 3]])
def test_start_system_solutions(degrees):
    starts = start_system(degrees, seed=4)
    consts = start_constants(len(degrees), 4)
    assert len(starts) == int(np.prod(degrees))
    for s in starts:
        assert np.allclose(s ** np.array(degrees), consts, atol=1e-13)
    assert len({tuple(np.round(s, 10)) for s in starts}) == len(starts)
    with pytest.raises(ValueError):
        start_system([0, 1])


def test_gamma_constant_is_generic():
    for seed in range(20):
        g = gamma_constant(seed)
        assert abs(abs(g) - 1) < 1e-15
        assert abs(g.imag) > np.sin(0.04)
    assert gamma_constant(3) == gamma_constant(3)


@pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 6), (4, 23), (5, 119)])
def test_full_counts(n, count):
    sols = solved(n)
    assert len(sols) == count
    assert sols.at_infinity_count == 0 and sols.failed_count == 0
    assert sols.accounted_paths() == sols.path_count == FULL.bezout_number(n)


@pytest.mark.parametrize("n,count", [(2, 1), (3, 4), (4, 18), (5, 96)])
def test_tilde_counts(n, count):
    sols = solved(n, "tilde")
    assert len(sols) == count == sols.path_count
    assert sols.at_infinity_count == 0


def test_multiplicity_cluster_at_n4():
    sols = solved(4)
    doubles = [r for r in sols.records if r.cluster_size > 1]
    assert sols.multiplicity_pattern == [2]
    assert np.max(np.abs(doubles[0].point - [1, -1, -1, 0])) <= 1e-8


def test_intersections():
    assert len(intersection_records(solved(4, "tilde"))) == 1
    assert len(intersection_records(solved(5, "tilde"))) == 0
    assert len(intersection_records(solved(3, "tilde"))) == 0


def test_n3_beta_family():
    beta = np.roots([2, 2, 0, -1])
    expected = [np.array([b, -1 / b, 1 / (b + 1)]) for b in beta]
    nontrivial = [r.point for r in solved(3).records
                  if abs(r.point[2]) > 1e-8 and np.max(np.abs(r.point - [1, -1, -1])) > 1e-8]
    assert len(nontrivial) == 3
    for pt in nontrivial:
        assert min(np.max(np.abs(pt - e)) for e in expected) <= 1e-10


def test_records_are_sorted_and_polished():
    for n in range(1, 6):
        sols = solved(n)
        keys = [tuple(np.round(np.column_stack((r.point.real, r.point.imag)).ravel(), 8))
                for r in sols.records]
        assert keys == sorted(keys)
        assert max(r.residual for r in sols.records) <= 1e-12


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_seed_independence(seed):
    for n in (3, 4):
        a, b = solved(n), solved(n, seed=seed)
        assert len(a) == len(b)
        assert a.multiplicity_pattern == b.multiplicity_pattern
        for ra, rb in zip(a.records, b.records):
            assert np.max(np.abs(ra.point - rb.point)) <= 1e-8


def test_threaded_matches_serial():
    a = solve_system(4, FULL, seed=0)
    b = solve_system(4, FULL, seed=0, workers=3)
    assert [r.point.tolist() for r in a.records] == [r.point.tolist() for r in b.records]


def test_single_path():
    consts = start_constants(2, 0)
    start = start_system([1, 2], 0)[0]
    res = track_path(start, FULL, gamma_constant(0), consts)
    assert res.status is PathStatus.CONVERGED
    assert res.steps > 0 and res.min_step > 0


def test_tracking_error_carries_partial_result():
    opts = TrackerOptions(max_steps=3)
    with pytest.raises(TrackingError) as info:
        solve_system(3, FULL, seed=0, opts=opts)
    assert info.value.solution_set.failed_count > 0
    assert TrackerOptions().halved().h_max == 0.05


def test_solve_system_bounds():
    with pytest.raises(ValueError):
        solve_system(0)
    with pytest.raises(ValueError):
        solve_system(9)


def test_cluster_endpoints():
    pts = [np.array([0.0]), np.array([5e-7]), np.array([9e-7]), np.array([1.0])]
    groups = cluster_endpoints(pts, 1e-6)
    assert sorted(len(g) for g in groups) == [1, 3]


def test_count_ulam_consistent():
    for n, want in [(1, 1), (2, 2), (3, 6), (4, 23)]:
        c = count_ulam(n)
        assert c.u_n == want and c.direct_full == want and c.consistent
    c = count_ulam(4, cross_check=False)
    assert c.to_dict()["intersection"] == 1 and c.v_tilde == 18 and c.v_zero == 6


def test_nontrivial_existence():
    for n in range(2, 6):
        assert nontrivial_existence_check(n)
    with pytest.raises(ValueError):
        nontrivial_existence_check(1)


def test_to_dict_shape():
    d = solved(2).to_dict()
    assert d["record_count"] == 2 and d["system"] == "full"
    assert d["records"][1]["point"] == [[1.0, 0.0], [-2.0, 0.0]]
    assert match_sets([0, 0], np.array(d["records"][0]["point"])[:, 0]) == 0
