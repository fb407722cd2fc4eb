import numpy as np
import pytest

from ds3.admm import SolverSettings, solve
from ds3.regpath import (PartitionSpec, check_joint_partition, lambda_max)
from ds3.testbed import (OracleReport, brute_force_facility, certificate_check,
                         certificate_from_state, gen_gaussian_mixture,
                         reference_solve, single_rep_threshold_inf)
from oracles import lp_solve_inf


def test_reference_single_row():
    d = np.array([[0.5, 0.25, 1.0]])
    for p, norm in (("inf", 1.0), ("2", np.sqrt(3))):
        Z, obj = reference_solve(d, 2.0, p, iters=10)
        assert np.array_equal(Z, np.ones((1, 3)))
        assert obj == pytest.approx(2.0 * norm + 1.75)


def test_reference_zero_lambda_picks_column_minima():
    d = np.random.default_rng(0).uniform(size=(5, 6))
    _, obj = reference_solve(d, 0.0)
    assert obj == pytest.approx(d.min(axis=0).sum(), abs=1e-6)


def test_reference_matches_lp():
    d = np.random.default_rng(1).uniform(size=(5, 5))
    _, ref = reference_solve(d, 0.3)
    _, lp = lp_solve_inf(d, 0.3)
    assert abs(ref - lp) <= 1e-3 * (1 + lp)


def test_facility_examples():
    d = np.random.default_rng(2).uniform(size=(6, 7))
    S, obj = brute_force_facility(d, 1e6)
    assert S == [int(np.argmin(d.sum(axis=1)))]
    assert S == [lambda_max(d).l_star]
    S, obj = brute_force_facility(d, 0.0)
    assert obj == pytest.approx(d.min(axis=0).sum())
    with pytest.raises(ValueError):
        brute_force_facility(np.zeros((16, 2)), 1.0)


def test_facility_picks_medoids_on_separated_blocks():
    x = np.array([0, 1, 2, 50, 51, 52], dtype=float)
    d = np.abs(x[:, None] - x[None, :])
    S, obj = brute_force_facility(d, 5.0)
    assert S == [1, 4] and obj == pytest.approx(10 + 4)
    sol = solve(d, 5.0)
    assert abs(sol.objective - obj) <= 1e-3


def test_relaxation_never_exceeds_facility():
    rng = np.random.default_rng(3)
    for _ in range(5):
        d = rng.uniform(size=(6, 6))
        lam = 0.2 * lambda_max(d).lambda_max
        sol = solve(d, lam)
        _, fac = brute_force_facility(d, lam)
        assert sol.objective <= fac + 1e-3


def test_certificate_examples():
    assert certificate_check([[0.0]], np.ones((1, 1)), 1.0)
    d = np.random.default_rng(4).uniform(size=(6, 6))
    for p in ("2", "inf"):
        sol = solve(d, 0.2, SolverSettings(p=p))
        assert sol.converged
        assert certificate_from_state(d, sol.state, 0.2, p)
        bad = sol.state.C.copy()
        bad[0, 0] += 0.1
        assert not certificate_check(d, bad, 0.2, p, Lambda=sol.state.Lambda)


def test_report_gap():
    r = OracleReport(1.5, 1.25)
    assert r.gap == 0.25


def test_generator_is_seeded():
    a = gen_gaussian_mixture([(0, 0), (5, 5)], 10, 1.0, 3)
    b = gen_gaussian_mixture([(0, 0), (5, 5)], 10, 1.0, 3)
    assert np.array_equal(a.source_points, b.source_points)
    assert a.identical and a.source_points is a.target_points
    assert list(a.labels_x) == [0] * 10 + [1] * 10
    c = gen_gaussian_mixture([(0, 0)], 4, 1.0, 3, target_means=[(9, 9)])
    assert not c.identical and c.dissimilarity().shape == (4, 4)
    with pytest.raises(ValueError):
        gen_gaussian_mixture([(0, 0)], 4, 0.0, 3)


def test_generator_degenerate_component():
    s = gen_gaussian_mixture([(2, 3)], 5, 1e-12, 0)
    assert np.allclose(s.source_points, [2, 3])
    assert np.max(s.dissimilarity()) < 1e-9


def test_far_components_form_joint_partition():
    s = gen_gaussian_mixture([(0, 0), (100, 0)], 20, 1.0, 5)
    spec = PartitionSpec.from_labels(s.labels_x, s.labels_y)
    assert check_joint_partition(s.dissimilarity(), spec)[0]


def test_single_rep_threshold_is_exact():
    d = np.random.default_rng(6).uniform(size=(8, 10))
    th = single_rep_threshold_inf(d)
    ell = lambda_max(d).l_star
    E = np.zeros_like(d)
    E[ell] = 1
    above = solve(d, th * 1.02, SolverSettings(mu=1.0))
    below = solve(d, th * 0.98, SolverSettings(mu=1.0))
    assert np.max(np.abs(above.Z - E)) <= 1e-3
    assert np.max(np.abs(below.Z - E)) > 1e-2
    assert single_rep_threshold_inf([[1.0, 2.0]]) == 0
