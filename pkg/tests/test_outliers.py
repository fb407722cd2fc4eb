import numpy as np
import pytest

from ds3.admm import SolverSettings, solve
from ds3.outliers import (OutlierConfig, augment, outlier_weights,
                          solve_with_outliers)
from ds3.testbed import reference_solve


def test_weight_examples():
    assert outlier_weights([[0.0]], 1, 1)[0] == 1
    assert outlier_weights([[1.0]], 2, 0.5)[0] == pytest.approx(2 * np.exp(-2))
    assert outlier_weights([[1e4]], 1, 1)[0] < 1e-300


def test_weights_use_observed_minimum():
    from ds3.matrix import DissimilarityMatrix
    D = DissimilarityMatrix([[0.0, 3.0], [1.0, 2.0]], mask=[[0, 1], [1, 1]])
    assert np.allclose(outlier_weights(D, 1, 1), np.exp([-1.0, -2.0]))


def test_config_modes():
    with pytest.raises(ValueError):
        OutlierConfig()
    with pytest.raises(ValueError):
        OutlierConfig(w=1, beta=1, tau=1)
    with pytest.raises(ValueError):
        OutlierConfig(beta=1)
    with pytest.raises(ValueError):
        OutlierConfig(beta=1, tau=0)
    with pytest.raises(ValueError):
        OutlierConfig(w=-1)
    with pytest.raises(ValueError):
        OutlierConfig(weights=(1, -1))
    d = np.array([[0.0, 2.0]])
    assert np.array_equal(OutlierConfig(w=0.3).resolve(d), [0.3, 0.3])
    assert np.array_equal(OutlierConfig(weights=(1, 2)).resolve(d), [1, 2])
    with pytest.raises(ValueError):
        OutlierConfig(weights=(1,)).resolve(d)


def test_augment_adds_observed_row():
    from ds3.matrix import DissimilarityMatrix
    D = DissimilarityMatrix([[1.0, 2.0]], mask=None)
    A = augment(D, [5, 6])
    assert np.array_equal(A.values, [[1, 2], [5, 6]])


def test_zero_weight_everything_is_outlier():
    d = np.random.default_rng(0).uniform(size=(3, 3))
    sol = solve_with_outliers(d, 0.2, OutlierConfig(w=0.0))
    assert np.allclose(sol.e, 1, atol=1e-6)
    # the reference agrees on the augmented program
    aug = np.vstack([d, np.zeros(3)])
    _, ref = reference_solve(aug, 0.0)
    assert sol.objective == pytest.approx(ref, abs=1e-6)


def test_huge_weight_matches_plain_solve():
    d = np.random.default_rng(1).uniform(size=(4, 4))
    lam = 0.3
    sol = solve_with_outliers(d, lam, OutlierConfig(w=1e3 * d.max()))
    plain = solve(d, lam)
    assert np.max(sol.e) <= 1e-6
    assert np.max(np.abs(sol.Z - plain.Z)) <= 1e-3


@pytest.mark.parametrize("p", ["2", "inf"])
def test_mixed_constraint_exact(p):
    d = np.random.default_rng(2).uniform(size=(6, 8))
    sol = solve_with_outliers(d, 0.2, OutlierConfig(beta=1, tau=0.3),
                              SolverSettings(p=p))
    assert sol.converged
    assert np.all(np.abs(sol.Z.sum(axis=0) + sol.e - 1) <= 1e-9)
    assert np.all(sol.Z >= 0) and np.all(sol.e >= 0)
    assert np.array_equal(sol.outlier_labels, sol.e > 0.5)


def test_raising_weights_never_adds_outliers():
    d = np.random.default_rng(3).uniform(size=(6, 8))
    totals = [solve_with_outliers(d, 0.2, OutlierConfig(w=w)).e.sum()
              for w in (0.1, 0.3, 0.6)]
    assert totals[0] >= totals[1] - 1e-6 >= totals[2] - 2e-6


def test_outlier_row_is_unpenalized():
    # with a penalized e-row, lam * max(e) would be added to the objective
    d = np.array([[0.0, 5.0], [5.0, 0.0]])
    sol = solve_with_outliers(d, 0.5, OutlierConfig(w=1.0))
    assert np.allclose(sol.e, 0, atol=1e-6)
    assert sol.objective == pytest.approx(1.0, abs=1e-6)
    sol = solve_with_outliers(d, 0.5, OutlierConfig(weights=(0.1, 9.0)))
    assert sol.e[0] == pytest.approx(1, abs=1e-6)
    assert sol.objective == pytest.approx(0.1 + 0.5, abs=1e-6)


def test_certificate_on_augmented_problem():
    from ds3.testbed import certificate_from_state
    d = np.random.default_rng(4).uniform(size=(5, 6))
    config = OutlierConfig(w=0.4)
    sol = solve_with_outliers(d, 0.2, config)
    aug = augment(d, config.resolve(d))
    assert certificate_from_state(aug, sol.state, 0.2, "inf", free_rows=(5,))
    # treating the outlier row as penalized breaks the certificate
    assert not certificate_from_state(aug, sol.state, 0.2, "inf")
