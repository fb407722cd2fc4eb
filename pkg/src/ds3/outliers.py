"""Outlier-aware selection.

Every target ``j`` gets an extra variable ``e_j`` (the probability that it is
an outlier) priced at ``w_j``.  This is the plain program on the augmented
matrix ``[D; w]`` whose extra row is exempt from the row-sparsity penalty,
realized in the ADMM by giving that row a zero prox threshold.
"""

import dataclasses

import numpy as np

from ds3.admm import SolverSettings, _run
from ds3.matrix import DissimilarityMatrix, as_dissimilarity

OUTLIER_LABEL_THRESHOLD = 0.5


@dataclasses.dataclass(frozen=True)
class OutlierConfig:
    """Exactly one of: constant ``w``, adaptive ``beta``/``tau``, or an
    explicit weight vector ``weights``."""

    w: float = None
    beta: float = None
    tau: float = None
    weights: tuple = None

    def __post_init__(self):
        modes = [self.w is not None,
                 self.beta is not None or self.tau is not None,
                 self.weights is not None]
        if sum(modes) != 1:
            raise ValueError("choose exactly one outlier weight mode")
        if self.w is not None and self.w < 0:
            raise ValueError("w must be nonnegative")
        if modes[1]:
            if self.beta is None or self.tau is None:
                raise ValueError("adaptive weights need both beta and tau")
            if self.beta < 0:
                raise ValueError("beta must be nonnegative")
            if not self.tau > 0:
                raise ValueError("tau must be positive")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if any(x < 0 for x in w):
                raise ValueError("outlier weights must be nonnegative")
            object.__setattr__(self, "weights", w)

    def resolve(self, D):
        D = as_dissimilarity(D)
        n = D.shape[1]
        if self.w is not None:
            return np.full(n, float(self.w))
        if self.weights is not None:
            if len(self.weights) != n:
                raise ValueError("expected %d outlier weights, got %d"
                                 % (n, len(self.weights)))
            return np.array(self.weights)
        return outlier_weights(D, self.beta, self.tau)


@dataclasses.dataclass
class OutlierSolution:
    Z: np.ndarray
    e: np.ndarray
    objective: float
    iterations: int
    converged: bool
    residual_history: list
    weights: np.ndarray
    state: object = None

    @property
    def outlier_labels(self):
        return self.e > OUTLIER_LABEL_THRESHOLD


def outlier_weights(D, beta, tau):
    """w_j = beta * exp(-min_i d_ij / tau), minimum over observed entries."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if not tau > 0:
        raise ValueError("tau must be positive")
    D = as_dissimilarity(D)
    col_min = np.min(np.where(D.observed, D.values, np.inf), axis=0)
    if not np.all(np.isfinite(col_min)):
        raise ValueError("column %d has no observed entries"
                         % np.flatnonzero(~np.isfinite(col_min))[0])
    return beta * np.exp(-col_min / tau)


def augment(D, weights):
    """Stack the outlier cost row under ``D`` (always observed)."""
    D = as_dissimilarity(D)
    values = np.vstack([D.values, np.asarray(weights, dtype=np.float64)])
    mask = None
    if D.mask is not None:
        mask = np.vstack([D.mask, np.ones((1, D.shape[1]), dtype=bool)])
    return DissimilarityMatrix(values, mask, D.scale_factor)


def solve_with_outliers(D, lam, config, settings=None, warm_start=None):
    """Solve the outlier-aware program; returns Z (M x N) and e (length N)."""
    D = as_dissimilarity(D)
    settings = settings or SolverSettings()
    w = config.resolve(D) if isinstance(config, OutlierConfig) else \
        np.asarray(config, dtype=np.float64)
    aug = augment(D, w)
    m = D.shape[0]
    thresholds = np.full(m + 1, float(lam) / settings.mu)
    thresholds[m] = 0.0
    row_weights = np.ones(m + 1)
    row_weights[m] = 0.0
    if isinstance(settings.init, np.ndarray) and settings.init.shape == D.shape:
        start = np.vstack([settings.init, np.zeros((1, D.shape[1]))])
        settings = dataclasses.replace(settings, init=start)
    sol = _run(aug, lam, settings, row_thresholds=thresholds,
               row_weights=row_weights, warm_start=warm_start)
    return OutlierSolution(
        Z=sol.Z[:m].copy(),
        e=sol.Z[m].copy(),
        objective=sol.objective,
        iterations=sol.iterations,
        converged=sol.converged,
        residual_history=sol.residual_history,
        weights=w,
        state=sol.state,
    )
