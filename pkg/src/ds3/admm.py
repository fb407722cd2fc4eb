"""ADMM solver for the row-sparse dissimilarity program.

Solves::

    min_Z  lam * sum_i ||z_i||_p + <D, Z>
    s.t.   every column of Z on the probability simplex (restricted to the
           observed entries of D)

by splitting Z = C and alternating a row-wise prox on Z, a column-wise
simplex projection on C, and a dual ascent step on the multiplier.
"""

import concurrent.futures
import dataclasses
import enum
import logging
import math

import numpy as np

from ds3 import _kernels
from ds3.matrix import as_dissimilarity

log = logging.getLogger(__name__)


class NormP(str, enum.Enum):
    P2 = "2"
    PINF = "inf"

    @classmethod
    def parse(cls, p):
        if isinstance(p, cls):
            return p
        if isinstance(p, str):
            key = p.strip().lower()
            if key in ("2", "l2"):
                return cls.P2
            if key in ("inf", "linf", "infinity"):
                return cls.PINF
        elif p == 2:
            return cls.P2
        elif p == math.inf:
            return cls.PINF
        raise ValueError("p must be 2 or inf, got %r" % (p,))


class Init(str, enum.Enum):
    UNIFORM = "uniform"
    IDENTITY = "identity"


class SolverError(RuntimeError):
    """Raised when the iterates stop being finite."""

    def __init__(self, message, iteration):
        super().__init__("%s at iteration %d" % (message, iteration))
        self.iteration = iteration


@dataclasses.dataclass
class SolverSettings:
    mu: float = 0.1
    eps: float = 1e-7
    max_iter: int = 100000
    p: NormP = NormP.PINF
    init: object = Init.UNIFORM
    workers: int = 1

    def __post_init__(self):
        self.p = NormP.parse(self.p)
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if isinstance(self.init, str):
            self.init = Init(self.init)
        elif not isinstance(self.init, Init):
            self.init = np.asarray(self.init, dtype=np.float64)


@dataclasses.dataclass
class SolverState:
    Z: np.ndarray
    C: np.ndarray
    Lambda: np.ndarray
    iter: int = 0
    error1: float = math.inf
    error2: float = math.inf


@dataclasses.dataclass
class Solution:
    """Result of :func:`solve`.

    ``Z`` is the feasible iterate C at termination; ``Z_admm`` is the prox
    iterate, which differs from ``Z`` by at most ``error1``.
    """

    Z: np.ndarray
    objective: float
    iterations: int
    converged: bool
    residual_history: list
    outliers: np.ndarray = None
    Z_admm: np.ndarray = None
    state: SolverState = None


def row_norms(Z, p):
    p = NormP.parse(p)
    if p is NormP.P2:
        return np.sqrt(np.sum(Z * Z, axis=1))
    return np.max(np.abs(Z), axis=1)


def objective(D, Z, lam, p=NormP.PINF, row_weights=None):
    """lam * sum_i w_i ||z_i||_p + sum over observed (i, j) of d_ij z_ij.

    ``row_weights`` defaults to all ones; the outlier formulation passes 0
    for the unpenalized row.
    """
    D = as_dissimilarity(D)
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != D.shape:
        raise ValueError("Z shape %r does not match D shape %r"
                         % (Z.shape, D.shape))
    norms = row_norms(Z, p)
    if row_weights is not None:
        norms = norms * row_weights
    cost = np.sum(np.where(D.observed, D.values * Z, 0.0))
    return float(lam * np.sum(norms) + cost)


class _Problem:
    """Precomputed per-solve data shared by every iteration.

    Rows (Z prox, dual update) and columns (C projection) are split into
    contiguous blocks, one per worker.  Each block is handled by a compiled
    kernel that releases the GIL; the result for any row or column does not
    depend on the blocking, so output is identical for every worker count.
    """

    def __init__(self, D, lam, settings, row_thresholds=None):
        self.D = as_dissimilarity(D)
        self.settings = settings
        self.lam = float(lam)
        m, n = self.D.shape
        self.shape = (m, n)
        self.cost = np.ascontiguousarray(self.D.values)
        self.has_mask = self.D.mask is not None
        self.observed = (np.ascontiguousarray(self.D.mask) if self.has_mask
                         else np.ones((1, 1), dtype=bool))
        if row_thresholds is None:
            row_thresholds = np.full(m, self.lam / settings.mu)
        self.thresholds = np.ascontiguousarray(row_thresholds,
                                               dtype=np.float64)
        self.z_kernel = (_kernels.z_update_l2 if settings.p is NormP.P2
                         else _kernels.z_update_linf)
        self.workers = settings.workers
        self.row_blocks = _blocks(m, self.workers)
        self.col_blocks = _blocks(n, self.workers)
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = concurrent.futures.ThreadPoolExecutor(self.workers)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _map(self, fn, blocks):
        if self._pool is None or len(blocks) == 1:
            return [fn(lo, hi) for lo, hi in blocks]
        futures = [self._pool.submit(fn, lo, hi) for lo, hi in blocks]
        return [f.result() for f in futures]

    def z_update(self, C, Lam):
        out = np.empty(self.shape)
        inv_mu = 1.0 / self.settings.mu
        self._map(lambda lo, hi: self.z_kernel(C, Lam, inv_mu,
                                               self.thresholds, out, lo, hi),
                  self.row_blocks)
        return out

    def c_update(self, Z, Lam):
        # minimizer of <D, C> - <Lam, C> + mu/2 ||Z - C||^2 over the simplex
        out = np.empty(self.shape)
        inv_mu = 1.0 / self.settings.mu
        self._map(lambda lo, hi: _kernels.c_update(
            Z, Lam, self.cost, inv_mu, self.observed, self.has_mask, out,
            lo, hi), self.col_blocks)
        return out

    def dual_update(self, Z, C, Zprev, Lam):
        """In-place multiplier ascent; returns (error1, error2, finite)."""
        mu = self.settings.mu
        parts = self._map(lambda lo, hi: _kernels.dual_update(
            Z, C, Zprev, Lam, mu, lo, hi), self.row_blocks)
        return (max(p[0] for p in parts), max(p[1] for p in parts),
                all(p[2] for p in parts))


def _blocks(n, workers):
    k = max(1, min(workers, n))
    bounds = [round(i * n / k) for i in range(k + 1)]
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def initial_state(D, settings):
    D = as_dissimilarity(D)
    m, n = D.shape
    obs = D.observed
    init = settings.init
    if isinstance(init, np.ndarray):
        if init.shape != (m, n):
            raise ValueError("initial matrix shape %r does not match D shape %r"
                             % (init.shape, (m, n)))
        Z = init.astype(np.float64, copy=True)
    elif init is Init.IDENTITY:
        Z = np.eye(m, n)
    else:
        Z = obs / np.sum(obs, axis=0, keepdims=True)
    return SolverState(Z=Z, C=Z.copy(), Lambda=np.zeros((m, n)), iter=0,
                       error1=2 * settings.eps, error2=2 * settings.eps)


def _step(problem, state):
    Z = problem.z_update(state.C, state.Lambda)
    C = problem.c_update(Z, state.Lambda)
    Lam = state.Lambda.copy()
    k = state.iter + 1
    error1, error2, finite = problem.dual_update(Z, C, state.Z, Lam)
    if not finite:
        raise SolverError("non-finite iterate", k)
    return SolverState(Z=Z, C=C, Lambda=Lam, iter=k, error1=error1,
                       error2=error2)


def step(state, D, lam, settings, row_thresholds=None):
    """One full ADMM iteration (Z prox, C projection, dual update)."""
    with _Problem(D, lam, settings, row_thresholds) as problem:
        return _step(problem, state)


def _run(D, lam, settings, row_thresholds=None, row_weights=None,
         warm_start=None):
    D = as_dissimilarity(D)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    state = warm_start if warm_start is not None else initial_state(D, settings)
    history = []
    eps = settings.eps
    with _Problem(D, lam, settings, row_thresholds) as problem:
        while ((state.error1 > eps or state.error2 > eps)
               and state.iter < settings.max_iter):
            state = _step(problem, state)
            history.append((state.error1, state.error2))
    converged = state.error1 <= eps and state.error2 <= eps
    if not converged:
        log.warning("ADMM stopped at max_iter=%d (error1=%.3g, error2=%.3g)",
                    settings.max_iter, state.error1, state.error2)
    Zstar = state.C.copy()
    return Solution(
        Z=Zstar,
        objective=objective(D, Zstar, lam, settings.p, row_weights),
        iterations=state.iter,
        converged=converged,
        residual_history=history,
        Z_admm=state.Z.copy(),
        state=state,
    )


def solve(D, lam, settings=None, warm_start=None):
    """Solve the row-sparse program for dissimilarities ``D`` and weight ``lam``.

    ``warm_start`` may be a :class:`SolverState` (for instance
    ``previous_solution.state``); its residuals are reset so that at least
    one iteration runs.
    """
    settings = settings or SolverSettings()
    if warm_start is not None:
        warm_start = dataclasses.replace(
            warm_start, iter=0, error1=2 * settings.eps,
            error2=2 * settings.eps)
    return _run(D, lam, settings, warm_start=warm_start)
