"""Independent verification tools.

Nothing here calls into the ADMM kernels: the reference solver is projected
subgradient descent with its own sort-based projection,
and the facility-location oracle is plain enumeration.
"""

import dataclasses

import numba
import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from ds3 import prox
from ds3.admm import NormP, SolverState, objective, row_norms
from ds3.matrix import as_dissimilarity

MAX_FACILITY_SOURCES = 15


@dataclasses.dataclass
class SyntheticScene:
    source_points: np.ndarray
    target_points: np.ndarray
    labels_x: np.ndarray
    labels_y: np.ndarray
    seed: int
    identical: bool = True

    def dissimilarity(self):
        """Euclidean distances, sources along rows and targets along columns."""
        return euclidean_dissimilarity(self.source_points, self.target_points)


@dataclasses.dataclass
class OracleReport:
    objective_admm: float
    objective_reference: float
    facility_optimum: float = None
    certificate_pass: bool = None

    @property
    def gap(self):
        return abs(self.objective_admm - self.objective_reference)


def euclidean_dissimilarity(X, Y=None):
    X = np.asarray(X, dtype=np.float64)
    Y = X if Y is None else np.asarray(Y, dtype=np.float64)
    return cdist(X, Y)


def _draw(rng, means, count, std):
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 2 or means.shape[0] == 0:
        raise ValueError("means must be a nonempty list of points")
    pts = [rng.normal(loc=mu, scale=std, size=(count, means.shape[1]))
           for mu in means]
    labels = np.repeat(np.arange(len(means)), count)
    return np.vstack(pts), labels


def gen_gaussian_mixture(means, count_per_component, std, seed,
                         target_means=None):
    """Draw ``count_per_component`` points around each mean.

    With ``target_means=None`` the target set is the source set itself.
    Otherwise targets are drawn independently around ``target_means``;
    target labels then index into ``target_means``.
    """
    if not std > 0:
        raise ValueError("std must be positive")
    if count_per_component < 1:
        raise ValueError("count_per_component must be positive")
    rng = np.random.default_rng(seed)
    src, lx = _draw(rng, means, count_per_component, std)
    if target_means is None:
        return SyntheticScene(src, src, lx, lx, seed, identical=True)
    tgt, ly = _draw(rng, target_means, count_per_component, std)
    return SyntheticScene(src, tgt, lx, ly, seed, identical=False)


@numba.njit(cache=True)
def _project_observed(v, obs):
    """Sort-based simplex projection of the observed entries of ``v``."""
    u = np.sort(v[obs])[::-1]
    css = 0.0
    theta = 0.0
    for k in range(u.shape[0]):
        css += u[k]
        c = (css - 1.0) / (k + 1)
        if u[k] - c > 0:
            theta = c
    out = np.zeros(v.shape[0])
    for i in range(v.shape[0]):
        if obs[i]:
            out[i] = max(v[i] - theta, 0.0)
    return out


@numba.njit(cache=True)
def _subgradient_descent(d, obs, lam, p2, iters, a):
    m, n = d.shape
    Z = np.zeros((m, n))
    for j in range(n):
        Z[:, j] = _project_observed(np.zeros(m), obs[:, j])
    best = Z.copy()
    best_obj = np.inf
    G = np.empty((m, n))
    for k in range(1, iters + 1):
        obj = 0.0
        for i in range(m):
            if p2:
                s = 0.0
                for j in range(n):
                    s += Z[i, j] * Z[i, j]
                nrm = np.sqrt(s)
                obj += lam * nrm
                for j in range(n):
                    g = Z[i, j] / nrm if nrm > 0 else 0.0
                    G[i, j] = lam * g + d[i, j]
            else:
                top = 0.0
                jt = 0
                for j in range(n):
                    if Z[i, j] > top:
                        top = Z[i, j]
                        jt = j
                obj += lam * top
                for j in range(n):
                    G[i, j] = d[i, j]
                if top > 0:
                    G[i, jt] += lam
            for j in range(n):
                obj += d[i, j] * Z[i, j]
        if obj < best_obj:
            best_obj = obj
            best[:, :] = Z
        st = a / np.sqrt(k)
        for j in range(n):
            Z[:, j] = _project_observed(Z[:, j] - st * G[:, j], obs[:, j])
    return best, best_obj


def reference_solve(D, lam, p=NormP.PINF, iters=200000, step=None):
    """Projected subgradient descent on the convex program.

    Step sizes are ``step / sqrt(k)`` with ``step`` defaulting to
    ``0.3 * max|D|``; every iterate is projected column-wise onto the simplex
    of observed entries.  Returns the best iterate seen and its objective.
    """
    D = as_dissimilarity(D)
    p = NormP.parse(p)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if step is None:
        peak = float(np.max(np.abs(D.values)))
        step = 0.3 * (peak if peak > 0 else 1.0)
    best, _ = _subgradient_descent(np.ascontiguousarray(D.values), D.observed,
                                   float(lam), p is NormP.P2, int(iters),
                                   float(step))
    return best, objective(D, best, lam, p)


def single_rep_threshold_inf(D, l_star=None):
    """Smallest lam at which one row of ``D`` carries the whole optimum (p=inf).

    With s = 1/lam and delta_i = d_i - d_l, the all-on-row-l matrix is optimal
    iff some v in the simplex satisfies sum_j max(v_j - s delta_ij, 0) <= 1
    for every other row i.  The largest feasible s is a linear program.
    Fully observed D only; ``l_star`` defaults to the smallest row sum.
    Returns 0 when M = 1 and inf when no finite lam works.
    """
    D = as_dissimilarity(D)
    if D.mask is not None:
        raise ValueError("fully observed matrix required")
    d = D.values
    m, n = d.shape
    if l_star is None:
        l_star = int(np.argmin(d.sum(axis=1)))
    if m == 1:
        return 0.0
    others = [i for i in range(m) if i != l_star]
    delta = d[others] - d[l_star]
    k = len(others)
    # variables: s, v (n), t (k x n) with t_aj >= v_j - s delta_aj, t >= 0
    nv = 1 + n + k * n
    cost = np.zeros(nv)
    cost[0] = -1.0
    r = np.arange(k * n)
    t_cols = 1 + n + r
    gap = sparse.csr_matrix(
        (np.concatenate([-delta.ravel(), np.ones(k * n), -np.ones(k * n)]),
         (np.tile(r, 3), np.concatenate([np.zeros(k * n, int),
                                         1 + np.tile(np.arange(n), k),
                                         t_cols]))),
        shape=(k * n, nv))
    budget = sparse.csr_matrix(
        (np.ones(k * n), (np.repeat(np.arange(k), n), t_cols)), shape=(k, nv))
    A_ub = sparse.vstack([gap, budget]).tocsr()
    rhs = np.concatenate([np.zeros(k * n), np.ones(k)])
    eq = sparse.csr_matrix((np.ones(n), (np.zeros(n, int), 1 + np.arange(n))),
                           shape=(1, nv))
    res = linprog(cost, A_ub=A_ub, b_ub=rhs, A_eq=eq,
                  b_eq=[1.0], bounds=[(0, None)] * nv, method="highs")
    if res.status == 3:
        return 0.0
    if res.status != 0:
        raise RuntimeError("threshold LP failed: %s" % res.message)
    s = res.x[0]
    return np.inf if s <= 0 else 1.0 / s


def brute_force_facility(D, lam):
    """Exact integral optimum: min over nonempty S of lam|S| + sum_j min_S d_ij.

    Returns ``(sorted source indices, objective)``.  Fully observed D only.
    """
    D = as_dissimilarity(D)
    d = D.values
    m, n = d.shape
    if m > MAX_FACILITY_SOURCES:
        raise ValueError("enumeration limited to %d sources, got %d"
                         % (MAX_FACILITY_SOURCES, m))
    colmin = np.empty((1 << m, n))
    colmin[0] = np.inf
    size = np.zeros(1 << m, dtype=int)
    best_mask, best_obj = 0, np.inf
    for mask in range(1, 1 << m):
        low = mask & -mask
        i = low.bit_length() - 1
        colmin[mask] = np.minimum(colmin[mask ^ low], d[i])
        size[mask] = size[mask ^ low] + 1
        obj = lam * size[mask] + colmin[mask].sum()
        if obj < best_obj:
            best_mask, best_obj = mask, obj
    subset = [i for i in range(m) if best_mask >> i & 1]
    return subset, float(best_obj)


def l2_subgradient_ok(v, z, t, tol=1e-9):
    """Does (v - z)/t lie in the subdifferential of ||.||_2 at z?"""
    v = np.asarray(v, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    nz = np.linalg.norm(z)
    if nz == 0:
        return np.linalg.norm(v) <= t * (1 + tol) + tol
    u = (v - z) / t
    return np.max(np.abs(u - z / nz)) <= tol


def linf_subgradient_ok(v, z, t, tol=1e-9):
    """Does (v - z)/t lie in the subdifferential of ||.||_inf at z?

    At z != 0 that set is the l1 unit sphere restricted to the coordinates
    attaining max|z|, with signs agreeing with z.
    """
    v = np.asarray(v, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    top = np.max(np.abs(z))
    if top == 0:
        return np.sum(np.abs(v)) <= t * (1 + tol) + tol
    u = (v - z) / t
    active = np.abs(z) >= top - tol * max(1.0, top)
    if np.any(np.abs(u[~active]) > tol):
        return False
    if np.any(u[active] * np.sign(z[active]) < -tol):
        return False
    return abs(np.sum(np.abs(u)) - 1.0) <= tol


def certificate_check(D, Z, lam, p=NormP.PINF, tol=1e-5, Lambda=None,
                      mu=0.1, free_rows=()):
    """Fixed-point and subgradient certificate for a candidate optimum.

    One ADMM step is taken from (Z, C = Z, Lambda).  ``Lambda`` should be the
    multiplier of the converged run (``solution.state.Lambda``); when omitted
    it is set to minus lam times a canonical subgradient of each nonzero row,
    which suffices for problems whose dual is pinned down by Z (e.g. 1 x 1).
    The step must move Z by less than ``tol`` and each row prox must satisfy
    its subgradient condition.  The step here is written out with the
    sort-based projections, independently of the solver kernels.
    Rows listed in ``free_rows`` carry no sparsity penalty (the outlier row
    of an augmented problem) and get an identity prox.
    """
    D = as_dissimilarity(D)
    p = NormP.parse(p)
    Z = np.asarray(Z, dtype=np.float64)
    if Lambda is None:
        if p is NormP.P2:
            norms = row_norms(Z, p)
            with np.errstate(invalid="ignore", divide="ignore"):
                G = np.where(norms[:, None] > 0, Z / norms[:, None], 0.0)
        else:
            G = np.zeros_like(Z)
            for i, row in enumerate(Z):
                top = np.max(np.abs(row))
                if top > 0:
                    act = np.abs(row) == top
                    G[i, act] = np.sign(row[act]) / act.sum()
        Lambda = -lam * G
    t = np.full(Z.shape[0], lam / mu)
    t[list(free_rows)] = 0.0
    V = Z - Lambda / mu
    if p is NormP.P2:
        Znew = prox.prox_rows_l2(V, t)
        sub_ok = l2_subgradient_ok
    else:
        Znew = prox.prox_rows_linf(V, t)
        sub_ok = linf_subgradient_ok
    obs_t = None if D.mask is None else np.ascontiguousarray(D.mask.T)
    Cnew = prox.project_simplex_rows((Znew + (Lambda - D.values) / mu).T,
                                     obs_t).T
    if max(np.max(np.abs(Znew - Z)), np.max(np.abs(Cnew - Z))) >= tol:
        return False
    for i in range(Z.shape[0]):
        if t[i] > 0 and not sub_ok(V[i], Znew[i], t[i], tol=max(tol, 1e-9)):
            return False
    return True


def certificate_from_state(D, state: SolverState, lam, p, tol=1e-5, mu=0.1,
                           free_rows=()):
    """:func:`certificate_check` on the feasible iterate of a solver state."""
    return certificate_check(D, state.C, lam, p, tol, Lambda=state.Lambda,
                             mu=mu, free_rows=free_rows)
