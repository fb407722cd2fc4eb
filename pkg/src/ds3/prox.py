"""Proximal and projection primitives used by the ADMM updates.

Vector-level functions take a 1-d array.  The ``*_rows`` variants apply the
same operator independently to every row of a 2-d array; the solver uses
those so that a chunk of rows gives bit-identical results whether it is
processed alone or as part of a larger block.
"""

import numpy as np


def _as_vector(v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("expected a 1-d vector, got shape %r" % (v.shape,))
    return v


def _radius_simplex_rows(U, radius):
    """Project each row of nonnegative ``U`` onto {x >= 0, sum x = radius}.

    ``radius`` is a per-row array.  Sort-and-threshold, O(n log n) per row.
    """
    n = U.shape[1]
    srt = -np.sort(-U, axis=1)
    css = np.cumsum(srt, axis=1) - radius[:, None]
    k = np.arange(1, n + 1, dtype=np.float64)
    cond = srt - css / k > 0
    # cond is a true-prefix whose length is the support size; the leading
    # entry always belongs to it even when rounding says otherwise
    rho = np.maximum(np.count_nonzero(cond, axis=1), 1)
    theta = css[np.arange(U.shape[0]), rho - 1] / rho
    return np.maximum(U - theta[:, None], 0.0)


def prox_rows_l2(V, t):
    """Block soft-thresholding of every row: argmin t||z||_2 + 1/2||z - v||^2.

    ``t`` is a scalar or a per-row array of nonnegative thresholds.
    """
    V = np.asarray(V, dtype=np.float64)
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (V.shape[0],))
    norms = np.sqrt(np.sum(V * V, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > t, 1.0 - t / norms, 0.0)
    return V * scale[:, None]


def project_l1_ball_rows(V, r):
    """Project every row onto the l1 ball of radius ``r`` (scalar or per-row)."""
    V = np.asarray(V, dtype=np.float64)
    r = np.broadcast_to(np.asarray(r, dtype=np.float64), (V.shape[0],))
    out = V.copy()
    A = np.abs(V)
    collapsed = r == 0
    out[collapsed] = 0.0
    outside = (np.sum(A, axis=1) > r) & ~collapsed
    if np.any(outside):
        idx = np.flatnonzero(outside)
        proj = _radius_simplex_rows(A[idx], r[idx])
        out[idx] = np.sign(V[idx]) * proj
    return out


def prox_rows_linf(V, t):
    """Row-wise prox of t||.||_inf via the Moreau decomposition.

    prox(v) = v - P_{||.||_1 <= t}(v).  Rows with t = 0 pass through.
    """
    V = np.asarray(V, dtype=np.float64)
    return V - project_l1_ball_rows(V, t)


def project_simplex_rows(V, observed=None):
    """Project every row onto the probability simplex.

    With ``observed`` (boolean, same shape), unobserved coordinates are held
    at zero and the observed sub-vector is projected onto the simplex of its
    own dimension.
    """
    V = np.asarray(V, dtype=np.float64)
    ones = np.ones(V.shape[0])
    if observed is None:
        return _radius_simplex_rows(V, ones)
    observed = np.asarray(observed, dtype=bool)
    n_obs = np.count_nonzero(observed, axis=1)
    if np.any(n_obs == 0):
        raise ValueError("row %d has no observed coordinates"
                         % int(np.flatnonzero(n_obs == 0)[0]))
    # unobserved entries sort strictly below every observed one, so they
    # never enter the support
    floor = np.min(np.where(observed, V, np.inf), axis=1) - 1.0
    W = np.where(observed, V, floor[:, None])
    srt = -np.sort(-W, axis=1)
    css = np.cumsum(srt, axis=1) - 1.0
    k = np.arange(1, V.shape[1] + 1, dtype=np.float64)
    cond = (srt - css / k > 0) & (k[None, :] <= n_obs[:, None])
    rho = np.maximum(np.count_nonzero(cond, axis=1), 1)
    theta = css[np.arange(V.shape[0]), rho - 1] / rho
    return np.where(observed, np.maximum(V - theta[:, None], 0.0), 0.0)


def prox_row_l2(v, t):
    """argmin_z t||z||_2 + 1/2||z - v||_2^2 (zero when ||v||_2 <= t)."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    v = _as_vector(v)
    return prox_rows_l2(v[None, :], t)[0]


def project_l1_ball(v, r):
    """Euclidean projection of ``v`` onto {x : ||x||_1 <= r}."""
    if not r > 0:
        raise ValueError("radius must be positive")
    v = _as_vector(v)
    return project_l1_ball_rows(v[None, :], r)[0]


def prox_row_linf(v, t):
    """argmin_z t||z||_inf + 1/2||z - v||_2^2."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    v = _as_vector(v)
    return prox_rows_linf(v[None, :], t)[0]


def project_simplex(v):
    """Euclidean projection of ``v`` onto {x >= 0, sum x = 1}."""
    v = _as_vector(v)
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    return project_simplex_rows(v[None, :])[0]


def project_simplex_masked(v, observed):
    """Simplex projection restricted to observed coordinates; others are 0."""
    v = _as_vector(v)
    observed = np.asarray(observed, dtype=bool)
    if observed.shape != v.shape:
        raise ValueError("mask shape %r does not match vector shape %r"
                         % (observed.shape, v.shape))
    if not observed.any():
        raise ValueError("all coordinates are unobserved")
    return project_simplex_rows(v[None, :], observed[None, :])[0]
