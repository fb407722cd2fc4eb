"""Regularization thresholds and lambda sweeps.

All argmin/argmax ties resolve to the lowest index.
"""

import dataclasses
import logging

import numpy as np

from ds3.admm import NormP, SolverSettings, solve
from ds3.matrix import as_dissimilarity

log = logging.getLogger(__name__)


class PartitionError(ValueError):
    pass


class AssumptionError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class LambdaMaxResult:
    lambda_max: float
    l_star: int
    degenerate: bool = False


@dataclasses.dataclass(frozen=True)
class MedoidResult:
    c: int
    r: float


@dataclasses.dataclass(frozen=True)
class PartitionSpec:
    """A joint grouping of sources and targets, one (Gx, Gy) pair per group."""

    groups_x: tuple
    groups_y: tuple

    def __post_init__(self):
        gx = tuple(tuple(sorted(int(i) for i in g)) for g in self.groups_x)
        gy = tuple(tuple(sorted(int(j) for j in g)) for g in self.groups_y)
        if len(gx) != len(gy) or not gx:
            raise PartitionError("need the same positive number of source and "
                                 "target groups, got %d and %d"
                                 % (len(gx), len(gy)))
        for k, (a, b) in enumerate(zip(gx, gy)):
            if not a or not b:
                raise PartitionError("group %d is empty" % k)
        flat_x = [i for g in gx for i in g]
        if len(set(flat_x)) != len(flat_x):
            raise PartitionError("source groups overlap")
        flat_y = [j for g in gy for j in g]
        if len(set(flat_y)) != len(flat_y):
            raise PartitionError("target groups overlap")
        object.__setattr__(self, "groups_x", gx)
        object.__setattr__(self, "groups_y", gy)

    @classmethod
    def from_labels(cls, labels_x, labels_y):
        """Group sources and targets that share a label."""
        labels_x = np.asarray(labels_x)
        labels_y = np.asarray(labels_y)
        keys = sorted(set(labels_x.tolist()) | set(labels_y.tolist()))
        return cls(tuple(np.flatnonzero(labels_x == k) for k in keys),
                   tuple(np.flatnonzero(labels_y == k) for k in keys))

    @property
    def n_groups(self):
        return len(self.groups_x)

    def validate(self, shape):
        m, n = shape
        for g in self.groups_x:
            if g[0] < 0 or g[-1] >= m:
                raise PartitionError("source index out of range")
        covered = sorted(j for g in self.groups_y for j in g)
        if covered != list(range(n)):
            raise PartitionError("target groups must cover all %d targets" % n)


def lambda_max(D, p=NormP.PINF):
    """Smallest lambda for which a single representative is guaranteed.

    Returns the threshold together with ``l_star``, the source with the
    smallest dissimilarity row sum.  For p = 2, competitors whose row-sum gap
    to ``l_star`` is zero are skipped.  ``degenerate`` is set when no source
    differs from ``l_star`` (threshold reported as 0).
    """
    D = as_dissimilarity(D)
    p = NormP.parse(p)
    d = D.values
    m, n = d.shape
    sums = d.sum(axis=1)
    l_star = int(np.argmin(sums))
    if m == 1:
        return LambdaMaxResult(0.0, 0)
    diff = np.delete(d - d[l_star], l_star, axis=0)
    if p is NormP.PINF:
        gaps = np.abs(diff).sum(axis=1)
        if not np.any(gaps > 0):
            return LambdaMaxResult(0.0, l_star, degenerate=True)
        return LambdaMaxResult(float(gaps.max() / 2.0), l_star)
    gaps = diff.sum(axis=1)
    ok = gaps > 0
    if not ok.any():
        return LambdaMaxResult(0.0, l_star, degenerate=True)
    ratios = np.sqrt(n) / 2.0 * np.sum(diff[ok] ** 2, axis=1) / gaps[ok]
    return LambdaMaxResult(float(ratios.max()), l_star)


def lambda_min(D):
    """Threshold at or below which the identity is optimal (square D only).

    Requires every diagonal entry to be strictly smaller than the rest of
    its column.
    """
    D = as_dissimilarity(D)
    d = D.values
    m, n = d.shape
    if m != n:
        raise AssumptionError("lambda_min needs a square matrix, got %dx%d"
                              % (m, n))
    if m == 1:
        raise AssumptionError("lambda_min needs at least two points")
    off = d + np.diag(np.full(n, np.inf))
    gaps = off.min(axis=0) - np.diag(d)
    if np.any(gaps <= 0):
        j = int(np.flatnonzero(gaps <= 0)[0])
        raise AssumptionError("column %d: diagonal entry is not strictly "
                              "smaller than the off-diagonal ones" % j)
    return float(gaps.min())


def medoid(D, Gx, Gy):
    """Minimax source of group ``Gx`` with respect to targets ``Gy``."""
    D = as_dissimilarity(D)
    Gx = np.asarray(sorted(Gx), dtype=int)
    Gy = np.asarray(sorted(Gy), dtype=int)
    if Gx.size == 0 or Gy.size == 0:
        raise PartitionError("medoid of an empty group")
    worst = D.values[np.ix_(Gx, Gy)].max(axis=1)
    k = int(np.argmin(worst))
    return MedoidResult(int(Gx[k]), float(worst[k]))


def _foreign_min(D, spec, k):
    """For each target of group k, its smallest dissimilarity to sources
    of the other groups (inf when there are none)."""
    others = [i for kk, g in enumerate(spec.groups_x) if kk != k for i in g]
    Gy = list(spec.groups_y[k])
    if not others:
        return np.full(len(Gy), np.inf)
    return D.values[np.ix_(others, Gy)].min(axis=0)


def check_joint_partition(D, spec):
    """Check the strict separation condition for every group.

    Returns ``(ok, violations)`` where each violation is a tuple
    ``(k, j, d_medoid, foreign_min)``.
    """
    D = as_dissimilarity(D)
    spec.validate(D.shape)
    violations = []
    for k in range(spec.n_groups):
        c = medoid(D, spec.groups_x[k], spec.groups_y[k]).c
        near = D.values[c, list(spec.groups_y[k])]
        far = _foreign_min(D, spec, k)
        for j, a, b in zip(spec.groups_y[k], near, far):
            if not a < b:
                violations.append((k, j, float(a), float(b)))
    return not violations, violations


def lambda_g(D, spec):
    """Largest-margin threshold below which groups keep to themselves."""
    D = as_dissimilarity(D)
    ok, violations = check_joint_partition(D, spec)
    if not ok:
        k, j, a, b = violations[0]
        raise PartitionError("not a joint partition: target %d of group %d "
                             "has medoid dissimilarity %g >= foreign %g "
                             "(%d violations)" % (j, k, a, b, len(violations)))
    best = np.inf
    for k in range(spec.n_groups):
        c = medoid(D, spec.groups_x[k], spec.groups_y[k]).c
        near = D.values[c, list(spec.groups_y[k])]
        best = min(best, float(np.min(_foreign_min(D, spec, k) - near)))
    return best


def group_lambda_max(D, spec, p=NormP.PINF):
    """Per-group single-representative thresholds on the diagonal blocks."""
    D = as_dissimilarity(D)
    return [lambda_max(D.values[np.ix_(gx, gy)], p).lambda_max
            for gx, gy in zip(spec.groups_x, spec.groups_y)]


def sweep(D, p, alphas, settings=None):
    """Solve at lambda = alpha * lambda_max for each alpha, warm-starting
    each solve from the previous one.  Returns a list of
    ``(alpha, lambda, Solution)``."""
    D = as_dissimilarity(D)
    settings = settings or SolverSettings(p=p)
    settings = dataclasses.replace(settings, p=NormP.parse(p))
    if any(not a > 0 for a in alphas):
        raise ValueError("alphas must be positive")
    lmax = lambda_max(D, settings.p).lambda_max
    out = []
    prev = None
    for a in alphas:
        lam = a * lmax
        sol = solve(D, lam, settings, warm_start=prev)
        log.info("alpha=%g lambda=%g iterations=%d", a, lam, sol.iterations)
        out.append((a, lam, sol))
        prev = sol.state
    return out
