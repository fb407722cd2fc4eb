"""Turning a solved assignment matrix into representatives and clusters."""

import dataclasses

import numpy as np
from scipy.optimize import linear_sum_assignment

from ds3.matrix import as_dissimilarity

MAX_LABELS = 20


@dataclasses.dataclass(frozen=True)
class RepresentativeSet:
    indices: tuple
    row_norms: np.ndarray

    def __len__(self):
        return len(self.indices)


def extract_representatives(Z, threshold_fraction=0.01):
    """Rows whose l_inf norm exceeds ``threshold_fraction`` of the largest."""
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    Z = np.asarray(Z, dtype=np.float64)
    norms = np.max(np.abs(Z), axis=1)
    peak = norms.max()
    if not peak > 0:
        raise ValueError("assignment matrix is identically zero")
    idx = np.flatnonzero(norms > threshold_fraction * peak)
    return RepresentativeSet(tuple(int(i) for i in idx), norms)


def _rep_indices(reps):
    if isinstance(reps, RepresentativeSet):
        reps = reps.indices
    reps = np.asarray(sorted(int(r) for r in reps), dtype=int)
    if reps.size == 0:
        raise ValueError("no representatives given")
    return reps


def hard_assign(D, reps):
    """Map every target to its least-dissimilar representative.

    Unobserved entries are never chosen; ties go to the lowest source index.
    """
    D = as_dissimilarity(D)
    reps = _rep_indices(reps)
    sub = np.where(D.observed[reps], D.values[reps], np.inf)
    best = np.argmin(sub, axis=0)
    lost = np.flatnonzero(~np.isfinite(sub[best, np.arange(sub.shape[1])]))
    if lost.size:
        raise ValueError("target %d has no observed dissimilarity to any "
                         "representative" % lost[0])
    return reps[best]


def soft_assign(Z, reps, D=None):
    """Restrict ``Z`` to representative rows and renormalize each column.

    A column with no mass on the representatives falls back to a one-hot
    vector at its nearest representative, which needs ``D``.
    """
    Z = np.asarray(Z, dtype=np.float64)
    reps = _rep_indices(reps)
    out = np.zeros_like(Z)
    out[reps] = np.clip(Z[reps], 0.0, None)
    mass = out.sum(axis=0)
    empty = mass <= 0
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(empty, 0.0, out / mass)
    if empty.any():
        if D is None:
            raise ValueError("columns %s carry no representative mass; pass D "
                             "for the nearest-representative fallback"
                             % np.flatnonzero(empty).tolist())
        nearest = hard_assign(D, reps)
        cols = np.flatnonzero(empty)
        out[nearest[cols], cols] = 1.0
    return out


def clustering_error(predicted, truth):
    """Percentage of mislabeled points under the best label matching.

    Labels are matched one-to-one between the two alphabets (the larger
    alphabet leaves some labels unmatched, and their points count as errors).
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError("label vectors differ in length")
    if predicted.size == 0:
        return 0.0
    pk, pinv = np.unique(predicted, return_inverse=True)
    tk, tinv = np.unique(truth, return_inverse=True)
    if max(len(pk), len(tk)) > MAX_LABELS:
        raise ValueError("label alphabets are limited to %d symbols"
                         % MAX_LABELS)
    counts = np.zeros((len(pk), len(tk)), dtype=np.int64)
    np.add.at(counts, (pinv.ravel(), tinv.ravel()), 1)
    rows, cols = linear_sum_assignment(counts, maximize=True)
    agree = counts[rows, cols].sum()
    return 100.0 * (1.0 - agree / predicted.size)

