"""Dissimilarity matrices: masking, normalization and on-disk formats.

Two file formats are supported.

CSV
    Comma-separated reals, one matrix row per line.  ``nan`` (any case)
    marks an unobserved entry.

Binary
    ``b"DS3M"``, u32 version (= 1), u64 rows, u64 cols, rows*cols
    little-endian float64 values in row-major order, then a u8 flag.  When the
    flag is 1 a mask of rows*cols bytes follows (1 = observed).
"""

import dataclasses
import math
import struct

import numpy as np

MAGIC = b"DS3M"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


class MatrixFormatError(ValueError):
    """Raised when a matrix file cannot be parsed.

    ``row`` and ``col`` locate the offending cell when that is meaningful
    (zero-based; ``None`` otherwise).
    """

    def __init__(self, message, row=None, col=None):
        loc = []
        if row is not None:
            loc.append("row %d" % row)
        if col is not None:
            loc.append("column %d" % col)
        if loc:
            message = "%s (%s)" % (message, ", ".join(loc))
        super().__init__(message)
        self.row = row
        self.col = col


@dataclasses.dataclass(frozen=True)
class DissimilarityMatrix:
    """An M x N dissimilarity matrix with an optional observation mask.

    ``values[i, j]`` is the cost of source ``i`` representing target ``j``.
    ``mask[i, j]`` is True when the entry is observed; ``None`` means fully
    observed.  Unobserved cells of ``values`` are stored as 0 and never read.
    ``scale_factor`` is the divisor applied by :func:`normalize`.
    """

    values: np.ndarray
    mask: np.ndarray = None
    scale_factor: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("dissimilarities must be a nonempty 2-d array, got "
                             "shape %r" % (values.shape,))
        mask = self.mask
        if mask is not None:
            mask = np.array(mask, dtype=bool, copy=True)
            if mask.shape != values.shape:
                raise ValueError("mask shape %r does not match values shape %r"
                                 % (mask.shape, values.shape))
            empty = np.flatnonzero(~mask.any(axis=0))
            if empty.size:
                raise ValueError("target column %d has no observed entries"
                                 % empty[0])
            if mask.all():
                mask = None
            else:
                values[~mask] = 0.0
        bad = ~np.isfinite(values)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValueError("non-finite dissimilarity at (%d, %d)" % (i, j))
        if not self.scale_factor > 0:
            raise ValueError("scale_factor must be positive")
        values.setflags(write=False)
        if mask is not None:
            mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "scale_factor", float(self.scale_factor))

    @property
    def shape(self):
        return self.values.shape

    @property
    def observed(self):
        """Boolean observation mask, materialized even when fully observed."""
        if self.mask is None:
            return np.ones(self.values.shape, dtype=bool)
        return self.mask

    def with_values(self, values, scale_factor=None):
        return DissimilarityMatrix(
            values, self.mask,
            self.scale_factor if scale_factor is None else scale_factor)


def as_dissimilarity(D):
    """Coerce an array-like or DissimilarityMatrix to DissimilarityMatrix."""
    if isinstance(D, DissimilarityMatrix):
        return D
    return DissimilarityMatrix(D)


def normalize(D):
    """Divide observed entries by the largest observed absolute value.

    The accumulated divisor is recorded in ``scale_factor``.  An all-zero
    matrix is returned unchanged.
    """
    D = as_dissimilarity(D)
    peak = float(np.max(np.abs(D.values[D.observed])))
    if peak == 0.0:
        return D
    return D.with_values(D.values / peak, D.scale_factor * peak)


def row_view(D, i):
    """Read-only view of source row ``i`` (no copy)."""
    D = as_dissimilarity(D)
    if not 0 <= i < D.shape[0]:
        raise IndexError("row %d out of range for %d rows" % (i, D.shape[0]))
    return D.values[i]


def col_view(D, j):
    """Read-only strided view of target column ``j`` (no copy)."""
    D = as_dissimilarity(D)
    if not 0 <= j < D.shape[1]:
        raise IndexError("column %d out of range for %d columns"
                         % (j, D.shape[1]))
    return D.values[:, j]


def _parse_csv(text):
    rows = []
    mask_rows = []
    width = None
    for lineno, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise MatrixFormatError(
                "ragged row: expected %d cells, found %d" % (width, len(cells)),
                row=len(rows))
        vals = []
        obs = []
        for col, cell in enumerate(cells):
            cell = cell.strip()
            if cell.lower() == "nan":
                vals.append(0.0)
                obs.append(False)
                continue
            try:
                x = float(cell)
            except ValueError:
                raise MatrixFormatError("non-numeric cell %r" % cell,
                                        row=len(rows), col=col) from None
            if not math.isfinite(x):
                raise MatrixFormatError("non-finite cell %r" % cell,
                                        row=len(rows), col=col)
            vals.append(x)
            obs.append(True)
        rows.append(vals)
        mask_rows.append(obs)
    if not rows:
        raise MatrixFormatError("empty matrix file")
    values = np.array(rows, dtype=np.float64)
    mask = np.array(mask_rows, dtype=bool)
    empty = np.flatnonzero(~mask.any(axis=0))
    if empty.size:
        raise MatrixFormatError("column has no observed entries",
                                col=int(empty[0]))
    return DissimilarityMatrix(values, None if mask.all() else mask)


def _parse_bin(blob):
    if len(blob) < _HEADER.size:
        raise MatrixFormatError("truncated header (%d bytes)" % len(blob))
    magic, version, m, n = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MatrixFormatError("bad magic %r" % magic)
    if version != VERSION:
        raise MatrixFormatError("unsupported version %d" % version)
    if m < 1 or n < 1:
        raise MatrixFormatError("empty matrix %dx%d" % (m, n))
    off = _HEADER.size
    nbytes = 8 * m * n
    if len(blob) < off + nbytes + 1:
        raise MatrixFormatError("truncated payload for %dx%d matrix" % (m, n))
    values = np.frombuffer(blob, dtype="<f8", count=m * n, offset=off)
    values = values.reshape(m, n).astype(np.float64)
    off += nbytes
    flag = blob[off]
    off += 1
    mask = None
    if flag == 1:
        if len(blob) < off + m * n:
            raise MatrixFormatError("truncated mask")
        mask = np.frombuffer(blob, dtype=np.uint8, count=m * n, offset=off)
        mask = mask.reshape(m, n).astype(bool)
    elif flag != 0:
        raise MatrixFormatError("bad mask flag %d" % flag)
    obs = np.ones((m, n), dtype=bool) if mask is None else mask
    bad = np.argwhere(~np.isfinite(values) & obs)
    if bad.size:
        raise MatrixFormatError("non-finite value", row=int(bad[0][0]),
                                col=int(bad[0][1]))
    values = np.where(obs, values, 0.0)
    empty = np.flatnonzero(~obs.any(axis=0))
    if empty.size:
        raise MatrixFormatError("column has no observed entries",
                                col=int(empty[0]))
    return DissimilarityMatrix(values, mask)


def load_matrix(path, format="csv"):
    """Read a dissimilarity matrix from ``path`` (``format`` is csv or bin)."""
    if format == "csv":
        with open(path, "r", encoding="utf-8") as fh:
            return _parse_csv(fh.read())
    if format == "bin":
        with open(path, "rb") as fh:
            return _parse_bin(fh.read())
    raise ValueError("unknown matrix format %r" % format)


def save_matrix(D, path, format="csv"):
    """Write ``D`` in the given format.  CSV uses repr-exact floats."""
    D = as_dissimilarity(D)
    m, n = D.shape
    if format == "csv":
        obs = D.observed
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(m):
                fh.write(",".join(repr(float(D.values[i, j])) if obs[i, j]
                                  else "nan" for j in range(n)))
                fh.write("\n")
        return
    if format == "bin":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, m, n))
            fh.write(np.ascontiguousarray(D.values, dtype="<f8").tobytes())
            if D.mask is None:
                fh.write(b"\x00")
            else:
                fh.write(b"\x01")
                fh.write(D.mask.astype(np.uint8).tobytes())
        return
    raise ValueError("unknown matrix format %r" % format)
