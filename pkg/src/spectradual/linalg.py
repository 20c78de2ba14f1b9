"""Dense linear maps with cached kernel/range bases and orthogonal projections."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

# Relative singular-value cutoff for all rank decisions.
SVD_RTOL = 1e-10


def null_basis(mat):
    """Orthonormal basis (columns) of the null space of ``mat``."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0 or not np.any(mat):
        return np.eye(mat.shape[1])
    u, s, vh = np.linalg.svd(mat, full_matrices=True)
    cutoff = SVD_RTOL * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].T.copy()


def range_basis(mat):
    """Orthonormal basis (columns) of the column space of ``mat``."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0 or not np.any(mat):
        return np.zeros((mat.shape[0], 0))
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    cutoff = SVD_RTOL * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return u[:, :rank].copy()


def span_basis(vectors):
    """Orthonormal basis of span(vectors) where vectors are rows."""
    arr = np.atleast_2d(np.asarray(vectors, dtype=float))
    return range_basis(arr.T)


def projector(basis):
    """Orthogonal projector onto the span of the given basis columns."""
    basis = np.asarray(basis, dtype=float)
    if basis.size == 0:
        n = basis.shape[0]
        return np.zeros((n, n))
    return basis @ basis.T


def project(basis, x):
    """Project ``x`` onto span(basis columns)."""
    basis = np.asarray(basis, dtype=float)
    if basis.size == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return basis @ (basis.T @ np.asarray(x, dtype=float))


def subspace_contained(inner, outer, tol=1e-9):
    """True when span(inner columns) is contained in span(outer columns)."""
    inner = np.asarray(inner, dtype=float)
    if inner.size == 0:
        return True
    resid = inner - project(outer, inner) if np.asarray(outer).size else inner
    return float(np.max(np.abs(resid))) <= tol


class LinearMap:
    """A dense real matrix together with its transpose and subspace data.

    Kernel and range bases are computed lazily by SVD with a relative
    singular-value threshold of ``SVD_RTOL``.
    """

    def __init__(self, mat):
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        if mat.ndim != 2:
            raise ValueError("matrix must be two dimensional")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        self.mat = mat
        self.rows, self.cols = mat.shape
        self._kernel = None
        self._range = None

    def __repr__(self):
        return f"LinearMap({self.rows}x{self.cols})"

    def apply(self, x):
        return self.mat @ np.asarray(x, dtype=float)

    def apply_transpose(self, y):
        return self.mat.T @ np.asarray(y, dtype=float)

    @property
    def T(self):
        return LinearMap(self.mat.T)

    def kernel_basis(self):
        if self._kernel is None:
            self._kernel = null_basis(self.mat)
        return self._kernel

    def range_basis(self):
        if self._range is None:
            self._range = range_basis(self.mat)
        return self._range

    def project_range(self, y):
        """Orthogonal projection of ``y`` onto Ran(mat)."""
        return project(self.range_basis(), y)

    def to_json(self):
        return [[float(v) for v in row] for row in self.mat]

    @staticmethod
    def from_json(data):
        return LinearMap(np.asarray(data, dtype=float))


class CoordSelect:
    """Implicit coordinate-selection map x -> x[idx] (never densified on hot paths)."""

    def __init__(self, idx, n):
        self.idx = np.asarray(sorted(idx), dtype=int)
        if self.idx.size == 0:
            raise ValueError("empty coordinate selection")
        if self.idx[0] < 0 or self.idx[-1] >= n:
            raise ValueError("selection index out of range")
        self.rows = len(self.idx)
        self.cols = n

    def __repr__(self):
        return f"CoordSelect({list(self.idx)}, n={self.cols})"

    @property
    def mat(self):
        dense = np.zeros((self.rows, self.cols))
        dense[np.arange(self.rows), self.idx] = 1.0
        return dense

    def apply(self, x):
        return np.asarray(x, dtype=float)[self.idx]

    def apply_transpose(self, y):
        out = np.zeros(self.cols)
        out[self.idx] = np.asarray(y, dtype=float)
        return out

    @property
    def T(self):
        return LinearMap(self.mat.T)

    def kernel_basis(self):
        comp = np.setdiff1d(np.arange(self.cols), self.idx)
        basis = np.zeros((self.cols, comp.size))
        basis[comp, np.arange(comp.size)] = 1.0
        return basis

    def range_basis(self):
        return np.eye(self.rows)

    def project_range(self, y):
        return np.asarray(y, dtype=float).copy()


def as_map(obj):
    """Coerce matrices / nested lists to a LinearMap, passing map objects through."""
    if isinstance(obj, (LinearMap, CoordSelect)):
        return obj
    return LinearMap(obj)


# ---------------------------------------------------------------------------
# Exact rational linear algebra (used by the exact certificate path)
# ---------------------------------------------------------------------------

def rational_null_basis(rows):
    """Basis of the null space of a matrix with Fraction entries.

    Rows are sequences of Fractions/ints; returns a list of Fraction vectors
    spanning the kernel (not orthonormal, exact).
    """
    rows = [[Fraction(v) for v in row] for row in rows]
    if not rows:
        return []
    ncols = len(rows[0])
    a = [row[:] for row in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, len(a)):
            if a[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        pv = a[r][c]
        a[r] = [v / pv for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            vec[pc] = -a[ri][fc]
        basis.append(vec)
    return basis
