"""Label smoothing via eigenfunctions of the density-weighted graph Laplacian.

The expensive n x n Laplacian eigenvector problem is replaced, one feature
dimension at a time, by a b x b generalized problem on a density histogram
(b bins << n pixels):

    (Dt - P W P) g = sigma * P Dh g

with W the Gaussian affinity between bin centers, P the diagonal of bin
probabilities, Dt the diagonal column sums of P W P, and Dh the diagonal
column sums of P W. The m smallest-eigenvalue solutions across all dimensions
are linearly interpolated back to the pixels to form approximate eigenvectors
U, and the smoothing field is f = U a, where a solves the m x m system

    (Sigma + U^T Lam U) a = U^T Lam y

for labels y in {+1, -1} with penalty weight lambda on labeled pixels. The
matrix Lam is diagonal with only l << n nonzero entries, so U^T Lam U is
assembled from the labeled rows of U alone, never materializing Lam.

``solve_exact_eigenvectors`` provides the dense n x n route; it is the oracle
and the timing baseline, guarded to small n.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateDataError, NumericError

log = logging.getLogger(__name__)

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

DEFAULT_BINS = 50
DEFAULT_LAMBDA = 100.0

_PROB_FLOOR_SCALE = 1e-10  # floored at this / b to keep P Dh invertible
_CONSTANT_TOL = 1e-6


@dataclass(frozen=True)
class DensityHistogram:
    """Equal-width histogram of one feature dimension; probs sum to 1."""

    bin_centers: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if self.bin_centers.ndim != 1 or self.bin_centers.shape != self.probs.shape:
            raise ValueError("centers/probs shape mismatch")
        if len(self.bin_centers) < 2:
            raise ValueError("need at least 2 bins")
        if np.any(np.diff(self.bin_centers) <= 0):
            raise ValueError("bin centers must be strictly increasing")
        if abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ValueError("probs must sum to 1")

    @property
    def b(self) -> int:
        return len(self.bin_centers)

    @property
    def bin_width(self) -> float:
        return float(self.bin_centers[1] - self.bin_centers[0])


@dataclass(frozen=True)
class Eigenfunction:
    """One histogram-domain eigenfunction with its eigenvalue."""

    dim_index: int
    bin_centers: np.ndarray
    values: np.ndarray
    eigenvalue: float

    def __post_init__(self):
        if not np.isfinite(self.values).all():
            raise ValueError("eigenfunction values must be finite")
        if self.eigenvalue < -1e-10:
            raise ValueError("eigenvalue must be nonnegative (up to roundoff)")

    def interpolate(self, x: np.ndarray) -> np.ndarray:
        """Linear interpolation clamped to the end bin values."""
        return np.interp(x, self.bin_centers, self.values)

    def is_constant(self) -> bool:
        return float(np.abs(self.values - self.values.mean()).max()) < _CONSTANT_TOL


@dataclass(frozen=True)
class EigenfunctionSet:
    functions: tuple[Eigenfunction, ...]
    shortfall: bool = False  # True when fewer than requested survived

    def __post_init__(self):
        evs = [f.eigenvalue for f in self.functions]
        if any(b < a for a, b in zip(evs, evs[1:])):
            raise ValueError("eigenfunctions must be sorted by eigenvalue")

    @property
    def m(self) -> int:
        return len(self.functions)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([f.eigenvalue for f in self.functions])


@dataclass(frozen=True)
class SmoothnessSolution:
    U: np.ndarray       # (n, m) interpolated eigenvectors
    sigma: np.ndarray   # (m,) eigenvalues (diagonal of Sigma)
    alpha: np.ndarray   # (m,)
    f: np.ndarray       # (n,)
    lam: float


def histogram_density(column: np.ndarray, b: int) -> DensityHistogram | None:
    """Equal-width density histogram over [min, max]; None if the column is constant."""
    col = np.asarray(column, dtype=np.float64)
    if col.ndim != 1 or col.size < 2:
        raise ValueError("column must be 1-D with n >= 2")
    if not np.isfinite(col).all():
        raise NumericError("histogram input contains non-finite values")
    lo, hi = float(col.min()), float(col.max())
    if lo == hi:
        return None
    counts, edges = np.histogram(col, bins=b, range=(lo, hi))
    centers = (edges[:-1] + edges[1:]) / 2.0
    return DensityHistogram(centers, counts / col.size)


def batched_histograms(values: np.ndarray, b: int) -> list[DensityHistogram | None]:
    """histogram_density for every column of a matrix, with one shared pass.

    Columns are binned by direct cell arithmetic instead of np.histogram;
    agreement with the per-column routine is exercised in the tests.
    """
    X = np.asarray(values, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("values must be (n, d) with n >= 2")
    if not np.isfinite(X).all():
        raise NumericError("histogram input contains non-finite values")
    n, d = X.shape
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    live = hi > lo
    width = np.where(live, (hi - lo) / b, 1.0)
    idx = ((X - lo) / width).astype(np.intp)
    np.clip(idx, 0, b - 1, out=idx)
    idx += np.arange(d) * b  # one flat bincount for all columns
    counts = np.bincount(idx.ravel(), minlength=d * b).reshape(d, b)
    out: list[DensityHistogram | None] = []
    for j in range(d):
        if not live[j]:
            out.append(None)
            continue
        edges = np.linspace(lo[j], hi[j], b + 1)
        centers = (edges[:-1] + edges[1:]) / 2.0
        out.append(DensityHistogram(centers, counts[j] / n))
    return out


def solve_eigenfunctions(
    h: DensityHistogram,
    eps: float | None = None,
    count: int | None = None,
    dim_index: int = 0,
) -> list[Eigenfunction]:
    """Smallest-eigenvalue solutions of the histogram-domain generalized problem.

    The problem is symmetrized by the substitution g = (P Dh)^(-1/2) v, and
    each g is normalized so g^T P Dh g = 1 with its first nonzero entry
    positive. Zero-probability bins are floored to keep P Dh invertible.
    """
    b = h.b
    if count is None:
        count = b
    if count > b:
        raise ValueError("count must not exceed the number of bins")
    if eps is None:
        eps = 2.0 * h.bin_width
    if eps <= 0:
        raise ValueError("eps must be positive")

    c = h.bin_centers
    W = np.exp(-((c[:, None] - c[None, :]) ** 2) / (2.0 * eps * eps))
    p = np.maximum(h.probs, _PROB_FLOOR_SCALE / b)
    PWP = p[:, None] * W * p[None, :]
    Dt = PWP.sum(axis=0)
    Dh = (p[:, None] * W).sum(axis=0)
    A = np.diag(Dt) - PWP
    B = p * Dh  # diagonal of P Dh, strictly positive after flooring

    Bs = 1.0 / np.sqrt(B)
    S = Bs[:, None] * A * Bs[None, :]
    S = (S + S.T) / 2.0
    vals, vecs = scipy.linalg.eigh(S)

    # The zero eigenspace is degenerate when the density has disconnected
    # support. A row-sum argument puts the constant mode in it exactly, so fix
    # the basis: constant first, the remaining vectors deflated against it but
    # otherwise left as the solver produced them (they stay localized).
    z = int((vals < 1e-10).sum())
    if z >= 1:
        h0 = np.sqrt(B)
        h0 /= np.linalg.norm(h0)
        if z == 1:
            vecs[:, 0] = h0
        else:
            H = vecs[:, :z]
            M = H - np.outer(h0, h0 @ H)
            norms = np.linalg.norm(M, axis=0)
            keep = sorted(np.argsort(norms)[1:])  # drop the constant's shadow
            q, _ = np.linalg.qr(M[:, keep])
            vecs[:, 0] = h0
            vecs[:, 1:z] = q

    out = []
    for i in range(count):
        g = Bs * vecs[:, i]
        # normalize g^T (P Dh) g = 1, then fix the sign convention
        g = g / np.sqrt(float(g @ (B * g)))
        nz = np.nonzero(np.abs(g) > 1e-12 * np.abs(g).max())[0]
        if nz.size and g[nz[0]] < 0:
            g = -g
        out.append(
            Eigenfunction(
                dim_index=dim_index,
                bin_centers=c,
                values=g,
                eigenvalue=float(max(vals[i], 0.0) if vals[i] > -1e-10 else vals[i]),
            )
        )
    return out


def select_smallest(per_dim: list[list[Eigenfunction]], m: int) -> EigenfunctionSet:
    """Merge all dimensions, drop constants, keep the m smallest eigenvalues.

    Ties break deterministically by (eigenvalue, dim_index, position within
    its dimension). When fewer than m nontrivial functions exist, all are
    returned and the shortfall flag is set.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    candidates = []
    for fns in per_dim:
        for j, fn in enumerate(fns):
            if not fn.is_constant():
                candidates.append((fn.eigenvalue, fn.dim_index, j, fn))
    candidates.sort(key=lambda t: t[:3])
    chosen = [t[3] for t in candidates[:m]]
    shortfall = len(chosen) < m
    if shortfall:
        log.warning("only %d nontrivial eigenfunctions available (wanted %d)", len(chosen), m)
    return EigenfunctionSet(tuple(chosen), shortfall=shortfall)


if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _lerp_uniform_into(x, centers, G, cols, out):  # pragma: no cover - jitted
        n = x.shape[0]
        b = centers.shape[0]
        q = G.shape[1]
        inv_w = 1.0 / (centers[1] - centers[0])
        for i in prange(n):
            lo = int((x[i] - centers[0]) * inv_w)
            if lo < 0:
                lo = 0
            elif lo > b - 2:
                lo = b - 2
            t = (x[i] - centers[lo]) / (centers[lo + 1] - centers[lo])
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            s = 1.0 - t
            for k in range(q):
                out[i, cols[k]] = G[lo, k] * s + G[lo + 1, k] * t


def with_bias_column(U: np.ndarray, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Prepend the constant mode (eigenvalue 0) to an interpolated basis.

    The dense route keeps the graph's constant eigenvector; the per-dimension
    selection drops constants (every dimension yields one), so the global
    offset is restored here as a single explicit column.
    """
    n = U.shape[0]
    return (
        np.hstack([np.ones((n, 1)), U]),
        np.concatenate([[0.0], sigma]),
    )


if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _lerp_packed(X, dims, centers, offs, G, cols, U):  # pragma: no cover - jitted
        n = X.shape[0]
        ndim = dims.shape[0]
        b = centers.shape[1]
        for i in prange(n):
            for jj in range(ndim):
                x = X[i, dims[jj]]
                c0 = centers[jj, 0]
                inv_w = 1.0 / (centers[jj, 1] - c0)
                lo = int((x - c0) * inv_w)
                if lo < 0:
                    lo = 0
                elif lo > b - 2:
                    lo = b - 2
                t = (x - centers[jj, lo]) / (centers[jj, lo + 1] - centers[jj, lo])
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                s = 1.0 - t
                for q in range(offs[jj], offs[jj + 1]):
                    U[i, cols[q]] = G[q, lo] * s + G[q, lo + 1] * t


def _packed_tables(efs: EigenfunctionSet):
    """Group the selected functions by dimension for the one-pass kernel.

    Returns None when the grids are not uniform/shared/equal-width across
    dimensions (the generic per-group path handles those)."""
    groups: dict[int, list[int]] = {}
    for k, fn in enumerate(efs.functions):
        groups.setdefault(fn.dim_index, []).append(k)
    b = None
    for j, ks in groups.items():
        centers = efs.functions[ks[0]].bin_centers
        if any(efs.functions[k].bin_centers is not centers for k in ks[1:]):
            return None
        widths = np.diff(centers)
        if not np.allclose(widths, widths[0], rtol=1e-9, atol=0.0):
            return None
        if b is None:
            b = len(centers)
        elif b != len(centers):
            return None
    dims = np.fromiter(groups.keys(), dtype=np.int64)
    centers = np.stack([efs.functions[ks[0]].bin_centers for ks in groups.values()])
    offs = np.zeros(len(groups) + 1, dtype=np.int64)
    G = np.empty((efs.m, b))
    cols = np.empty(efs.m, dtype=np.int64)
    q = 0
    for jj, ks in enumerate(groups.values()):
        for k in ks:
            G[q] = efs.functions[k].values
            cols[q] = k
            q += 1
        offs[jj + 1] = q
    return dims, centers, offs, G, cols


def interpolate_basis(efs: EigenfunctionSet, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interpolated eigenvectors with the leading constant column.

    Equivalent to prepending a ones column to interpolate_eigenvectors'
    output; on uniform shared grids all dimensions are interpolated in one
    fused pass over the output matrix.
    """
    X = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
    n = X.shape[0]
    U = np.empty((n, efs.m + 1))
    U[:, 0] = 1.0
    sigma = np.concatenate([[0.0], efs.eigenvalues])
    tables = _packed_tables(efs) if (_HAVE_NUMBA and efs.m) else None
    if tables is None:
        interpolate_eigenvectors(efs, X, out=U[:, 1:])
        return U, sigma
    dims, centers, offs, G, cols = tables
    if dims.size and dims.max() >= X.shape[1]:
        raise ValueError("eigenfunction dimension exceeds feature count")
    _lerp_packed(X, dims, centers, offs, G, cols + 1, U)
    return U, sigma


def interpolate_eigenvectors(
    efs: EigenfunctionSet, values: np.ndarray, out: np.ndarray | None = None
) -> np.ndarray:
    """Approximate eigenvectors U (n, m) by per-dimension linear interpolation.

    Functions sharing a dimension (and bin grid) are interpolated together:
    the bin lookup runs once per dimension, not once per function, and the
    lookup on the uniform histogram grids is direct cell arithmetic. ``out``
    may supply the destination array (or a view of a larger one).
    """
    X = np.asarray(values, dtype=np.float64)
    U = out if out is not None else np.empty((X.shape[0], efs.m))
    if U.shape != (X.shape[0], efs.m):
        raise ValueError("out has the wrong shape")
    groups: dict[int, list[int]] = {}
    for k, fn in enumerate(efs.functions):
        if fn.dim_index >= X.shape[1]:
            raise ValueError("eigenfunction dimension exceeds feature count")
        groups.setdefault(fn.dim_index, []).append(k)
    for j, ks in groups.items():
        centers = efs.functions[ks[0]].bin_centers
        if any(efs.functions[k].bin_centers is not centers for k in ks[1:]):
            for k in ks:  # mixed grids on one dimension: no shared lookup
                U[:, k] = efs.functions[k].interpolate(X[:, j])
            continue
        x = np.ascontiguousarray(X[:, j])
        b = len(centers)
        G = np.stack([efs.functions[k].values for k in ks], axis=1)  # (b, q)
        widths = np.diff(centers)
        uniform = np.allclose(widths, widths[0], rtol=1e-9, atol=0.0)
        if uniform and _HAVE_NUMBA:
            _lerp_uniform_into(x, centers, G, np.asarray(ks, dtype=np.int64), U)
            continue
        if uniform:
            lo = np.clip(((x - centers[0]) / widths[0]).astype(np.intp), 0, b - 2)
        else:
            lo = np.clip(np.searchsorted(centers, x) - 1, 0, b - 2)
        t = np.clip((x - centers[lo]) / (centers[lo + 1] - centers[lo]), 0.0, 1.0)
        U[:, ks] = G[lo] * (1.0 - t)[:, None] + G[lo + 1] * t[:, None]
    return U


# ---------------------------------------------------------------------------
# the reduced m x m label solve
# ---------------------------------------------------------------------------

_COND_LIMIT = 1e12


def _solve_sym(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # explicit conditioning check: thread-safe, unlike warnings-based detection
    cond = np.linalg.cond(A)
    if np.isfinite(cond) and cond <= _COND_LIMIT:
        try:
            x = np.linalg.solve(A, rhs)
            if np.isfinite(x).all():
                return x
        except np.linalg.LinAlgError:
            pass
    # singular or near-singular: common whenever the basis outnumbers the
    # labeled pixels, so flag quietly and regularize
    log.debug("singular label system (cond=%.3g); solving with 1e-10 ridge", cond)
    return np.linalg.solve(A + 1e-10 * np.eye(A.shape[0]), rhs)


def solve_alpha(
    U: np.ndarray,
    sigma: np.ndarray,
    labeled_idx: np.ndarray,
    labeled_y: np.ndarray,
    lam: float = DEFAULT_LAMBDA,
) -> np.ndarray:
    """Minimizer of a^T Sigma a + (U a - y)^T Lam (U a - y), labeled rows only.

    Gathers the labeled rows of U, scales them by lambda, and forms the m x m
    system directly; the n x n diagonal Lam never exists in memory.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    y = np.asarray(labeled_y, dtype=np.float64)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("need at least one positive and one negative label")
    Ul = U[np.asarray(labeled_idx)]
    A = np.diag(np.asarray(sigma, dtype=np.float64)) + Ul.T @ (lam * Ul)
    rhs = Ul.T @ (lam * y)
    return _solve_sym(A, rhs)


def solve_alpha_dense(
    U: np.ndarray,
    sigma: np.ndarray,
    labeled_idx: np.ndarray,
    labeled_y: np.ndarray,
    lam: float = DEFAULT_LAMBDA,
) -> np.ndarray:
    """Reference solve with the explicit n x n diagonal penalty matrix.

    Memory grows as n^2; intended for small-n verification, not production.
    """
    n = U.shape[0]
    Lam = np.zeros((n, n))
    y = np.zeros(n)
    Lam[labeled_idx, labeled_idx] = lam
    y[np.asarray(labeled_idx)] = labeled_y
    A = np.diag(np.asarray(sigma, dtype=np.float64)) + U.T @ Lam @ U
    rhs = U.T @ (Lam @ y)
    return _solve_sym(A, rhs)


def solve_alpha_unvectorized(
    U: np.ndarray,
    sigma: np.ndarray,
    labeled_idx: np.ndarray,
    labeled_y: np.ndarray,
    lam: float = DEFAULT_LAMBDA,
) -> np.ndarray:
    """Row-by-row baseline: accumulates U^T Lam U over every pixel in Python.

    Same answer as solve_alpha; kept as the unoptimized timing baseline.
    """
    n, m = U.shape
    lam_diag = np.zeros(n)
    y = np.zeros(n)
    lam_diag[np.asarray(labeled_idx)] = lam
    y[np.asarray(labeled_idx)] = labeled_y
    A = np.diag(np.asarray(sigma, dtype=np.float64))
    rhs = np.zeros(m)
    for i in range(n):
        row = U[i]
        A = A + lam_diag[i] * np.outer(row, row)
        rhs = rhs + lam_diag[i] * y[i] * row
    return _solve_sym(A, rhs)


def smoothness(U: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    return U @ alpha


def label_objective(
    U: np.ndarray,
    sigma: np.ndarray,
    alpha: np.ndarray,
    labeled_idx: np.ndarray,
    labeled_y: np.ndarray,
    lam: float,
) -> float:
    """The quadratic objective value the alpha solve minimizes."""
    r = U[np.asarray(labeled_idx)] @ alpha - np.asarray(labeled_y, dtype=np.float64)
    return float(alpha @ (np.asarray(sigma) * alpha) + lam * (r @ r))


# ---------------------------------------------------------------------------
# dense oracle
# ---------------------------------------------------------------------------

EXACT_N_LIMIT = 5000


def dense_laplacian(points: np.ndarray, eps: float) -> np.ndarray:
    """L = D - W with Gaussian affinities; n x n dense."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    d2 = np.maximum(
        (X**2).sum(1)[:, None] + (X**2).sum(1)[None, :] - 2.0 * X @ X.T, 0.0
    )
    W = np.exp(-d2 / (2.0 * eps * eps))
    return np.diag(W.sum(axis=1)) - W


def solve_exact_eigenvectors(points: np.ndarray, eps: float, k: int):
    """k smallest eigenpairs of the dense graph Laplacian L = D - W.

    Quadratic memory; refuses n > EXACT_N_LIMIT. Returns (eigenvalues (k,),
    eigenvectors (n, k)).
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n > EXACT_N_LIMIT:
        raise NumericError(f"dense eigenvector solve capped at n <= {EXACT_N_LIMIT}, got {n}")
    if not 0 < k < n:
        raise ValueError("need 0 < k < n")
    L = dense_laplacian(X, eps)
    vals, vecs = scipy.linalg.eigh(L, subset_by_index=(0, k - 1))
    return vals, vecs


# ---------------------------------------------------------------------------
# point-cloud classification (the 2-D toy problem and its exact counterpart)
# ---------------------------------------------------------------------------

def eigenfunction_basis(
    points: np.ndarray, m: int, bins: int = DEFAULT_BINS
) -> tuple[np.ndarray, np.ndarray]:
    """Interpolated eigenvector basis (U, sigma) for a raw point cloud.

    The basis carries the m smallest nontrivial eigenfunctions plus a leading
    constant column, mirroring the dense route's constant eigenvector.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    per_dim = []
    for j in range(X.shape[1]):
        hist = histogram_density(X[:, j], bins)
        if hist is None:
            continue
        per_dim.append(solve_eigenfunctions(hist, dim_index=j))
    efs = select_smallest(per_dim, m)
    if efs.m == 0:
        raise DegenerateDataError("no nontrivial eigenfunctions for the point cloud")
    return interpolate_basis(efs, X)


def smoothness_on_points(
    points: np.ndarray,
    labeled_idx: np.ndarray,
    labeled_y: np.ndarray,
    m: int = 10,
    bins: int = DEFAULT_BINS,
    lam: float = DEFAULT_LAMBDA,
    alpha_solver=solve_alpha,
) -> SmoothnessSolution:
    """Histogram-eigenfunction smoothing field on a raw point cloud."""
    U, sigma = eigenfunction_basis(points, m, bins)
    alpha = alpha_solver(U, sigma, labeled_idx, labeled_y, lam)
    return SmoothnessSolution(U=U, sigma=sigma, alpha=alpha, f=smoothness(U, alpha), lam=lam)


def smoothness_on_points_exact(
    points: np.ndarray,
    labeled_idx: np.ndarray,
    labeled_y: np.ndarray,
    k: int = 10,
    eps: float | None = None,
    lam: float = DEFAULT_LAMBDA,
) -> SmoothnessSolution:
    """Same smoothing field through the dense eigenvector route.

    Sigma is computed literally as U^T L U (it coincides with the eigenvalue
    diagonal up to roundoff); bandwidth defaults to the pairwise-distance
    heuristic.
    """
    X = np.asarray(points, dtype=np.float64)
    if eps is None:
        eps = pairwise_distance_std(X)
    _, U = solve_exact_eigenvectors(X, eps, k)
    L = dense_laplacian(X, eps)
    sigma = np.diag(U.T @ L @ U).copy()
    alpha = solve_alpha(U, sigma, labeled_idx, labeled_y, lam)
    return SmoothnessSolution(U=U, sigma=sigma, alpha=alpha, f=smoothness(U, alpha), lam=lam)


def pairwise_distance_std(points: np.ndarray, cap: int = 2000, seed: int = 0) -> float:
    """Bandwidth heuristic: std of pairwise distances (subsampled above cap)."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] > cap:
        rng = np.random.default_rng(seed)
        X = X[rng.choice(X.shape[0], cap, replace=False)]
    d2 = np.maximum(
        (X**2).sum(1)[:, None] + (X**2).sum(1)[None, :] - 2.0 * X @ X.T, 0.0
    )
    iu = np.triu_indices(X.shape[0], k=1)
    return max(float(np.sqrt(d2[iu]).std()), 1e-12)
