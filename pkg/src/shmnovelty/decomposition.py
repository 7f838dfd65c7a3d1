"""Linear decomposition of feature matrices: PCA followed by robust ICA.

PCA reduces the feature space to the q directions of highest variance.
Whitening rescales those components to identity covariance, after which a
deflationary kurtosis-contrast ICA rotates them into statistically
independent components.  The ICA update uses an exact line search: the step
size is a root of a quartic polynomial, which is the derivative numerator of
the kurtosis contrast along the search direction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError
from .features import FeatureVector

logger = logging.getLogger(__name__)

# Eigenvalues of the sample covariance at or below this are treated as
# numerically singular for whitening purposes.
WHITEN_EIG_FLOOR = 1e-12

# Roots with relative imaginary part below this count as real.
ROOT_IMAG_TOL = 1e-8

# Fallback grid for the line search when the quartic has no real roots.
GRID_FALLBACK_LIMIT = 10.0
GRID_FALLBACK_STEP = 1e-3


@dataclass(frozen=True)
class PcaModel:
    """Principal-component basis with training means.

    Fields
    ------
    means : ndarray, shape (d,)
        Per-feature training means.
    loadings : ndarray, shape (d, q)
        Orthonormal eigenvector columns of the sample covariance, ordered by
        decreasing eigenvalue, sign-fixed so each column's largest-magnitude
        entry is positive.
    explained_variance_ratio : ndarray, shape (q,)
        Top-q eigenvalues divided by the covariance trace.
    """

    means: np.ndarray
    loadings: np.ndarray
    explained_variance_ratio: np.ndarray


@dataclass(frozen=True)
class IcaModel:
    """Whitening map plus unmixing rows extracted by deflation."""

    whitening: np.ndarray
    W: np.ndarray
    component_order: tuple[int, ...]
    converged: tuple[bool, ...]


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError(f"expected a 2-d matrix, got ndim={X.ndim}")
    return X


def pca_fit(X, q: int) -> PcaModel:
    """Fit a q-component PCA via eigendecomposition of the sample covariance.

    Uses the (n-1)-normalized covariance and a deterministic sign convention
    so repeated fits on the same data are bit-identical.
    """
    X = _as_matrix(X)
    n, d = X.shape
    if n < 2:
        raise InvalidInputError("PCA requires at least 2 observations")
    if not 1 <= q <= min(n - 1, d):
        raise InvalidInputError(
            f"q must satisfy 1 <= q <= min(n-1, d) = {min(n - 1, d)}, got {q}"
        )
    means = X.mean(axis=0)
    centered = X - means
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    loadings = eigvecs[:, :q].copy()
    for j in range(q):
        pivot = np.argmax(np.abs(loadings[:, j]))
        if loadings[pivot, j] < 0:
            loadings[:, j] = -loadings[:, j]
    trace = eigvals.sum()
    if trace <= 0:
        raise DegenerateInputError("feature matrix has zero total variance")
    ratio = eigvals[:q] / trace
    return PcaModel(means=means, loadings=loadings, explained_variance_ratio=ratio)


def pca_transform(m: PcaModel, v) -> np.ndarray:
    """Project one vector or a stack of row vectors onto the PCA basis."""
    if isinstance(v, FeatureVector):
        v = v.values
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != m.means.size:
        raise InvalidInputError(
            f"dimension mismatch: vector {v.shape[-1]}, model {m.means.size}"
        )
    return (v - m.means) @ m.loadings


def whiten(Y) -> tuple[np.ndarray, np.ndarray]:
    """Whiten via the inverse square root of the sample covariance.

    Returns the whitened matrix and the symmetric whitening matrix; the
    transform is purely linear, so downstream models need no separate mean.
    """
    Y = _as_matrix(Y)
    n, q = Y.shape
    if n < 2:
        raise InvalidInputError("whitening requires at least 2 observations")
    centered = Y - Y.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals.min() <= WHITEN_EIG_FLOOR:
        raise DegenerateInputError(
            f"covariance is numerically singular: eigenvalue {eigvals.min():.3e}"
        )
    Wmat = eigvecs @ np.diag(1.0 / np.sqrt(eigvals)) @ eigvecs.T
    return Y @ Wmat, Wmat


def kurtosis(s) -> float:
    """Excess kurtosis from raw moments: E[s^4]/E[s^2]^2 - 3.

    Zero for Gaussian input; equals E[s^4] - 3 when the series has unit
    raw second moment, as whitened ICA inputs do.
    """
    s = np.asarray(s, dtype=float)
    if s.size < 4:
        raise InvalidInputError("kurtosis requires at least 4 samples")
    if np.var(s) == 0:
        raise DegenerateInputError("kurtosis undefined for zero-variance input")
    m2 = np.mean(s**2)
    m4 = np.mean(s**4)
    return float(m4 / m2**2 - 3.0)


def _line_moments(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Polynomial coefficients of Q2(alpha) = E[(a+alpha b)^2] and
    Q4(alpha) = E[(a+alpha b)^4], ascending order."""
    c = np.array([np.mean(a * a), 2.0 * np.mean(a * b), np.mean(b * b)])
    d = np.array(
        [
            np.mean(a**4),
            4.0 * np.mean(a**3 * b),
            6.0 * np.mean(a**2 * b**2),
            4.0 * np.mean(a * b**3),
            np.mean(b**4),
        ]
    )
    return c, d


def _contrast_on_line(alpha: float, c: np.ndarray, d: np.ndarray) -> float:
    q2 = c[0] + c[1] * alpha + c[2] * alpha**2
    if q2 <= 1e-300:
        return -np.inf
    q4 = d[0] + d[1] * alpha + d[2] * alpha**2 + d[3] * alpha**3 + d[4] * alpha**4
    return abs(q4 / q2**2 - 3.0)


def optimal_step(w: np.ndarray, g: np.ndarray, X) -> float:
    """Exact line search of the absolute kurtosis along direction g.

    The derivative numerator of alpha -> kurt(w + alpha g) is a quartic
    (the degree-5 terms of Q4' Q2 - 2 Q2' Q4 cancel); its real roots are the
    stationary candidates.  Roots are computed via the companion matrix.
    Falls back to a dense grid search with a diagnostic if no real root
    survives.
    """
    X = _as_matrix(X)
    g = np.asarray(g, dtype=float)
    w = np.asarray(w, dtype=float)
    if not np.any(g != 0):
        raise InvalidInputError("line-search direction must be nonzero")
    a = X @ w
    b = X @ g
    c, d = _line_moments(a, b)
    # N(alpha) = Q4'(alpha) Q2(alpha) - 2 Q2'(alpha) Q4(alpha), ascending.
    n0 = d[1] * c[0] - 2.0 * c[1] * d[0]
    n1 = 2.0 * d[2] * c[0] - c[1] * d[1] - 4.0 * c[2] * d[0]
    n2 = d[1] * c[2] + 2.0 * d[2] * c[1] + 3.0 * d[3] * c[0] - 2.0 * c[1] * d[2] - 4.0 * c[2] * d[1]
    n3 = 2.0 * d[2] * c[2] + 3.0 * d[3] * c[1] + 4.0 * d[4] * c[0] - 2.0 * c[1] * d[3] - 4.0 * c[2] * d[2]
    n4 = 3.0 * d[3] * c[2] + 4.0 * d[4] * c[1] - 2.0 * c[1] * d[4] - 4.0 * c[2] * d[3]
    coeffs = np.array([n4, n3, n2, n1, n0])
    lead = np.max(np.abs(coeffs))
    candidates = [0.0]
    if lead > 0:
        trimmed = np.trim_zeros(coeffs, "f")
        if trimmed.size >= 2:
            roots = np.roots(trimmed)
            scale = np.maximum(1.0, np.abs(roots))
            real = roots[np.abs(roots.imag) < ROOT_IMAG_TOL * scale].real
            candidates.extend(float(r) for r in real)
    if len(candidates) == 1:
        logger.warning(
            "optimal_step: quartic has no real roots; falling back to grid search"
        )
        grid = np.arange(-GRID_FALLBACK_LIMIT, GRID_FALLBACK_LIMIT + GRID_FALLBACK_STEP, GRID_FALLBACK_STEP)
        values = [_contrast_on_line(al, c, d) for al in grid]
        return float(grid[int(np.argmax(values))])
    values = [_contrast_on_line(al, c, d) for al in candidates]
    return float(candidates[int(np.argmax(values))])


def _kurtosis_gradient(w: np.ndarray, X: np.ndarray) -> np.ndarray:
    s = X @ w
    m2 = np.mean(s**2)
    m4 = np.mean(s**4)
    e_sx = X.T @ s / X.shape[0]
    e_s3x = X.T @ (s**3) / X.shape[0]
    return 4.0 * (e_s3x * m2 - m4 * e_sx) / m2**3


def _deflate(w: np.ndarray, rows: list[np.ndarray]) -> np.ndarray:
    for r in rows:
        w = w - np.dot(w, r) * r
    return w


def robust_ica_fit(Y, max_iter: int = 200, tol: float = 1e-8, seed: int = 0) -> IcaModel:
    """Extract q independent components by deflation with exact line search.

    Each component iterates: kurtosis gradient, optimal step along it,
    renormalization, Gram-Schmidt against previously extracted rows.
    Convergence is ||w+ -+- w|| < tol (sign-insensitive).  Non-convergence is
    reported through per-component flags, not an exception.
    """
    Xw, Wmat = whiten(Y)
    q = Xw.shape[1]
    rng = np.random.default_rng(seed)
    rows: list[np.ndarray] = []
    converged: list[bool] = []
    for _ in range(q):
        w = rng.standard_normal(q)
        w = _deflate(w, rows)
        w /= np.linalg.norm(w)
        ok = False
        for _ in range(max_iter):
            g = _kurtosis_gradient(w, Xw)
            g_defl = _deflate(g, rows)
            if np.linalg.norm(g_defl) < 1e-14:
                # Gradient lies entirely in the deflated subspace; w is
                # stationary within the remaining space.
                ok = True
                break
            alpha = optimal_step(w, g_defl, Xw)
            w_new = w + alpha * g_defl
            w_new = _deflate(w_new, rows)
            norm = np.linalg.norm(w_new)
            if norm < 1e-14:
                w_new = rng.standard_normal(q)
                w_new = _deflate(w_new, rows)
                norm = np.linalg.norm(w_new)
            w_new /= norm
            if min(np.linalg.norm(w_new - w), np.linalg.norm(w_new + w)) < tol:
                w = w_new
                ok = True
                break
            w = w_new
        rows.append(w)
        converged.append(ok)
    W = np.stack(rows, axis=0)
    return IcaModel(
        whitening=Wmat,
        W=W,
        component_order=tuple(range(q)),
        converged=tuple(converged),
    )


def ica_transform(m: IcaModel, y) -> np.ndarray:
    """Map PCA-space coordinates to independent components: W . whitening . y."""
    y = np.asarray(y, dtype=float)
    q = m.W.shape[1]
    if y.shape[-1] != q:
        raise InvalidInputError(f"dimension mismatch: vector {y.shape[-1]}, model {q}")
    return y @ m.whitening.T @ m.W.T
