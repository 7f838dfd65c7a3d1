"""Gaussian-process Bayesian minimization over a box domain.

The surrogate is a zero-mean GP with an ARD Matérn 5/2 kernel conditioned on
centered observations.  Kernel hyperparameters are refit each iteration by
multi-start maximization of the log marginal likelihood; the next evaluation
point maximizes Expected Improvement via multi-start local search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.stats import norm, qmc

from .errors import InvalidInputError, ShmNoveltyError

# Penalty substituted for non-finite objective values so the surrogate sees
# a finite, strongly unattractive number.
PENALTY_VALUE = 1.0e6

# Jitter escalation for Cholesky failures: multiply by 10 until this cap.
JITTER_INIT = 1e-10
JITTER_MAX = 1e-4

# Noise-variance floor used during hyperparameter fitting.
NOISE_FLOOR = 1e-10

EI_STARTS = 64
LML_RESTARTS = 4


def matern52_ard(a, b, lengthscales, sigma_f2: float):
    """ARD Matérn 5/2 kernel value(s).

    With r^2 = sum_k (a_k - b_k)^2 / l_k^2, returns
    sigma_f2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r).  Accepts stacks of
    vectors in either argument under normal broadcasting.
    """
    ell = np.asarray(lengthscales, dtype=float)
    if np.any(ell <= 0):
        raise InvalidInputError("lengthscales must be > 0")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = (a - b) / ell
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    sr = np.sqrt(5.0) * r
    return sigma_f2 * (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)


def _kernel_matrix(A: np.ndarray, B: np.ndarray, ell: np.ndarray, sigma_f2: float) -> np.ndarray:
    return matern52_ard(A[:, None, :], B[None, :, :], ell, sigma_f2)


@dataclass(frozen=True)
class GpSurrogate:
    """Conditioned GP state.  Observations are stored centered; the offset
    is restored in posterior means."""

    X: np.ndarray
    y: np.ndarray
    offset: float
    lengthscales: np.ndarray
    sigma_f2: float
    sigma_n2: float
    jitter: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)


def _factorize(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky with escalating jitter; returns (lower factor, jitter used)."""
    jitter = 0.0
    while True:
        try:
            c, low = cho_factor(K + jitter * np.eye(K.shape[0]), lower=True)
            return np.tril(c), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_INIT if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX:
                raise ShmNoveltyError(
                    f"kernel matrix not positive definite at jitter {JITTER_MAX}"
                )


def fit_surrogate(
    X,
    y,
    lengthscales=None,
    sigma_f2: float | None = None,
    sigma_n2: float | None = None,
) -> GpSurrogate:
    """Condition a GP on (X, y), with given or default hyperparameters."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size or y.size < 1:
        raise InvalidInputError("surrogate requires X (t, M) and y (t,) with t >= 1")
    t, m = X.shape
    span = np.maximum(X.max(axis=0) - X.min(axis=0), 1e-12) if t > 1 else np.ones(m)
    ell = np.asarray(lengthscales, dtype=float) if lengthscales is not None else span / 3.0
    if np.any(ell <= 0):
        raise InvalidInputError("lengthscales must be > 0")
    yvar = float(np.var(y))
    sf2 = float(sigma_f2) if sigma_f2 is not None else max(yvar, 1e-12)
    sn2 = float(sigma_n2) if sigma_n2 is not None else NOISE_FLOOR
    offset = float(np.mean(y))
    yc = y - offset
    K = _kernel_matrix(X, X, ell, sf2) + sn2 * np.eye(t)
    L, jitter = _factorize(K)
    alpha = cho_solve((L, True), yc)
    return GpSurrogate(
        X=X,
        y=y,
        offset=offset,
        lengthscales=ell,
        sigma_f2=sf2,
        sigma_n2=sn2,
        jitter=jitter,
        chol=L,
        alpha=alpha,
    )


def gp_posterior(s: GpSurrogate, query) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at one query vector or a stack of them.

    Variance is clamped at 0 from below.  Scalar queries return scalars.
    """
    q = np.asarray(query, dtype=float)
    single = q.ndim == 1
    Q = q[None, :] if single else q
    k = _kernel_matrix(s.X, Q, s.lengthscales, s.sigma_f2)
    mu = k.T @ s.alpha + s.offset
    v = solve_triangular(s.chol, k, lower=True)
    var = np.maximum(s.sigma_f2 - np.sum(v * v, axis=0), 0.0)
    if single:
        return float(mu[0]), float(var[0])
    return mu, var


def expected_improvement(s: GpSurrogate, query, incumbent_best: float):
    """Expected Improvement for minimization, always >= 0.

    EI = delta Phi(delta/sigma) + sigma phi(delta/sigma) with
    delta = incumbent - mu; degenerates to max(delta, 0) at sigma = 0.
    """
    mu, var = gp_posterior(s, query)
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(var, dtype=float)
    sigma = np.sqrt(var)
    delta = incumbent_best - mu
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(sigma > 0, delta / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = np.where(
            sigma > 0,
            delta * norm.cdf(u) + sigma * norm.pdf(u),
            np.maximum(delta, 0.0),
        )
    ei = np.maximum(ei, 0.0)
    if ei.ndim == 0:
        return float(ei)
    return ei


def _negative_lml(log_params: np.ndarray, X: np.ndarray, yc: np.ndarray) -> float:
    m = X.shape[1]
    ell = np.exp(log_params[:m])
    sf2 = np.exp(log_params[m])
    sn2 = np.exp(log_params[m + 1])
    t = X.shape[0]
    K = _kernel_matrix(X, X, ell, sf2) + sn2 * np.eye(t)
    try:
        c, low = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return 1e12
    alpha = cho_solve((c, low), yc)
    logdet = 2.0 * np.sum(np.log(np.diag(c)))
    return float(0.5 * yc @ alpha + 0.5 * logdet + 0.5 * t * np.log(2.0 * np.pi))


def fit_hyperparameters(
    X: np.ndarray, y: np.ndarray, box_widths: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float, float]:
    """Maximize log marginal likelihood by multi-start bounded search.

    Lengthscale bounds are [1e-3, 10] x box width per dimension; the noise
    variance is floored at NOISE_FLOOR.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m = X.shape[1]
    yc = y - np.mean(y)
    yvar = max(float(np.var(y)), 1e-12)
    lo = np.concatenate([np.log(1e-3 * box_widths), [np.log(1e-6 * yvar), np.log(NOISE_FLOOR)]])
    hi = np.concatenate([np.log(10.0 * box_widths), [np.log(1e6 * yvar), np.log(1e-2 * yvar + NOISE_FLOOR)]])
    bounds = list(zip(lo, hi))
    default = np.concatenate([np.log(box_widths / 3.0), [np.log(yvar), np.log(1e-6 * yvar + NOISE_FLOOR)]])
    default = np.clip(default, lo, hi)
    starts = [default]
    for _ in range(LML_RESTARTS - 1):
        starts.append(lo + rng.uniform(size=lo.size) * (hi - lo))
    best = None
    best_val = np.inf
    for s0 in starts:
        res = optimize.minimize(
            _negative_lml, s0, args=(X, yc), method="L-BFGS-B", bounds=bounds
        )
        if res.fun < best_val:
            best_val = res.fun
            best = res.x
    ell = np.exp(best[:m])
    return ell, float(np.exp(best[m])), float(np.exp(best[m + 1]))


@dataclass(frozen=True)
class BoStep:
    """One evaluation in the optimization history."""

    iteration: int
    x: np.ndarray
    value: float
    incumbent: float
    penalized: bool


def _evaluate(f, x: np.ndarray) -> tuple[float, bool]:
    raw = f(np.asarray(x, dtype=float))
    try:
        val = float(raw)
    except (TypeError, ValueError):
        return PENALTY_VALUE, True
    if not np.isfinite(val):
        return PENALTY_VALUE, True
    return val, False


def _maximize_ei(
    s: GpSurrogate, bounds: np.ndarray, incumbent: float, rng: np.random.Generator
) -> np.ndarray:
    m = bounds.shape[0]
    starts = bounds[:, 0] + rng.uniform(size=(EI_STARTS, m)) * (bounds[:, 1] - bounds[:, 0])

    def neg_ei(x):
        return -expected_improvement(s, x, incumbent)

    best_x = starts[0]
    best_val = np.inf
    for x0 in starts:
        res = optimize.minimize(
            neg_ei, x0, method="L-BFGS-B", bounds=list(map(tuple, bounds))
        )
        if res.fun < best_val:
            best_val = res.fun
            best_x = res.x
    return np.clip(best_x, bounds[:, 0], bounds[:, 1])


def bayes_minimize(
    f, bounds, budget: int, seed: int = 0
) -> tuple[np.ndarray, float, list[BoStep]]:
    """Minimize a black-box objective over a box with a fixed evaluation budget.

    The initial design is max(5, 2M) scrambled-Sobol points; every
    subsequent iteration refits hyperparameters, maximizes EI from
    EI_STARTS seeded local starts, and evaluates the argmax.  All
    evaluations (design included) count against ``budget``.  Non-finite
    objective values are replaced by PENALTY_VALUE and flagged.
    Deterministic given ``seed``.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or np.any(bounds[:, 1] <= bounds[:, 0]):
        raise InvalidInputError("bounds must be (M, 2) with lower < upper")
    m = bounds.shape[0]
    n_init = max(5, 2 * m)
    if budget < n_init:
        raise InvalidInputError(
            f"budget {budget} is below the initial design size {n_init}"
        )
    rng = np.random.default_rng(seed)
    sobol = qmc.Sobol(d=m, scramble=True, seed=int(rng.integers(2**31)))
    n_pow2 = 1 << (n_init - 1).bit_length()
    design = sobol.random(n_pow2)[:n_init]
    design = bounds[:, 0] + design * (bounds[:, 1] - bounds[:, 0])

    X: list[np.ndarray] = []
    y: list[float] = []
    history: list[BoStep] = []
    incumbent_x = None
    incumbent_val = np.inf
    widths = bounds[:, 1] - bounds[:, 0]

    def record(x, val, flagged):
        nonlocal incumbent_x, incumbent_val
        X.append(np.asarray(x, dtype=float))
        y.append(val)
        if val < incumbent_val:
            incumbent_val = val
            incumbent_x = np.asarray(x, dtype=float)
        history.append(
            BoStep(
                iteration=len(history),
                x=np.asarray(x, dtype=float),
                value=val,
                incumbent=incumbent_val,
                penalized=flagged,
            )
        )

    for x0 in design:
        val, flagged = _evaluate(f, x0)
        record(x0, val, flagged)

    while len(y) < budget:
        Xa = np.stack(X, axis=0)
        ya = np.asarray(y)
        ell, sf2, sn2 = fit_hyperparameters(Xa, ya, widths, rng)
        surrogate = fit_surrogate(Xa, ya, lengthscales=ell, sigma_f2=sf2, sigma_n2=sn2)
        x_next = _maximize_ei(surrogate, bounds, incumbent_val, rng)
        val, flagged = _evaluate(f, x_next)
        record(x_next, val, flagged)

    return incumbent_x, incumbent_val, history
