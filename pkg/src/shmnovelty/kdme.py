"""Kernel-density maximum-entropy (KDME) estimation of a univariate PDF.

The sample is mapped to the unit interval, where discrete maximum-entropy
probabilities constrained by fractional moments take the exponential form
p_i proportional to exp(-sum_k lambda_k z_i**gamma_k).  Given the powers
gamma, the multipliers lambda come from a single linear solve; the powers
themselves are chosen by Bayesian optimization of a penalized negative
log-likelihood.  The final density is a Gaussian-kernel mixture centered on
the evaluation grid with the ME probabilities as weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import gpopt
from .errors import DegenerateInputError, IllConditionedError, InvalidInputError

# Linear systems with condition number above this raise IllConditionedError.
COND_LIMIT = 1e12

# Objective value substituted for failed evaluations (ill-conditioned solve
# or vanishing likelihood), finite so the Bayesian optimizer can proceed.
PENALTY_VALUE = 1.0e6

# Densities at or below this trigger the penalty inside the objective.
DENSITY_FLOOR = 1e-300

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class KdmeConfig:
    """Settings for :func:`fit_kdme`.

    ``h = None`` selects the default bandwidth, one grid step.
    ``window_padding`` extends the sample range by that multiple of the
    inter-quartile range on each side.
    """

    N: int = 1000
    M_range: tuple[int, ...] = (1, 2, 3)
    gamma_max_init: float = 3.0
    h: float | None = None
    window_padding: float = 0.5
    bo_budget: int = 50
    seed: int = 0


@dataclass(frozen=True)
class KdmeModel:
    """Fitted marginal density.

    ``gamma`` and ``lam`` may be empty: the uniform baseline (lambda = 0)
    participates in model selection so the optimizer can never do worse
    than no moment constraints at all.
    """

    window: tuple[float, float]
    N: int
    x_eval: np.ndarray
    M: int
    gamma: np.ndarray
    lam: np.ndarray
    p_me: np.ndarray
    m0: float
    h: float
    theta: float

    def __post_init__(self):
        x_min, x_max = self.window
        if not x_min < x_max:
            raise InvalidInputError("window requires x_min < x_max")
        dx = (x_max - x_min) / (self.N - 1)
        if not 0 < self.h <= dx * (1 + 1e-12):
            raise InvalidInputError(f"bandwidth must satisfy 0 < h <= dx={dx}, got {self.h}")
        p = np.asarray(self.p_me, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise InvalidInputError("p_me must be a probability vector")

    @property
    def dx(self) -> float:
        return (self.window[1] - self.window[0]) / (self.N - 1)


def to_unit(x, window) -> np.ndarray:
    """Map sample values into [0, 1] by the window's min-max transform."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_min, x_max = float(window[0]), float(window[1])
    if not x_min < x_max:
        raise InvalidInputError("window requires x_min < x_max")
    outside = (x < x_min) | (x > x_max)
    if np.any(outside):
        offender = x[outside][0]
        raise InvalidInputError(
            f"sample value {offender!r} lies outside window [{x_min}, {x_max}]"
        )
    return (x - x_min) / (x_max - x_min)


def from_unit(z, window) -> np.ndarray:
    """Inverse of :func:`to_unit`."""
    z = np.asarray(z, dtype=float)
    x_min, x_max = float(window[0]), float(window[1])
    return x_min + z * (x_max - x_min)


def sample_fractional_moment(z, gamma: float) -> float:
    """(1/n) sum z_i**gamma over a unit-interval sample, with 0**0 = 1."""
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise InvalidInputError("empty sample")
    if np.any((z < 0) | (z > 1)):
        raise InvalidInputError("sample must lie in [0, 1]")
    if gamma < 0:
        raise InvalidInputError(f"gamma must be >= 0, got {gamma}")
    return float(np.mean(z**gamma))


def lambda_system(gamma, moments) -> tuple[np.ndarray, np.ndarray, float]:
    """Assemble the linear system P lambda = rho and its condition number.

    Row j uses the power gamma_j with gamma_0 = 0:
    P_jk = gamma_k E[Z**(gamma_k + gamma_j)], rho_j = (gamma_j + 1) E[Z**gamma_j].
    ``moments`` is an oracle gamma -> E[Z**gamma].
    """
    gamma = np.asarray(gamma, dtype=float)
    m = gamma.size
    if m == 0:
        raise InvalidInputError("gamma must be non-empty")
    g_rows = np.concatenate([[0.0], gamma[: m - 1]])
    P = np.empty((m, m))
    rho = np.empty(m)
    for j in range(m):
        rho[j] = (g_rows[j] + 1.0) * moments(g_rows[j])
        for k in range(m):
            P[j, k] = gamma[k] * moments(gamma[k] + g_rows[j])
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(rho))):
        raise IllConditionedError("non-finite moment values", gamma=gamma)
    cond = float(np.linalg.cond(P))
    return P, rho, cond


def solve_lambda(gamma, moments) -> np.ndarray:
    """Solve for the Lagrange multipliers given the fractional powers.

    Raises :class:`IllConditionedError` carrying gamma and the condition
    number when cond(P) exceeds COND_LIMIT, so optimizers can treat the
    point as a penalty instead of aborting.
    """
    P, rho, cond = lambda_system(gamma, moments)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(
            f"moment matrix condition number {cond:.3e} exceeds {COND_LIMIT:.0e}",
            gamma=np.asarray(gamma, dtype=float),
            cond=cond,
        )
    return np.linalg.solve(P, rho)


def me_probabilities(gamma, lam, z_eval) -> tuple[np.ndarray, float]:
    """Maximum-entropy probabilities on the evaluation grid, with m0.

    p_i = exp(-sum_k lam_k z_i**gamma_k) / m0.  The exponent is stabilized
    by subtracting its maximum; m0 is returned in unshifted units.
    """
    gamma = np.asarray(gamma, dtype=float)
    lam = np.asarray(lam, dtype=float)
    z_eval = np.asarray(z_eval, dtype=float)
    if gamma.shape != lam.shape:
        raise InvalidInputError("gamma and lambda must be congruent")
    if np.any(~np.isfinite(lam)) or np.any(~np.isfinite(gamma)) or np.any(~np.isfinite(z_eval)):
        raise InvalidInputError("NaN/inf in me_probabilities inputs")
    if gamma.size == 0:
        exponent = np.zeros(z_eval.size)
    else:
        exponent = -np.sum(lam[:, None] * z_eval[None, :] ** gamma[:, None], axis=0)
    shift = exponent.max()
    p = np.exp(exponent - shift)
    total = p.sum()
    p /= total
    # m0 is reported in unshifted units; extreme multipliers explored during
    # optimization may overflow it to inf, which is fine because the
    # objective depends only on the normalized weights.
    with np.errstate(over="ignore"):
        m0 = float(np.exp(shift + np.log(total)))
    return p, m0


def _kernel_logpdf(x, centers: np.ndarray, p: np.ndarray, h: float) -> np.ndarray:
    """log of sum_i p_i Normal(x; centers_i, h), batched over x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    out = np.empty(x.size)
    # Chunked to bound the (batch, N) intermediate.
    chunk = 4096
    for start in range(0, x.size, chunk):
        xs = x[start : start + chunk]
        u = (xs[:, None] - centers[None, :]) / h
        logk = -0.5 * u * u - np.log(h) - 0.5 * LOG_2PI
        out[start : start + chunk] = logsumexp(logp[None, :] + logk, axis=1)
    return out


def kdme_pdf(model: KdmeModel, x):
    """Density in original coordinates; scalar in, scalar out.

    May underflow to exactly 0 far outside the window, which is legal.
    """
    scalar = np.ndim(x) == 0
    logf = _kernel_logpdf(x, model.x_eval, model.p_me, model.h)
    f = np.exp(logf)
    if scalar:
        return float(f[0])
    return f


def kdme_log_pdf(model: KdmeModel, x):
    """log density in original coordinates.

    Stays finite (just very negative) where :func:`kdme_pdf` underflows,
    which is why the detector thresholds in log space.
    """
    scalar = np.ndim(x) == 0
    logf = _kernel_logpdf(x, model.x_eval, model.p_me, model.h)
    if scalar:
        return float(logf[0])
    return logf


def _theta_for_lambda(gamma, lam, z_sample, N: int, h: float) -> float:
    """Objective for a known (gamma, lambda): penalized mean negative
    log-likelihood on the unit grid."""
    z_eval = np.linspace(0.0, 1.0, N)
    p, _ = me_probabilities(gamma, lam, z_eval)
    logf = _kernel_logpdf(z_sample, z_eval, p, h)
    if np.any(logf <= np.log(DENSITY_FLOOR)):
        return PENALTY_VALUE
    m = np.asarray(gamma).size
    return float(-np.mean(logf) + m / z_sample.size)


def kdme_objective(gamma, M: int, z_sample, N: int = 1000, h: float | None = None,
                   diagnostics: dict | None = None) -> float:
    """Penalized negative log-likelihood of the KDME fit for powers gamma.

    Any failure (ill-conditioned solve, vanishing density at a sample
    point) returns PENALTY_VALUE so the Bayesian optimizer sees a finite
    value; ``diagnostics`` counts those events when provided.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.size != M:
        raise InvalidInputError(f"gamma must have length M={M}, got {gamma.size}")
    z_sample = np.asarray(z_sample, dtype=float)
    if np.any((z_sample < 0) | (z_sample > 1)):
        raise InvalidInputError("z_sample must lie in [0, 1]")
    if h is None:
        h = 1.0 / (N - 1)
    moments = lambda g: sample_fractional_moment(z_sample, g)
    try:
        lam = solve_lambda(gamma, moments)
    except IllConditionedError:
        if diagnostics is not None:
            diagnostics["ill_conditioned"] = diagnostics.get("ill_conditioned", 0) + 1
        return PENALTY_VALUE
    theta = _theta_for_lambda(gamma, lam, z_sample, N, h)
    if theta == PENALTY_VALUE and diagnostics is not None:
        diagnostics["vanishing_density"] = diagnostics.get("vanishing_density", 0) + 1
    return theta


@dataclass(frozen=True)
class KdmeFitReport:
    """Per-candidate summary of one fit, for reporting and traces."""

    candidates: tuple  # (M, gamma tuple, theta, gamma_max) per candidate
    diagnostics: dict = field(default_factory=dict)
    # (M, escalation, BoStep history tuple) per optimizer run.
    traces: tuple = ()


def _derive_seed(seed: int, m: int, escalation: int) -> int:
    ss = np.random.SeedSequence([seed, m, escalation])
    return int(ss.generate_state(1)[0])


def fit_kdme(x_sample, config: KdmeConfig | None = None,
             return_report: bool = False):
    """Fit a KDME density to a raw sample (Algorithm: window, grids, per-M
    Bayesian optimization of gamma with gamma_max escalation, model
    selection by smallest objective).

    The candidate menu always contains the lambda = 0 uniform baseline
    (M = 0), so the selected objective never exceeds the baseline's.
    Deterministic given ``config.seed``.
    """
    cfg = config or KdmeConfig()
    x = np.asarray(x_sample, dtype=float).ravel()
    if x.size < 30:
        raise InvalidInputError(f"need >= 30 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("sample contains non-finite values")
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        raise DegenerateInputError("sample has zero range")
    q25, q75 = np.percentile(x, [25.0, 75.0])
    pad = cfg.window_padding * (q75 - q25)
    window = (x_lo - pad, x_hi + pad)
    width = window[1] - window[0]
    dx = width / (cfg.N - 1)
    h_x = cfg.h if cfg.h is not None else dx
    if not 0 < h_x <= dx * (1 + 1e-12):
        raise InvalidInputError(f"bandwidth must satisfy 0 < h <= dx={dx}, got {h_x}")
    h_z = h_x / width
    z = to_unit(x, window)
    n = z.size
    diagnostics: dict = {}

    # Baseline candidate: no moment constraints, uniform ME probabilities.
    theta0 = _theta_for_lambda(
        np.empty(0), np.empty(0), z, cfg.N, h_z
    )
    candidates: list[tuple[float, int, np.ndarray, float]] = [
        (theta0, 0, np.empty(0), cfg.gamma_max_init)
    ]
    traces: list[tuple[int, int, tuple]] = []

    for m in cfg.M_range:
        gamma_max = cfg.gamma_max_init
        for escalation in range(4):
            objective = lambda g: kdme_objective(
                g, m, z, N=cfg.N, h=h_z, diagnostics=diagnostics
            )
            bounds = np.repeat([[0.0, gamma_max]], m, axis=0)
            g_best, th_best, history = gpopt.bayes_minimize(
                objective, bounds, cfg.bo_budget,
                seed=_derive_seed(cfg.seed, m, escalation),
            )
            traces.append((m, escalation, tuple(history)))
            near_edge = int(np.sum(g_best >= 0.95 * gamma_max))
            if near_edge >= 2 and escalation < 3:
                gamma_max *= 2.0
                continue
            break
        candidates.append((th_best, m, np.asarray(g_best, dtype=float), gamma_max))

    theta_sel, m_sel, gamma_sel, _ = min(candidates, key=lambda c: c[0])

    if m_sel == 0:
        lam = np.empty(0)
    else:
        lam = solve_lambda(gamma_sel, lambda g: sample_fractional_moment(z, g))
    z_eval = np.linspace(0.0, 1.0, cfg.N)
    p, m0 = me_probabilities(gamma_sel, lam, z_eval)
    model = KdmeModel(
        window=window,
        N=cfg.N,
        x_eval=from_unit(z_eval, window),
        M=m_sel,
        gamma=gamma_sel,
        lam=lam,
        p_me=p,
        m0=m0,
        h=h_x,
        theta=theta_sel,
    )
    if return_report:
        report = KdmeFitReport(
            candidates=tuple(
                (m, tuple(float(g) for g in gam), float(th), float(gm))
                for th, m, gam, gm in candidates
            ),
            diagnostics=diagnostics,
            traces=tuple(traces),
        )
        return model, report
    return model
