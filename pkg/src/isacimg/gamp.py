"""GAMP solver for the pixel-coefficient reconstruction problem.

The measurement model is h = A x + n with x real in [0, 1] under a
truncated Bernoulli-Gaussian prior: a point mass at zero plus a Gaussian
slab restricted to the unit interval.  Complex measurements are handled by
stacking real over imaginary parts (`realify`), which keeps the iteration
in real arithmetic.

Two scalar denoisers are available: "sum-product" (posterior mean of the
spike/slab mixture, the default) and "max-sum" (MAP with the point mass
regularized by a narrow Gaussian).  Per-iteration cost is one pass over
the matrix for each of the four matrix-vector products, i.e. O(N_s * M).
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_ndtr, ndtr

from .errors import DegenerateVariance, NumericalDivergence, ZeroVariance

logger = logging.getLogger(__name__)

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_VAR_FLOOR = 1e-300
_VAR_CEIL = 1e30
_DEGENERATE_VAR = 1e-30


@dataclass(frozen=True)
class PriorParams:
    """Truncated Bernoulli-Gaussian prior on each pixel coefficient.

    alpha is the sparsity (slab) coefficient, theta_x / sigma_x the mean
    and standard deviation of the Gaussian slab before truncation to
    [0, 1].  The mass the truncation removes from the slab, lambda, folds
    back into the spike at zero.
    """

    alpha: float
    theta_x: float = 0.5
    sigma_x: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if not 0.0 <= self.theta_x <= 1.0:
            raise ValueError("theta_x must be in [0, 1]")
        if self.sigma_x <= 0.0:
            raise ValueError("sigma_x must be positive")

    @property
    def slab_mass(self) -> float:
        """Probability the untruncated slab assigns to [0, 1]."""
        return float(
            ndtr((1.0 - self.theta_x) / self.sigma_x) - ndtr(-self.theta_x / self.sigma_x)
        )

    @property
    def truncation_mass(self) -> float:
        """lambda: slab mass outside [0, 1] that returns to the spike."""
        return self.alpha * (1.0 - self.slab_mass)

    @property
    def spike_weight(self) -> float:
        """1 - alpha + lambda, the total point mass at zero."""
        return 1.0 - self.alpha * self.slab_mass

    def mean_and_var(self):
        """Mean and variance of the prior (used to initialize the iteration)."""
        mean_t, var_t = _truncated_gaussian_moments(
            np.asarray(self.theta_x), np.asarray(self.sigma_x**2)
        )
        w = self.alpha * self.slab_mass
        mean = w * float(mean_t)
        var = w * (float(var_t) + float(mean_t) ** 2) - mean**2
        return mean, max(var, _VAR_FLOOR)


@dataclass(frozen=True)
class GampConfig:
    """Solver knobs: noise variance, stopping rule, denoiser, damping."""

    sigma_w: float
    max_iters: int = 200
    tol: float = 1e-6
    denoiser: str = "sum-product"
    damping: float = 0.7

    def __post_init__(self):
        if self.sigma_w < 0.0:
            raise ValueError("sigma_w must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.denoiser not in ("sum-product", "max-sum"):
            raise ValueError(f"unknown denoiser {self.denoiser!r}")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")


@dataclass
class GampState:
    """Iterates of one GAMP sweep: estimates over pixels, messages over rows.

    x_hat/var_x/u_hat/var_u have length N_s; s_hat/var_s/z_hat/var_z/q_hat
    have length M_real.  Variance vectors stay strictly positive.
    """

    x_hat: np.ndarray
    var_x: np.ndarray
    s_hat: np.ndarray
    var_s: np.ndarray
    z_hat: np.ndarray
    var_z: np.ndarray
    q_hat: np.ndarray
    u_hat: np.ndarray
    var_u: np.ndarray
    iteration: int = 0


@dataclass
class GampDiagnostics:
    iterations: int = 0
    converged: bool = False
    final_residual: float = np.inf
    residual_trace: list = field(default_factory=list)
    state: GampState | None = None

    def to_dict(self) -> dict:
        # the state arrays are working data, not part of the JSON surface
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "residual_trace": list(self.residual_trace),
        }


def realify(a: np.ndarray, h: np.ndarray):
    """Stack real over imaginary parts: (M, N) complex -> (2M, N) real.

    For real x, a_r @ x equals the stacked real/imaginary parts of a @ x
    exactly, so the real-arithmetic iteration applies unchanged.
    """
    a = np.asarray(a)
    h = np.asarray(h)
    if a.shape[0] != h.shape[0]:
        raise ValueError("matrix and measurement dimensions differ")
    a_r = np.vstack([a.real, a.imag])
    h_r = np.concatenate([h.real, h.imag])
    return a_r, h_r


def _log_gauss_mass(a, b):
    """log P(a < Z < b) for standard normal Z, stable in either tail."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(np.broadcast(a, b).shape)
    a, b = np.broadcast_arrays(a, b)

    left = b <= 0.0
    right = a >= 0.0
    center = ~(left | right)

    # mass entirely in the lower tail: condition on the larger endpoint
    la, lb = a[left], b[left]
    log_b = log_ndtr(lb)
    with np.errstate(divide="ignore"):
        out[left] = log_b + np.log1p(-np.exp(log_ndtr(la) - log_b))
    # upper tail: mirror
    ra, rb = a[right], b[right]
    log_a = log_ndtr(-ra)
    with np.errstate(divide="ignore"):
        out[right] = log_a + np.log1p(-np.exp(log_ndtr(-rb) - log_a))
    # straddles zero: complement of the two tails
    with np.errstate(divide="ignore"):
        out[center] = np.log1p(-ndtr(a[center]) - ndtr(-b[center]))
    return out


def _truncated_gaussian_moments(m, v):
    """Mean/variance of N(m, v) truncated to [0, 1] (stable in far tails)."""
    sd = np.sqrt(v)
    a = (0.0 - m) / sd
    b = (1.0 - m) / sd
    log_mass = _log_gauss_mass(a, b)
    log_phi_a = -0.5 * a * a - _LOG_SQRT_2PI
    log_phi_b = -0.5 * b * b - _LOG_SQRT_2PI
    # ratios phi/Z stay finite where the direct quantities underflow
    with np.errstate(over="ignore", invalid="ignore"):
        r_a = np.exp(np.minimum(log_phi_a - log_mass, 700.0))
        r_b = np.exp(np.minimum(log_phi_b - log_mass, 700.0))
        mean = m + sd * (r_a - r_b)
        var = v * (1.0 + a * r_a - b * r_b - (r_a - r_b) ** 2)
    mean = np.clip(mean, 0.0, 1.0)
    var = np.maximum(var, _VAR_FLOOR)
    # in the extreme tails the float formulas lose the mass entirely; the
    # truncated law then concentrates at the nearer boundary
    bad = ~np.isfinite(mean) | ~np.isfinite(var)
    if np.any(bad):
        mean = np.where(bad, np.clip(m, 0.0, 1.0), mean)
        var = np.where(bad, _VAR_FLOOR, var)
    return mean, var


def g_in(u_hat, var_u, prior: PriorParams, mode: str = "sum-product"):
    """Scalar input denoiser; returns (x_hat, derivative factor).

    The state update consumes the pair as x <- x_hat and
    var_x <- var_u * derivative.  In sum-product mode x_hat is the
    posterior mean under the truncated spike/slab prior and the derivative
    factor equals posterior variance / var_u; in max-sum mode x_hat
    maximizes log prior - (u - x)^2 / (2 var_u) with the point mass
    widened to a Gaussian of standard deviation 1e-3 * sigma_x.
    """
    u_hat = np.asarray(u_hat, dtype=float)
    var_u = np.asarray(var_u, dtype=float)
    if np.any(var_u < _DEGENERATE_VAR):
        raise DegenerateVariance("message variance below 1e-30")
    if mode == "sum-product":
        return _g_in_sum_product(u_hat, var_u, prior)
    if mode == "max-sum":
        return _g_in_max_sum(u_hat, var_u, prior)
    raise ValueError(f"unknown denoiser mode {mode!r}")


def _slab_product_params(u_hat, var_u, prior):
    """Gaussian product N(x|theta, sx^2) N(x|u, var_u) -> (m, v, log scale)."""
    sx2 = prior.sigma_x**2
    v = 1.0 / (1.0 / sx2 + 1.0 / var_u)
    m = v * (prior.theta_x / sx2 + u_hat / var_u)
    tot = sx2 + var_u
    log_scale = -0.5 * (u_hat - prior.theta_x) ** 2 / tot - 0.5 * np.log(tot) - _LOG_SQRT_2PI
    return m, v, log_scale


def _g_in_sum_product(u_hat, var_u, prior):
    m, v, log_slab_scale = _slab_product_params(u_hat, var_u, prior)
    sd = np.sqrt(v)
    log_mass = _log_gauss_mass((0.0 - m) / sd, (1.0 - m) / sd)
    log_slab = np.log(prior.alpha) + log_slab_scale + log_mass
    log_spike = (
        np.log(prior.spike_weight)
        - 0.5 * u_hat**2 / var_u
        - 0.5 * np.log(var_u)
        - _LOG_SQRT_2PI
    )
    pi_slab = expit(log_slab - log_spike)

    mean_t, var_t = _truncated_gaussian_moments(m, v)
    x_hat = pi_slab * mean_t
    second_moment = pi_slab * (var_t + mean_t**2)
    var_post = np.maximum(second_moment - x_hat**2, _VAR_FLOOR)
    return x_hat, var_post / var_u


def _g_in_max_sum(u_hat, var_u, prior):
    sx2 = prior.sigma_x**2
    eps2 = (1e-3 * prior.sigma_x) ** 2

    # spike branch: regularized point mass N(0, eps2)
    v_sp = 1.0 / (1.0 / eps2 + 1.0 / var_u)
    x_sp = v_sp * (u_hat / var_u)
    f_sp = (
        np.log(prior.spike_weight)
        - 0.5 * np.log(2.0 * np.pi * eps2)
        - 0.5 * x_sp**2 / eps2
        - 0.5 * (u_hat - x_sp) ** 2 / var_u
    )

    # slab branch, maximizer clipped to the support
    m, v, _ = _slab_product_params(u_hat, var_u, prior)
    x_sl = np.clip(m, 0.0, 1.0)
    f_sl = (
        np.log(prior.alpha)
        - 0.5 * np.log(2.0 * np.pi * sx2)
        - 0.5 * (x_sl - prior.theta_x) ** 2 / sx2
        - 0.5 * (u_hat - x_sl) ** 2 / var_u
    )

    take_slab = f_sl > f_sp
    x_hat = np.clip(np.where(take_slab, x_sl, x_sp), 0.0, 1.0)
    deriv_slab = np.where(
        (x_sl > 0.0) & (x_sl < 1.0), 1.0 / (1.0 + var_u / sx2), 1e-12
    )
    deriv = np.where(take_slab, deriv_slab, 1.0 / (1.0 + var_u / eps2))
    return x_hat, deriv


def g_out(y, q_hat, var_z, var_w):
    """Output denoiser for the additive Gaussian channel: (y - q)/(var_w + var_z)."""
    total = var_w + np.asarray(var_z, dtype=float)
    if np.any(total <= 0.0):
        raise ZeroVariance("var_w + var_z must be strictly positive")
    return (y - q_hat) / total


def g_out_deriv(y, q_hat, var_z, var_w):
    """Derivative of g_out with respect to q: constant -1/(var_w + var_z)."""
    total = var_w + np.asarray(var_z, dtype=float)
    if np.any(total <= 0.0):
        raise ZeroVariance("var_w + var_z must be strictly positive")
    return -1.0 / total


def run_gamp(a_r: np.ndarray, h_r: np.ndarray, prior: PriorParams, config: GampConfig):
    """Iterate GAMP until sum_m |h_m - z_m| <= tol or max_iters.

    Returns (x_hat clipped to [0, 1], GampDiagnostics).  Non-convergence
    is reported in the diagnostics, not raised; NumericalDivergence is
    raised if any message variance exceeds 1e30.
    """
    a_r = np.asarray(a_r, dtype=float)
    h_r = np.asarray(h_r, dtype=float)
    m_real, n = a_r.shape
    if h_r.shape != (m_real,):
        raise ValueError("measurement length does not match the matrix")

    a_sq = a_r**2
    beta = config.damping

    mean0, var0 = prior.mean_and_var()
    x = np.full(n, max(mean0, 1e-12))
    var_x = np.full(n, var0)
    s = np.zeros(m_real)
    var_s = np.full(m_real, 1.0)
    var_z = np.zeros(m_real)
    q = np.zeros(m_real)
    u = np.zeros(n)
    var_u = np.full(n, 1.0)

    diag = GampDiagnostics()
    converged = False
    z = a_r @ x

    for iteration in range(config.max_iters):
        var_z = a_sq @ var_x
        z = a_r @ x
        q = z - var_z * s

        residual = float(np.abs(h_r - z).sum())
        diag.residual_trace.append(residual)
        if residual <= config.tol:
            converged = True
            break

        s_new = g_out(h_r, q, var_z, config.sigma_w)
        var_s = 1.0 / (config.sigma_w + var_z)
        s = beta * s_new + (1.0 - beta) * s

        var_u = 1.0 / np.maximum(a_sq.T @ var_s, 1e-300)
        u = x + var_u * (a_r.T @ s)

        x_new, deriv = g_in(u, var_u, prior, mode=config.denoiser)
        x = beta * x_new + (1.0 - beta) * x
        var_x = np.maximum(var_u * deriv, _VAR_FLOOR)

        if var_x.max() > _VAR_CEIL or var_z.max() > _VAR_CEIL:
            raise NumericalDivergence("iterate variance exceeded 1e30")

        diag.iterations = iteration + 1

    if converged:
        diag.converged = True
        diag.final_residual = diag.residual_trace[-1]
    else:
        diag.final_residual = float(np.abs(h_r - a_r @ x).sum())
        diag.residual_trace.append(diag.final_residual)
        logger.debug(
            "gamp stopped at max_iters=%d with residual %.3e",
            config.max_iters,
            diag.final_residual,
        )
    diag.state = GampState(
        x_hat=x,
        var_x=var_x,
        s_hat=s,
        var_s=var_s,
        z_hat=z,
        var_z=var_z,
        q_hat=q,
        u_hat=u,
        var_u=var_u,
        iteration=diag.iterations,
    )
    x = np.clip(x, 0.0, 1.0)
    # the posterior mean never reaches zero exactly; snap numerically dead
    # coefficients so null data yields an exactly zero estimate
    x[x < 1e-12] = 0.0
    return x, diag


def noise_variance_from_pilots(noise_var: float, pilot_length: int) -> float:
    """Per-real-component variance of LS channel-estimate noise.

    Complex estimation noise has variance noise_var / T per entry; each
    real component of the realified measurement carries half of that.
    """
    return noise_var / pilot_length / 2.0


def estimate_noise_variance(h_r: np.ndarray, fraction: float = 0.1) -> float:
    """Blind noise estimate from the smallest `fraction` of |h| entries.

    Assumes those entries are noise-dominated half-normal samples and
    corrects for the truncation bias of conditioning on the lowest
    magnitude quantile.
    """
    h_r = np.asarray(h_r, dtype=float)
    count = max(1, int(np.ceil(fraction * h_r.size)))
    smallest = np.sort(np.abs(h_r))[:count]
    # E[Z^2 | |Z| <= z_q] for standard normal, with q = fraction
    from scipy.stats import norm

    z_q = norm.ppf(0.5 + fraction / 2.0)
    correction = (fraction - 2.0 * z_q * norm.pdf(z_q)) / fraction
    raw = float(np.mean(smallest**2))
    return raw / max(correction, 1e-12)
