"""Estimators for the paired sample (eta, xi).

Two tail-index estimators act on the xi column: a generalized probability
weighted moment (GPWM) ratio and maximum likelihood (ML) for the Frechet
shape. Three rank-based estimators act on the eta columns and return the
dependence curve of the scaled observations on a simplex grid: the
min-projection (P) and log-mean (CFG) estimators built from the pseudo-angle

    theta_i(t) = min_{j: t_j > 0} { -(1/t_j) * ln u_ij },

whose population law under an extreme-value copula is exponential with rate
A(t), and a madogram (MD) estimator built from first-order differences of
powered pseudo-uniforms. The composite estimator plugs the estimated tail
index and dependence curve into the inverse scaling transform to recover the
dependence curve of the underlying, unobserved observations.

Rank conventions: pseudo-uniforms are rank/(n+1), i.e. the empirical CDF
shrunk by n/(n+1). This keeps every logarithm finite, makes the u^(1/0) = 0
convention for vanishing weights total, and pins the madogram estimator to
exactly 1 at the vertices, matching the endpoint-corrected family.
"""

import io
from dataclasses import dataclass

import numpy as np

from .depcore import GridCurve, edge_grid
from .errors import DomainError, EstimationError
from .specfun import ln_gamma, regularized_lower_gamma
from .samplers import PairedSample

__all__ = [
    "EULER_MASCHERONI",
    "EmpiricalMargins",
    "pseudo_uniforms",
    "pickands_angles",
    "pickands_p",
    "pickands_cfg",
    "pickands_md",
    "madogram_nu",
    "pickands_curve_raw",
    "endpoint_correct",
    "gpwm_alpha",
    "gpwm_weights",
    "ml_alpha",
    "ml_score",
    "invert_curve",
    "CompositeConfig",
    "CurveEstimate",
    "composite_estimate",
]

EULER_MASCHERONI = 0.5772156649015329

PICK_ESTIMATORS = ("P", "CFG", "MD")
ALPHA_ESTIMATORS = ("GPWM", "ML")


@dataclass(frozen=True)
class EmpiricalMargins:
    """Rank-based marginal step functions of a paired sample.

    eta_sorted holds each eta column sorted ascending; xi_sorted the sorted
    xi column. The per-column empirical CDF takes values in {0, 1/n, ..., 1}
    and is right-continuous.
    """

    eta_sorted: np.ndarray
    xi_sorted: np.ndarray

    @classmethod
    def from_sample(cls, sample):
        return cls(np.sort(sample.eta, axis=0), np.sort(sample.xi))

    @property
    def n(self):
        return self.eta_sorted.shape[0]

    def eta_cdf(self, j, x):
        return np.searchsorted(self.eta_sorted[:, j], x, side="right") / self.n

    def xi_cdf(self, x):
        return np.searchsorted(self.xi_sorted, x, side="right") / self.n


def pseudo_uniforms(eta):
    """Per-column pseudo-uniforms rank/(n+1) (max rank under ties)."""
    eta = np.asarray(eta, dtype=float)
    n, d = eta.shape
    out = np.empty_like(eta)
    for j in range(d):
        col = eta[:, j]
        out[:, j] = np.searchsorted(np.sort(col), col, side="right")
    return out / (n + 1.0)


def _uniforms_of(sample_or_u):
    if isinstance(sample_or_u, PairedSample):
        return pseudo_uniforms(sample_or_u.eta)
    u = np.asarray(sample_or_u, dtype=float)
    if u.ndim != 2 or u.shape[0] < 2:
        raise DomainError("need an (n, d) matrix of pseudo-uniform values with n >= 2")
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError("pseudo-uniform values must lie strictly inside (0, 1)")
    return u


def pickands_angles(sample_or_u, t):
    """Per-row pseudo-angles theta_i(t); coordinates with t_j = 0 are skipped."""
    u = _uniforms_of(sample_or_u)
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size != u.shape[1]:
        raise DomainError("simplex point dimension must match the data")
    neg_log = -np.log(u)
    with np.errstate(divide="ignore"):
        ratios = np.where(t > 0.0, neg_log / t, np.inf)
    return ratios.min(axis=1)


def pickands_p(sample_or_u, t):
    """Min-projection estimate 1 / mean(theta) of the dependence at t."""
    return 1.0 / float(np.mean(pickands_angles(sample_or_u, t)))


def pickands_cfg(sample_or_u, t):
    """Log-mean estimate exp(-mean ln theta - EulerGamma) of the dependence at t."""
    return float(np.exp(-np.mean(np.log(pickands_angles(sample_or_u, t))) - EULER_MASCHERONI))


def madogram_nu(sample_or_u, t):
    """First-order madogram of powered pseudo-uniforms at t,

        nu(t) = mean_i [ max_j u_ij^(1/t_j) - (1/d) sum_j u_ij^(1/t_j) ],

    with u^(1/0) = 0 for u in (0, 1)."""
    u = _uniforms_of(sample_or_u)
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size != u.shape[1]:
        raise DomainError("simplex point dimension must match the data")
    with np.errstate(divide="ignore"):
        powered = u ** np.where(t > 0.0, 1.0 / t, np.inf)
    return float(np.mean(powered.max(axis=1) - powered.mean(axis=1)))


def _md_normalizer(t, dim_factor):
    t = np.asarray(t, dtype=float)
    c = np.sum(t / (1.0 + t), axis=-1)
    return c / t.shape[-1] if dim_factor else c


def pickands_md(sample_or_u, t, dim_factor=True):
    """Madogram estimate (nu + c) / (1 - nu - c) of the dependence at t.

    dim_factor selects the normalizer c(t) = (1/d) sum t_j / (1 + t_j); the
    variant without 1/d is kept for comparison but fails the complete
    dependence and independence population identities for d >= 2.
    """
    nu = madogram_nu(sample_or_u, t)
    c = float(_md_normalizer(np.asarray(t, dtype=float), dim_factor))
    denom = 1.0 - nu - c
    if denom <= 0.0:
        return 1.0
    return (nu + c) / denom


# ---------------------------------------------------------------------------
# Whole-curve evaluation on the bivariate grid
# ---------------------------------------------------------------------------

_GRID_CHUNK_CELLS = 8_000_000


def pickands_curve_raw(u, w, pick, dim_factor=True):
    """Raw (uncorrected) dependence curve of one rank-based estimator.

    u is the (n, 2) matrix of pseudo-uniforms, w the grid of curve
    coordinates. Returns (values, flags) where flags marks grid nodes whose
    madogram denominator was not positive (always False for P and CFG).
    """
    if pick not in PICK_ESTIMATORS:
        raise DomainError(f"unknown dependence estimator {pick!r}")
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    n = u.shape[0]
    values = np.empty(w.size)
    flags = np.zeros(w.size, dtype=bool)
    step = max(1, _GRID_CHUNK_CELLS // max(n, 1))
    neg_log = -np.log(u) if pick in ("P", "CFG") else None
    for lo in range(0, w.size, step):
        cols = w[lo : lo + step]
        t1 = 1.0 - cols
        t2 = cols
        if pick in ("P", "CFG"):
            with np.errstate(divide="ignore"):
                a = np.where(t1 > 0.0, neg_log[:, 0:1] / t1, np.inf)
                b = np.where(t2 > 0.0, neg_log[:, 1:2] / t2, np.inf)
            theta = np.minimum(a, b)
            if pick == "P":
                values[lo : lo + step] = 1.0 / theta.mean(axis=0)
            else:
                values[lo : lo + step] = np.exp(
                    -np.log(theta).mean(axis=0) - EULER_MASCHERONI
                )
        else:
            with np.errstate(divide="ignore"):
                v1 = u[:, 0:1] ** np.where(t1 > 0.0, 1.0 / t1, np.inf)
                v2 = u[:, 1:2] ** np.where(t2 > 0.0, 1.0 / t2, np.inf)
            nu = (np.maximum(v1, v2) - 0.5 * (v1 + v2)).mean(axis=0)
            c = 0.5 * (t1 / (1.0 + t1) + t2 / (1.0 + t2))
            if not dim_factor:
                c = 2.0 * c
            denom = 1.0 - nu - c
            bad = denom <= 0.0
            values[lo : lo + step] = np.where(bad, 1.0, (nu + c) / np.where(bad, 1.0, denom))
            flags[lo : lo + step] = bad
    return values, flags


def endpoint_correct(values, w, pick):
    """Vertex-pinning corrections so the corrected curve equals 1 at w = 0, 1.

    P corrects on the reciprocal scale, CFG on the log scale; the madogram
    estimator is already exact at the vertices under the rank/(n+1)
    convention, so its correction is the identity.
    """
    if pick not in PICK_ESTIMATORS:
        raise DomainError(f"unknown dependence estimator {pick!r}")
    values = np.asarray(values, dtype=float)
    w = np.asarray(w, dtype=float)
    if values.shape != w.shape:
        raise DomainError("curve and grid must have matching shapes")
    if pick == "MD":
        return values.copy()
    if pick == "P":
        inv = 1.0 / values - (1.0 - w) * (1.0 / values[0] - 1.0) - w * (1.0 / values[-1] - 1.0)
        with np.errstate(divide="ignore"):
            return np.where(inv > 0.0, 1.0 / inv, np.inf)
    return np.exp(np.log(values) - (1.0 - w) * np.log(values[0]) - w * np.log(values[-1]))


# ---------------------------------------------------------------------------
# Tail-index estimators on the xi column
# ---------------------------------------------------------------------------


def gpwm_weights(n, b):
    """Exact order-statistic weights of the moment mu_{1,b}.

    mu_{1,b} = int_0^1 H_n^{-1}(v) v (-ln v)^b dv with a piecewise-constant
    empirical quantile function reduces to sum_i x_(i) w_i with

        w_i = int_{(i-1)/n}^{i/n} v (-ln v)^b dv
            = Gamma(b+1)/2^(b+1) * [P(b+1, -2 ln((i-1)/n)) - P(b+1, -2 ln(i/n))]

    (substitution v = e^(-s/2); P is the regularized lower incomplete gamma).
    """
    if n < 1 or b < 0:
        raise DomainError("need n >= 1 and b >= 0")
    edges = np.arange(n + 1) / n
    with np.errstate(divide="ignore"):
        args = -2.0 * np.log(edges)
    reg = regularized_lower_gamma(b + 1.0, args)
    scale = np.exp(ln_gamma(b + 1.0)) / 2.0 ** (b + 1)
    return scale * (reg[:-1] - reg[1:])


def gpwm_alpha(xi, k=5):
    """Generalized probability-weighted-moment estimate of the Frechet shape,

        alpha_hat = (k - 2 mu_{1,k} / mu_{1,k-1})^(-1),

    with the moments evaluated exactly from the order statistics. The ratio
    is scale-free. Intended validity requires alpha > 1/(k-1); a
    nonpositive denominator raises EstimationError.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size < 2:
        raise DomainError("xi must be a vector with at least 2 entries")
    if int(k) < 2:
        raise DomainError(f"moment order k must be >= 2, got {k!r}")
    if not (np.all(np.isfinite(xi)) and np.all(xi > 0.0)):
        raise DomainError("xi entries must be finite and positive")
    k = int(k)
    x = np.sort(xi)
    n = x.size
    mu_hi = float(x @ gpwm_weights(n, k))
    mu_lo = float(x @ gpwm_weights(n, k - 1))
    denom = k - 2.0 * mu_hi / mu_lo
    # the denominator is 1/alpha; at or below rounding level the data carry
    # no tail information (a constant sample lands exactly at zero)
    if denom <= 1e-9:
        raise EstimationError(
            f"moment ratio gave vanishing shape denominator {denom!r}", stage="GPWM"
        )
    return 1.0 / denom


def ml_score(alpha, xi):
    """Mean Frechet-shape score (1/a) + mean(ln x * (x^-a - 1)) at shape a."""
    lx = np.log(np.asarray(xi, dtype=float))
    with np.errstate(over="ignore"):
        ex = np.exp(np.minimum(-alpha * lx, 700.0))
    return 1.0 / alpha + float(np.mean(lx * (ex - 1.0)))


def _ml_score_deriv(alpha, xi):
    lx = np.log(np.asarray(xi, dtype=float))
    with np.errstate(over="ignore"):
        ex = np.exp(np.minimum(-alpha * lx, 700.0))
    return -1.0 / alpha**2 - float(np.mean(lx * lx * ex))


_ML_BRACKET = (1e-3, 50.0)


def ml_alpha(xi, init=None, tol=1e-12, max_iter=200):
    """Maximum-likelihood Frechet shape for the unit-scale model.

    Finds the root of the mean score, which is strictly decreasing in the
    shape, by Newton iteration safeguarded with bisection on the bracket
    [1e-3, 50]; the returned root satisfies |mean score| <= 1e-10.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size < 2:
        raise DomainError("xi must be a vector with at least 2 entries")
    if not (np.all(np.isfinite(xi)) and np.all(xi > 0.0)):
        raise DomainError("xi entries must be finite and positive")
    if np.all(xi == xi[0]):
        raise EstimationError("all xi values are equal; shape is unidentified", stage="ML")
    lo, hi = _ML_BRACKET
    s_lo = ml_score(lo, xi)
    s_hi = ml_score(hi, xi)
    if not (s_lo > 0.0 > s_hi):
        raise EstimationError(
            f"score has no sign change on [{lo}, {hi}] "
            f"(score({lo}) = {s_lo!r}, score({hi}) = {s_hi!r})",
            stage="ML",
        )
    if init is None:
        try:
            init = gpwm_alpha(xi)
        except EstimationError:
            mean_lx = float(np.mean(np.log(xi)))
            init = 1.0 / mean_lx if mean_lx > 0.0 else 1.0
    a = float(np.clip(init, lo, hi))
    s = ml_score(a, xi)
    for _ in range(max_iter):
        if abs(s) <= tol:
            break
        if s > 0.0:
            lo = a
        else:
            hi = a
        step = s / _ml_score_deriv(a, xi)
        candidate = a - step
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)
        a = candidate
        s = ml_score(a, xi)
    if abs(s) > 1e-10:
        raise EstimationError(f"score iteration stalled at |score| = {abs(s)!r}", stage="ML")
    return a


# ---------------------------------------------------------------------------
# Composite estimator
# ---------------------------------------------------------------------------

_ALPHA_CLAMP = 1.0 - 1e-6


@dataclass(frozen=True)
class CompositeConfig:
    """Choices for one composite fit: dependence estimator in {P, CFG, MD},
    tail estimator in {GPWM, ML}, GPWM moment order k, grid size, whether to
    apply the vertex corrections, and which madogram normalizer to use."""

    pick: str = "CFG"
    alpha_method: str = "GPWM"
    k: int = 5
    grid_size: int = 201
    corrected: bool = True
    md_dim_factor: bool = True

    def __post_init__(self):
        if self.pick not in PICK_ESTIMATORS:
            raise DomainError(f"unknown dependence estimator {self.pick!r}")
        if self.alpha_method not in ALPHA_ESTIMATORS:
            raise DomainError(f"unknown tail estimator {self.alpha_method!r}")
        if int(self.grid_size) < 3 or int(self.grid_size) % 2 == 0:
            raise DomainError("grid size must be an odd integer >= 3")

    @property
    def label(self):
        return f"{self.pick}-{self.alpha_method}"


def estimate_alpha(xi, method, k=5):
    """Dispatch to the named tail-index estimator."""
    if method == "GPWM":
        return gpwm_alpha(xi, k=k)
    if method == "ML":
        return ml_alpha(xi)
    raise DomainError(f"unknown tail estimator {method!r}")


def clamp_alpha(alpha_raw):
    """Force the tail estimate into (0, 1) as the inverse transform requires.

    Returns (alpha_used, clamped). Estimates >= 1 are pulled to 1 - 1e-6 so
    Monte Carlo sweeps complete; the flag keeps the event visible.
    """
    if alpha_raw >= 1.0:
        return _ALPHA_CLAMP, True
    if alpha_raw <= 0.0:
        raise EstimationError(f"tail estimate {alpha_raw!r} is not positive", stage="alpha")
    return alpha_raw, False


def invert_curve(a_alpha_values, w, alpha):
    """Pointwise inverse scaling transform of a dependence curve on the grid.

    Returns (astar, clamp_mask): astar(w) = (A_alpha(w) / |t|_a)^(1/alpha)
    clipped into its envelope [max of the reparametrized point, 1]; the mask
    marks nodes moved by more than rounding.
    """
    a_alpha_values = np.asarray(a_alpha_values, dtype=float)
    w = np.asarray(w, dtype=float)
    t1 = 1.0 - w
    t2 = w
    p1 = t1 ** (1.0 / alpha)
    p2 = t2 ** (1.0 / alpha)
    s = p1 + p2
    norm = s**alpha
    with np.errstate(over="ignore"):
        raw = (a_alpha_values / norm) ** (1.0 / alpha)
    lower = np.maximum(p1, p2) / s
    clipped = np.clip(raw, lower, 1.0)
    mask = ~(np.abs(clipped - raw) <= 1e-12)
    return clipped, mask


def _reparametrized_coordinate(w, alpha):
    t1 = (1.0 - w) ** alpha
    t2 = w**alpha
    return t2 / (t1 + t2)


@dataclass
class CurveEstimate:
    """One composite fit: the estimated dependence curve of the scaled data
    (a_alpha), its inverse transform (a_star), the recovered base curve
    (a_base), and the tail estimate that tied them together."""

    w: np.ndarray
    a_alpha: np.ndarray
    a_star: np.ndarray
    a_base: np.ndarray
    alpha_hat: float
    alpha_raw: float
    pick: str
    alpha_method: str
    corrected: bool
    alpha_clamped: bool
    clamp_mask: np.ndarray

    @property
    def label(self):
        return f"{self.pick}-{self.alpha_method}"

    @property
    def n_clamped(self):
        return int(np.count_nonzero(self.clamp_mask))

    def to_csv(self, path_or_buf):
        header = "t,A_alpha_hat,A_star_hat,A_hat,alpha_hat,estimator_pair,corrected,clamped"
        lines = [header]
        for i in range(self.w.size):
            lines.append(
                ",".join(
                    [
                        repr(float(self.w[i])),
                        repr(float(self.a_alpha[i])),
                        repr(float(self.a_star[i])),
                        repr(float(self.a_base[i])),
                        repr(float(self.alpha_hat)),
                        self.label,
                        str(int(self.corrected)),
                        str(int(bool(self.clamp_mask[i]))),
                    ]
                )
            )
        text = "\n".join(lines) + "\n"
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            path_or_buf.write(text)

    def as_grid_curve(self):
        return GridCurve(self.a_star)


def composite_estimate(sample, config=CompositeConfig()):
    """Fit the composite estimator to a paired sample.

    The tail index is estimated from the xi column, the dependence curve of
    the scaled data from the eta ranks, corrections applied per the config,
    and the two are combined through the inverse scaling transform; the base
    curve is read off the inverse-transformed curve at the reparametrized
    coordinates. Estimation failures propagate as EstimationError with the
    failing stage named.
    """
    if sample.dim != 2:
        raise DomainError("composite estimation is implemented for dimension 2 only")
    alpha_raw = estimate_alpha(sample.xi, config.alpha_method, k=config.k)
    alpha_hat, alpha_clamped = clamp_alpha(alpha_raw)
    w = edge_grid(config.grid_size)
    u = pseudo_uniforms(sample.eta)
    values, md_flags = pickands_curve_raw(u, w, config.pick, config.md_dim_factor)
    if config.corrected:
        values = endpoint_correct(values, w, config.pick)
    a_star, clamp_mask = invert_curve(values, w, alpha_hat)
    clamp_mask = clamp_mask | md_flags
    a_base = np.interp(_reparametrized_coordinate(w, alpha_hat), w, a_star)
    return CurveEstimate(
        w=w,
        a_alpha=values,
        a_star=a_star,
        a_base=a_base,
        alpha_hat=alpha_hat,
        alpha_raw=alpha_raw,
        pick=config.pick,
        alpha_method=config.alpha_method,
        corrected=config.corrected,
        alpha_clamped=alpha_clamped,
        clamp_mask=clamp_mask,
    )
