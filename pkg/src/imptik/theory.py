"""Error-bound and convergence-rate calculus for impulsive-noise Tikhonov.

Smoothness of the unknown enters through a concave index function phi
(power form phi(t) = c*t^kappa or sampled data).  From phi the approximation
error bound

    psi(alpha) = (-phi)*(-1/alpha)            (Fenchel conjugate)

and the auxiliary functions theta = alpha*psi, theta_tilde = alpha^q' * psi
drive both the a-priori parameter choice and the error bounds:

    bregman bound  = [2q' eps/alpha + (q'-1) eta^gamma / alpha^q'
                      + C_psi psi(C_err alpha)] / beta
    residual bound = 4q' eps + 2(q'-1) eta^gamma / alpha^(q'-1)
                      + 2 C_psi C_err alpha psi(2 C_err alpha)

where (eps, eta) describe the noise (small L1 mass eps off a set of measure
eta) and gamma = q'(k/d + (p-1)/p) collects the smoothing order of the
forward operator.  For power phi the resulting rates are eps^kappa +
eta^(kappa*gamma/(2-kappa)) in Bregman distance and eps + eta^(gamma/(2-kappa))
in residual; kappa = 1 degenerates into exact penalization (psi is a 0/inf
step).

The reverse direction phi_from_psi recovers (c, kappa) from sampled psi
values via the concave envelope phi_est(t) = min_alpha (psi(alpha) + t/alpha)
and a log-log power fit restricted to the kink range of the envelope.

Constants beta, C_err, C_psi default to 1: they exist but are not numerically
specified, so bounds are meaningful for shape and slope comparison, not as
absolute predictions.  Likewise the smallness threshold on eta under which
the bounds are derived is not a computable number and is not enforced here.
All functions are pure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import isotonic_regression

__all__ = [
    "IndexFunction",
    "RateParams",
    "PhiFromPsiFit",
    "power_index",
    "sampled_index",
    "evaluate_index",
    "gamma_exponent",
    "psi",
    "theta",
    "theta_tilde",
    "invert_monotone",
    "apriori_alpha_power",
    "alpha_choice_case1",
    "bound_bregman",
    "bound_residual",
    "rate_exponents_power",
    "table1_comparison",
    "fenchel_conjugate_numeric",
    "phi_from_psi",
]

_DEGENERATE_PSI_TOL = 1e-7  # max sampled psi below this => exact-penalization regime


@dataclass(frozen=True, eq=False)
class IndexFunction:
    """Concave index function: power law c*t^kappa or piecewise-linear samples."""

    form: str  # "power" or "sampled"
    c: float = 0.0
    kappa: float = 1.0
    points: Optional[np.ndarray] = field(default=None, repr=False)  # (m, 2) rows (t, phi)

    def __post_init__(self):
        if self.form not in ("power", "sampled"):
            raise ValueError(f"form must be 'power' or 'sampled', got {self.form!r}")
        if self.form == "power":
            if not self.c > 0.0:
                raise ValueError(f"power coefficient c must be positive, got {self.c}")
            if not 0.0 < self.kappa <= 1.0:
                raise ValueError(f"kappa must be in (0, 1], got {self.kappa}")
        else:
            if self.points is None or len(self.points) < 2:
                raise ValueError("sampled form needs at least two (t, phi) points")


def power_index(c: float, kappa: float) -> IndexFunction:
    """phi(t) = c * t^kappa with 0 < kappa <= 1."""
    return IndexFunction(form="power", c=c, kappa=kappa)


def sampled_index(points) -> IndexFunction:
    """Piecewise-linear concave index function from (t, phi(t)) samples.

    Ingestion sorts by t, prepends (0, 0) if absent, clips negatives, and
    enforces concavity by antitonic (nonincreasing) regression on the chord
    slopes; a warning is emitted when that projection changes anything
    beyond rounding.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an array of (t, phi(t)) rows")
    order = np.argsort(pts[:, 0], kind="stable")
    t = pts[order, 0]
    v = pts[order, 1]
    if t[0] < 0.0:
        raise ValueError("sample abscissae must be nonnegative")
    if t[0] > 0.0:
        t = np.concatenate([[0.0], t])
        v = np.concatenate([[0.0], v])
    else:
        v = v.copy()
        v[0] = 0.0
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("sample abscissae must be strictly increasing")
    v = np.maximum(v, 0.0)
    dt = np.diff(t)
    slopes = np.diff(v) / dt
    proj = isotonic_regression(slopes, weights=dt, increasing=False).x
    if np.any(proj < 0.0):
        proj = np.maximum(proj, 0.0)
    v_new = np.concatenate([[0.0], np.cumsum(proj * dt)])
    drift = np.max(np.abs(v_new - v)) if len(v) else 0.0
    if drift > 1e-9 * max(1.0, float(np.max(np.abs(v)))):
        warnings.warn(
            f"sampled index function adjusted for concavity/monotonicity "
            f"(max change {drift:.3e})"
        )
    return IndexFunction(form="sampled", points=np.column_stack([t, v_new]))


def evaluate_index(phi: IndexFunction, t) -> np.ndarray:
    """phi(t); sampled form interpolates linearly and holds the last value."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0.0):
        raise ValueError("index functions are defined for t >= 0")
    if phi.form == "power":
        out = phi.c * t_arr**phi.kappa
    else:
        out = np.interp(t_arr, phi.points[:, 0], phi.points[:, 1])
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RateParams:
    """Operator/penalty parameters entering the error bounds."""

    k: float  # smoothing order of the forward operator
    p: float  # integrability exponent of the data space (math.inf allowed)
    d: int = 1  # spatial dimension
    q_prime: float = 2.0  # conjugate exponent of the penalty
    beta: float = 1.0  # variational-inequality constant
    C_err: float = 1.0  # multiplicative constant >= 1
    C_psi: float = 1.0  # bound constant > 0
    r: float = 1.0  # fidelity exponent (L1 here)

    def __post_init__(self):
        if self.k < 0.0:
            raise ValueError(f"k must be nonnegative, got {self.k}")
        if self.p < 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not self.q_prime > 1.0:
            raise ValueError(f"q_prime must exceed 1, got {self.q_prime}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.C_err < 1.0:
            raise ValueError(f"C_err must be >= 1, got {self.C_err}")
        if not self.C_psi > 0.0:
            raise ValueError(f"C_psi must be positive, got {self.C_psi}")

    @property
    def gamma(self) -> float:
        return gamma_exponent(self.k, self.p, self.d, self.q_prime)


def gamma_exponent(k: float, p: float, d: int, q_prime: float) -> float:
    """gamma = q'(k/d) + q'(p-1)/p, with (p-1)/p := 1 for p = inf.

    Requires k > d/p (or k = 0 with p = inf): the forward operator must
    smooth into the dual of a space containing the impulsive part.
    """
    if math.isinf(p):
        frac = 1.0
        if k < 0.0:
            raise ValueError(f"k must be nonnegative, got {k}")
    else:
        frac = (p - 1.0) / p
        if not k * p > d:
            raise ValueError(
                f"need k > d/p for the embedding (got k={k}, d={d}, p={p})"
            )
    return q_prime * (k / d) + q_prime * frac


def _power_psi_coeff(c: float, kappa: float) -> float:
    """C with (-phi)*(-s) = C * s^(kappa/(kappa-1)) for phi = c t^kappa, kappa<1."""
    ck = c * kappa
    return c * ck ** (-kappa / (kappa - 1.0)) - ck ** (-1.0 / (kappa - 1.0))


def psi(phi: IndexFunction, alpha: float) -> float:
    """Approximation-error bound psi(alpha) = (-phi)*(-1/alpha).

    Power form with kappa < 1: C * alpha^(kappa/(1-kappa)) in closed form.
    kappa = 1: 0 for alpha <= 1/c and +inf above (exact-penalization step).
    Sampled form: sup over the sample grid of (phi(t) - t/alpha).
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if phi.form == "power":
        if phi.kappa == 1.0:
            return 0.0 if alpha <= 1.0 / phi.c else math.inf
        return _power_psi_coeff(phi.c, phi.kappa) * alpha ** (
            phi.kappa / (1.0 - phi.kappa)
        )
    t = phi.points[:, 0]
    v = phi.points[:, 1]
    return float(np.max(v - t / alpha))


def theta(phi: IndexFunction, alpha: float) -> float:
    """theta(alpha) = alpha * psi(alpha)."""
    return alpha * psi(phi, alpha)


def theta_tilde(phi: IndexFunction, alpha: float, q_prime: float) -> float:
    """theta_tilde(alpha) = alpha^q' * psi(alpha)."""
    if not q_prime > 1.0:
        raise ValueError(f"q_prime must exceed 1, got {q_prime}")
    return alpha**q_prime * psi(phi, alpha)


def invert_monotone(
    f: Callable[[float], float], y: float, bracket: Tuple[float, float]
) -> float:
    """Bisection solve of f(x) = y for continuous nondecreasing f on bracket.

    Terminates when |f(x) - y| <= 1e-12 * max(1, |y|); y outside the range
    of f on the bracket is an error (endpoint values are accepted).
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo <= hi:
        raise ValueError(f"invalid bracket {bracket}")
    tol = 1e-12 * max(1.0, abs(y))
    f_lo, f_hi = f(lo), f(hi)
    if y < f_lo - tol or y > f_hi + tol:
        raise ValueError(
            f"target {y} outside the function range [{f_lo}, {f_hi}] on the bracket"
        )
    if abs(f_lo - y) <= tol:
        return lo
    if abs(f_hi - y) <= tol:
        return hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        val = f(mid)
        if abs(val - y) <= tol:
            return mid
        if val < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-300:
            break
    return 0.5 * (lo + hi)


def apriori_alpha_power(
    c: float, kappa: float, r: float, C_err: float, errbound: float
) -> float:
    """A-priori choice alpha = errbound^(1-kappa) / (c kappa r^kappa C_err^kappa)."""
    if not (c > 0.0 and 0.0 < kappa <= 1.0 and r > 0.0 and C_err > 0.0):
        raise ValueError("c, r, C_err must be positive and kappa in (0, 1]")
    if errbound < 0.0:
        raise ValueError(f"errbound must be nonnegative, got {errbound}")
    return errbound ** (1.0 - kappa) / (c * kappa * r**kappa * C_err**kappa)


def _grow_bracket(f: Callable[[float], float], y: float) -> Tuple[float, float]:
    hi = 1.0
    for _ in range(200):
        if f(hi) >= y:
            return (0.0, hi)
        hi *= 2.0
    raise ValueError(f"could not bracket target {y}: function stays below it")


def alpha_choice_case1(
    phi: IndexFunction, q_prime: float, epsilon: float, eta: float, gamma: float
) -> float:
    """Error-balancing choice alpha = theta^-1(eps) + theta_tilde^-1(eta^gamma).

    Valid for strictly sublinear phi (power kappa < 1, or sampled concave);
    noise-free input (eps = eta = 0) is rejected — that regime is exact
    penalization, where any alpha below the step threshold is exact.
    """
    if epsilon < 0.0 or eta < 0.0:
        raise ValueError("epsilon and eta must be nonnegative")
    if epsilon == 0.0 and eta == 0.0:
        raise ValueError(
            "epsilon = eta = 0 has no balancing alpha; use the exact-penalization path"
        )
    if phi.form == "power" and phi.kappa >= 1.0:
        raise ValueError("kappa = 1 is the exact-penalization regime; no Case-1 alpha")
    total = 0.0
    if epsilon > 0.0:
        f1 = lambda a: theta(phi, a) if a > 0.0 else 0.0
        total += invert_monotone(f1, epsilon, _grow_bracket(f1, epsilon))
    if eta > 0.0:
        target = eta**gamma
        f2 = lambda a: theta_tilde(phi, a, q_prime) if a > 0.0 else 0.0
        total += invert_monotone(f2, target, _grow_bracket(f2, target))
    return total


def bound_bregman(
    params: RateParams, phi: IndexFunction, epsilon: float, eta: float, alpha: float
) -> float:
    """Bregman-distance error bound at a given alpha.

    [2q' eps/alpha + (q'-1) eta^gamma / alpha^q' + C_psi psi(C_err alpha)] / beta.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    qp = params.q_prime
    g = params.gamma
    return (
        2.0 * qp * epsilon / alpha
        + (qp - 1.0) * eta**g / alpha**qp
        + params.C_psi * psi(phi, params.C_err * alpha)
    ) / params.beta


def bound_residual(
    params: RateParams, phi: IndexFunction, epsilon: float, eta: float, alpha: float
) -> float:
    """Data-misfit error bound (against exact data) at a given alpha.

    4q' eps + 2(q'-1) eta^gamma / alpha^(q'-1) + 2 C_psi C_err alpha psi(2 C_err alpha).
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    qp = params.q_prime
    g = params.gamma
    return (
        4.0 * qp * epsilon
        + 2.0 * (qp - 1.0) * eta**g / alpha ** (qp - 1.0)
        + 2.0 * params.C_psi * params.C_err * alpha * psi(phi, 2.0 * params.C_err * alpha)
    )


def rate_exponents_power(kappa: float, gamma: float) -> Tuple[float, float, float, float]:
    """Rate exponents (breg_eps, breg_eta, res_eps, res_eta) for power phi.

    Bregman error = O(eps^kappa + eta^(kappa gamma/(2-kappa))), residual =
    O(eps + eta^(gamma/(2-kappa))).  Only for kappa < 1; at kappa = 1 the
    rates degenerate to O(eps + eta^gamma) via exact penalization.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError(
            f"kappa must be in (0, 1); kappa = 1 follows the exact-penalization "
            f"rates O(eps + eta^gamma) (got {kappa})"
        )
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return (kappa, kappa * gamma / (2.0 - kappa), 1.0, gamma / (2.0 - kappa))


def table1_comparison(
    s: float, eta0: float, kappa: float, kappa_tilde: float, gamma: float
) -> dict:
    """Bound magnitudes for impulses of strength s/eta0 on measure eta0.

    Compares L2 fidelity (exponent kappa_tilde, driven by the L2 noise norm
    s/sqrt(eta0)), the standard L1 analysis (driven by the L1 norm s), and
    the impulsive-noise analysis (driven by eta0 alone until the s branch
    binds).  The new bounds are scale-free: once the eta0 branch is active
    they do not grow with s.
    """
    for name, val in (("s", s), ("eta0", eta0), ("gamma", gamma)):
        if not val > 0.0:
            raise ValueError(f"{name} must be positive, got {val}")
    for name, val in (("kappa", kappa), ("kappa_tilde", kappa_tilde)):
        if not 0.0 < val < 1.0:
            raise ValueError(f"{name} must be in (0, 1), got {val}")
    return {
        "L2_breg": s ** (2.0 * kappa_tilde) / eta0**kappa_tilde,
        "L1_std_breg": s**kappa,
        "L1_new_breg": min(eta0 ** (kappa * gamma / (2.0 - kappa)), s**kappa),
        "L2_res": s / math.sqrt(eta0),
        "L1_std_res": s,
        "L1_new_res": min(eta0 ** (gamma / (2.0 - kappa)), s),
    }


def fenchel_conjugate_numeric(samples, s: float) -> float:
    """(-phi)*(s) = sup_t (s t + phi(t)) over sampled (t, phi(t)), s < 0."""
    if s >= 0.0:
        raise ValueError(f"the conjugate is finite only for s < 0, got s = {s}")
    pts = np.asarray(samples, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("samples must be an array of (t, phi(t)) rows")
    return float(np.max(s * pts[:, 0] + pts[:, 1]))


@dataclass(frozen=True, eq=False)
class PhiFromPsiFit:
    """Concave envelope of sampled psi with its power-law fit."""

    index: IndexFunction  # sampled envelope phi_est
    c: float  # fitted coefficient
    kappa: float  # fitted exponent, clamped to (0, 1]
    fit_residual: float  # rms residual of the log-log fit
    degenerate: bool  # True when psi ~ 0 (exact-penalization regime)


def phi_from_psi(samples, t_grid) -> PhiFromPsiFit:
    """Recover the index function from sampled approximation errors.

    phi_est(t) = min over samples of (psi_value + t/alpha) — the concave
    envelope dual to the conjugate defining psi.  The power fit of
    log phi_est against log t uses only the kink range of the envelope
    (t where the minimizing alpha is interior to the sampled range);
    outside it the envelope follows the boundary chords, which would bias
    the exponent.  A psi that is zero to solver precision signals exact
    penalization: the envelope is reported as 0 with kappa = 1.
    """
    pts = np.asarray(samples, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least three (alpha, psi) samples")
    t_arr = np.asarray(t_grid, dtype=np.float64)
    if np.any(t_arr <= 0.0):
        raise ValueError("t_grid must be positive")
    order = np.argsort(pts[:, 0], kind="stable")
    alphas = pts[order, 0]
    psis = np.maximum(pts[order, 1], 0.0)
    if not alphas[0] > 0.0:
        raise ValueError("alpha samples must be positive")
    if alphas[-1] / alphas[0] < 1e3 - 1e-9:
        warnings.warn("alpha samples span fewer than 3 decades; fit may be poor")

    if float(np.max(psis)) <= _DEGENERATE_PSI_TOL:
        zero = sampled_index(np.column_stack([t_arr, np.zeros_like(t_arr)]))
        return PhiFromPsiFit(
            index=zero, c=0.0, kappa=1.0, fit_residual=0.0, degenerate=True
        )

    def envelope(ts: np.ndarray) -> np.ndarray:
        return np.min(psis[None, :] + ts[:, None] / alphas[None, :], axis=1)

    # kink range: t values where the active line of the envelope still
    # changes.  Outside it one sample dominates (the flat solver-noise
    # region at small t, the largest-alpha chord at large t) and the
    # envelope stops carrying power-law information.
    t_scan = np.geomspace(1e-14, 1e2, 400)
    active = np.argmin(psis[None, :] + t_scan[:, None] / alphas[None, :], axis=1)
    changes = np.nonzero(np.diff(active) != 0)[0]
    if len(changes) >= 1:
        t_lo, t_hi = t_scan[changes[0] + 1], t_scan[changes[-1] + 1]
    else:
        t_lo, t_hi = 1e-8, 1.0
    t_fit = np.geomspace(t_lo, t_hi, 64)
    logt = np.log(t_fit)
    logp = np.log(envelope(t_fit))
    kappa_fit, logc = np.polyfit(logt, logp, 1)
    resid = float(np.sqrt(np.mean((np.polyval([kappa_fit, logc], logt) - logp) ** 2)))
    kappa_cl = float(min(max(kappa_fit, 1e-8), 1.0))
    return PhiFromPsiFit(
        index=sampled_index(np.column_stack([t_arr, envelope(t_arr)])),
        c=float(np.exp(logc)),
        kappa=kappa_cl,
        fit_residual=resid,
        degenerate=False,
    )
