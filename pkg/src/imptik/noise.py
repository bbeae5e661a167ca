"""Impulsive and Gaussian noise synthesis plus the impulsiveness profile.

The profile eps_xi(eta) is the smallest L1 mass of the noise outside an
excised set of measure at most eta.  Discretely: sort |xi| descending and
take suffix sums; breakpoints sit at eta = j/n with linear interpolation in
between.  The more L-shaped the graph, the more impulsive the noise.

Randomness: all generators use numpy's seeded PCG64 (``default_rng``).  Draw
order is documented and fixed: carrier indices first (uniform choice without
replacement), then signs (salt-and-pepper only).  Identical (params, seed)
give bit-identical realizations.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .mesh import Grid, Signal

__all__ = [
    "NoiseRealization",
    "EpsilonProfile",
    "gen_salt_pepper",
    "gen_pure_impulse",
    "gen_gaussian",
    "epsilon_profile",
    "epsilon_at",
    "eta_bar",
    "improvement_factor",
    "noise_to_text",
    "noise_from_text",
]


@dataclass(eq=False)
class NoiseRealization:
    """A noise signal together with the recipe that produced it."""

    xi: Signal
    seed: int
    kind: str
    params: dict


@dataclass(eq=False)
class EpsilonProfile:
    """Piecewise-linear eta -> eps_xi(eta) with breakpoints at eta = j/n."""

    etas: np.ndarray = field(repr=False)
    eps: np.ndarray = field(repr=False)


def _impulse_carrier(grid: Grid, eta0: float, seed):
    if not 0.0 < eta0 <= 1.0:
        raise ValueError(f"eta0 must be in (0, 1], got {eta0}")
    m = math.ceil(eta0 * grid.n)
    rng = np.random.default_rng(seed)
    idx = rng.choice(grid.n, size=m, replace=False)
    return rng, idx


def gen_salt_pepper(grid: Grid, eta0: float, s: float, seed) -> NoiseRealization:
    """ceil(eta0 n) cells at +-s/eta0 with fair independent signs, rest zero."""
    if s <= 0.0:
        raise ValueError(f"amplitude s must be positive, got {s}")
    rng, idx = _impulse_carrier(grid, eta0, seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=idx.size)
    xi = np.zeros(grid.n)
    xi[idx] = signs * (s / eta0)
    return NoiseRealization(
        xi=Signal(grid=grid, values=xi),
        seed=_seed_int(seed),
        kind="salt_pepper",
        params={"eta0": eta0, "s": s},
    )


def gen_pure_impulse(grid: Grid, eta0: float, s: float, seed) -> NoiseRealization:
    """Like salt-and-pepper but all impulses positive (value s/eta0)."""
    if s <= 0.0:
        raise ValueError(f"amplitude s must be positive, got {s}")
    _, idx = _impulse_carrier(grid, eta0, seed)
    xi = np.zeros(grid.n)
    xi[idx] = s / eta0
    return NoiseRealization(
        xi=Signal(grid=grid, values=xi),
        seed=_seed_int(seed),
        kind="pure_impulse",
        params={"eta0": eta0, "s": s},
    )


def gen_gaussian(grid: Grid, sigma: float, seed) -> NoiseRealization:
    """I.i.d. normal(0, sigma^2) samples."""
    if sigma < 0.0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    rng = np.random.default_rng(seed)
    xi = sigma * rng.standard_normal(grid.n)
    return NoiseRealization(
        xi=Signal(grid=grid, values=xi),
        seed=_seed_int(seed),
        kind="gaussian",
        params={"sigma": sigma},
    )


def _seed_int(seed) -> int:
    """Stable integer label of a seed for provenance records.

    Plain integers pass through; SeedSequence inputs are labeled by their
    first derived state word (a pure function, so the label never perturbs
    the stream the generators consume).
    """
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return int(seed.generate_state(1, np.uint64)[0])


def epsilon_profile(xi: Signal) -> EpsilonProfile:
    """Exact impulsiveness profile of a discrete signal.

    eps(j/n) = (1/n) * sum of the n-j smallest |xi_i|; ties in |xi_i| are
    broken by index order (the values are tie-invariant, only the carrier
    set differs).
    """
    n = xi.grid.n
    a = np.abs(xi.values)
    order = np.argsort(-a, kind="stable")  # descending, ties by index
    desc = a[order]
    # eps[j] = (1/n) * sum_{i > j} desc[i]
    suffix = np.concatenate([np.cumsum(desc[::-1])[::-1], [0.0]])
    etas = np.arange(n + 1) / n
    return EpsilonProfile(etas=etas, eps=suffix / n)


def epsilon_at(profile: EpsilonProfile, eta: float) -> float:
    """Linear interpolation of the profile; exact at breakpoints."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    return float(np.interp(eta, profile.etas, profile.eps))


def eta_bar(profile: EpsilonProfile, gamma: float, kappa: float) -> float:
    """Solve eps(eta) = eta^(gamma/(2-kappa)) by bisection.

    The left side decreases, the right side increases from 0, so the crossing
    is unique.  A zero profile is degenerate: returns 0.0 with a warning.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa must be in (0, 1], got {kappa}")
    if profile.eps[0] <= 0.0:
        warnings.warn("zero noise profile: eta_bar undefined, returning 0")
        return 0.0
    expo = gamma / (2.0 - kappa)

    def f(eta: float) -> float:
        return epsilon_at(profile, eta) - eta**expo

    lo, hi = 0.0, 1.0
    if f(hi) > 0.0:  # profile still above the power at eta=1 (cannot happen: eps(1)=0)
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = f(mid)
        if abs(val) <= 1e-12:
            return mid
        if val > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def improvement_factor(profile: EpsilonProfile, eta_bar_value: float, kappa: float) -> float:
    """(eps(0)/eps(eta_bar))^kappa; +inf when the profile vanishes at eta_bar."""
    e0 = profile.eps[0]
    eb = epsilon_at(profile, eta_bar_value)
    if eb <= 0.0:
        return math.inf
    return float((e0 / eb) ** kappa)


def noise_to_text(noise: NoiseRealization) -> str:
    """Serialize a realization to a plain-text provenance record."""
    buf = io.StringIO()
    buf.write(f"kind={noise.kind}\n")
    buf.write(f"seed={noise.seed}\n")
    buf.write(f"n={noise.xi.grid.n}\n")
    for key in sorted(noise.params):
        buf.write(f"{key}={float(noise.params[key])!r}\n")
    buf.write("values=\n")
    for v in noise.xi.values:
        # repr of a builtin float round-trips the double exactly
        buf.write(f"{float(v)!r}\n")
    return buf.getvalue()


def noise_from_text(text: str) -> NoiseRealization:
    """Inverse of :func:`noise_to_text`."""
    from .mesh import make_grid

    header: dict[str, str] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        i += 1
        if line == "values=":
            break
        key, _, value = line.partition("=")
        header[key] = value
    values = np.array([float(s) for s in lines[i:] if s.strip()])
    n = int(header.pop("n"))
    grid = make_grid(n)
    kind = header.pop("kind")
    seed = int(header.pop("seed"))
    params = {k: float(v) for k, v in header.items()}
    return NoiseRealization(
        xi=Signal(grid=grid, values=values), seed=seed, kind=kind, params=params
    )
