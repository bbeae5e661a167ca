"""Midpoint grids on [0,1], discrete signals, and weighted norms.

The domain is always the unit interval with uniform cell measure 1/n, so the
discrete L^p norms carry a 1/n weight and the total measure is 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "Signal",
    "make_grid",
    "inner",
    "norm",
    "bregman_error",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform midpoint mesh: x_i = (2i-1)/(2n), each cell of measure 1/n."""

    n: int
    points: np.ndarray = field(repr=False)
    weight: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"grid size must be positive, got {self.n}")


@dataclass(frozen=True, eq=False)
class Signal:
    """Pointwise samples of a function on a Grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"signal length {values.shape} does not match grid size {self.grid.n}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("signal contains non-finite entries")
        object.__setattr__(self, "values", values)


def make_grid(n: int) -> Grid:
    """Build the n-point midpoint grid on [0,1]."""
    if n < 1:
        raise ValueError(f"grid size must be positive, got {n}")
    points = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    return Grid(n=n, points=points, weight=1.0 / n)


def _check_same_grid(u: Signal, v: Signal) -> None:
    if u.grid is not v.grid and u.grid.n != v.grid.n:
        raise ValueError(f"grid mismatch: {u.grid.n} vs {v.grid.n}")


def inner(u: Signal, v: Signal) -> float:
    """Weighted inner product <u,v> = (1/n) sum u_i v_i."""
    _check_same_grid(u, v)
    return float(u.values @ v.values) * u.grid.weight


def norm(u: Signal, mode: str = "L2") -> float:
    """Discrete norm: L1 = (1/n) sum|u_i|, L2 = sqrt(<u,u>), Linf = max|u_i|."""
    if mode == "L1":
        return float(np.abs(u.values).sum()) * u.grid.weight
    if mode == "L2":
        return float(np.sqrt((u.values @ u.values) * u.grid.weight))
    if mode == "Linf":
        return float(np.abs(u.values).max()) if u.grid.n else 0.0
    raise ValueError(f"unknown norm mode {mode!r}, expected L1, L2 or Linf")


def bregman_error(u: Signal, u_dag: Signal) -> float:
    """Bregman distance of the quadratic penalty: (1/2) ||u - u_dag||_L2^2."""
    _check_same_grid(u, u_dag)
    d = u.values - u_dag.values
    return 0.5 * float(d @ d) * u.grid.weight
