"""Dense discretization of the integral operator with Green's-function kernel.

The kernel k(x,y) = min{x(1-y), y(1-x)} is the Green's function of -d^2/dx^2
with Dirichlet boundary conditions on [0,1], so (Tf)'' = -f and T has
eigenpairs sin(k pi x) with eigenvalues 1/(k pi)^2.  The composite midpoint
rule gives the matrix A[j,i] = (1/n) k(x_j, x_i), symmetric positive definite.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .mesh import Grid, Signal, make_grid

__all__ = [
    "KernelOperator",
    "TestProblem",
    "assemble",
    "apply",
    "apply_adjoint",
    "make_test_problem",
]


def _greens_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.minimum(x * (1.0 - y), y * (1.0 - x))


@dataclass(eq=False)
class KernelOperator:
    """Midpoint discretization of the integral operator; immutable after assembly."""

    grid: Grid
    matrix: np.ndarray = field(repr=False)
    kernel_id: str = "greens_dirichlet"

    @cached_property
    def gram(self) -> np.ndarray:
        """A @ A, the matrix behind the dual objective (cached)."""
        return self.matrix @ self.matrix

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigendecomposition of the symmetric matrix (cached)."""
        d, V = np.linalg.eigh(self.matrix)
        return d, V

    @cached_property
    def norm_bound(self) -> float:
        """Largest eigenvalue of A by power iteration."""
        v = np.ones(self.grid.n)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(200):
            w = self.matrix @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            v = w / nw
            if abs(nw - lam) <= 1e-14 * max(1.0, nw):
                return float(nw)
            lam = nw
        return float(lam)


@dataclass(eq=False)
class TestProblem:
    """Exact solution with analytically sampled exact data."""

    name: str
    u_dag: Signal
    g_dag_analytic: Signal
    description: str


def assemble(grid: Grid) -> KernelOperator:
    """Assemble A[j,i] = (1/n) min{x_j(1-x_i), x_i(1-x_j)}."""
    x = grid.points
    K = _greens_kernel(x[:, None], x[None, :])
    return KernelOperator(grid=grid, matrix=K * grid.weight)


def apply(T: KernelOperator, f: Signal) -> Signal:
    """Forward map: midpoint-rule approximation of the integral operator."""
    if f.grid.n != T.grid.n:
        raise ValueError(f"grid mismatch: {f.grid.n} vs {T.grid.n}")
    return Signal(grid=T.grid, values=T.matrix @ f.values)


def apply_adjoint(T: KernelOperator, p: Signal) -> Signal:
    """Adjoint w.r.t. the weighted inner product; equals apply for this kernel."""
    if p.grid.n != T.grid.n:
        raise ValueError(f"grid mismatch: {p.grid.n} vs {T.grid.n}")
    # (1/n)-weighted adjoint of A is (1/w) A^T w = A^T; A is symmetric.
    return Signal(grid=T.grid, values=T.matrix.T @ p.values)


_SINE_RE = re.compile(r"^sine_([1-9][0-9]*)$")


def make_test_problem(name: str, grid: Grid) -> TestProblem:
    """Build a named test problem with closed-form exact data.

    Names: ``constant_one`` (u=1, g=x(1-x)/2), ``sine_k`` for k=1,2,...
    (u=sin(k pi x), g=sin(k pi x)/(k pi)^2), and ``benchmark_omega_one``
    (u=x(1-x)/2, g=(x-2x^3+x^4)/24, the image of the constant source under
    two applications of the operator).
    """
    x = grid.points
    if name == "constant_one":
        u = np.ones(grid.n)
        g = x * (1.0 - x) / 2.0
        desc = "u=1; g solves -g''=1 with Dirichlet boundary"
    elif m := _SINE_RE.match(name):
        k = int(m.group(1))
        u = np.sin(k * np.pi * x)
        g = np.sin(k * np.pi * x) / (k * np.pi) ** 2
        desc = f"operator eigenfunction sin({k} pi x)"
    elif name == "benchmark_omega_one":
        u = x * (1.0 - x) / 2.0
        g = (x - 2.0 * x**3 + x**4) / 24.0
        desc = "u = T(1): bounded source element, exact-penalization benchmark"
    else:
        raise ValueError(f"unknown test problem {name!r}")
    return TestProblem(
        name=name,
        u_dag=Signal(grid=grid, values=u),
        g_dag_analytic=Signal(grid=grid, values=g),
        description=desc,
    )
