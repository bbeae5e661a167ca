"""Compute backends for the box-constrained dual ascent loop.

Two interchangeable implementations of the same iteration:

* ``numba`` (default): a fused-loop kernel compiled with ``numba.njit``;
  one matrix-vector product per iteration, no temporaries.
* ``numpy``: a vectorized twin used when numba is unavailable or when the
  environment variable ``IMPTIK_BACKEND=numpy`` is set.

Both run accelerated projected gradient ascent (momentum with adaptive
restart) on

    maximize_{|p_i| <= 1/alpha}  (p.g - p.Bp/2) / n,      B = A @ A,

the dual of L1-fidelity Tikhonov regularization.  The momentum point is a
linear combination of past iterates, so ``B @ y`` is formed from cached
products of past iterates and only the new candidate needs a fresh matvec.
The duality gap is checked every iteration (O(n), free next to the matvec).

Contract for both backends::

    l1_fista(B, g, alpha, S, gap_tol, max_iter, p0)
        -> (p, iterations, gap, converged, primal, dual)

``S`` is an upper bound on the largest eigenvalue of ``B`` (step = 1/S),
``p0`` must already lie in the box, and ``gap``/``primal``/``dual`` carry
the 1/n measure weight.  Convergence means
``gap <= gap_tol * max(1, |primal|)``.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

__all__ = ["BACKEND", "l1_fista", "get_impl"]


def _numpy_l1_fista(B, g, alpha, S, gap_tol, max_iter, p0):
    n = g.shape[0]
    b = 1.0 / alpha
    invS = 1.0 / S
    p = p0.copy()
    Bp = B @ p
    pBp = p @ Bp
    D = (p @ g - 0.5 * pBp) / n
    P = (np.abs(g - Bp).sum() / alpha + 0.5 * pBp) / n
    gap = P - D
    scale = max(1.0, abs(P))
    if gap <= gap_tol * scale:
        return p, 0, gap, True, P, D
    p_prev = p.copy()
    Bp_prev = Bp.copy()
    t_prev = 1.0
    t = 1.0
    it = 0
    while it < max_iter:
        it += 1
        beta = (t_prev - 1.0) / t
        y = p + beta * (p - p_prev)
        By = Bp + beta * (Bp - Bp_prev)
        cand = np.clip(y + (g - By) * invS, -b, b)
        Bc = B @ cand
        cBc = cand @ Bc
        D_c = (cand @ g - 0.5 * cBc) / n
        if D_c < D:
            # momentum overshot: plain projected step from the last iterate
            cand = np.clip(p + (g - Bp) * invS, -b, b)
            Bc = B @ cand
            cBc = cand @ Bc
            D_c = (cand @ g - 0.5 * cBc) / n
            t_prev = 1.0
            t = 1.0
        p_prev, p = p, cand
        Bp_prev, Bp = Bp, Bc
        D = D_c
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        t_prev = t
        t = t_next
        P = (np.abs(g - Bp).sum() / alpha + 0.5 * cBc) / n
        gap = P - D
        scale = max(1.0, abs(P))
        if gap <= gap_tol * scale:
            return p, it, gap, True, P, D
    return p, it, gap, False, P, D


def _build_numba_impl():
    from numba import njit

    @njit(cache=True)
    def _numba_l1_fista(B, g, alpha, S, gap_tol, max_iter, p0):
        n = g.shape[0]
        b = 1.0 / alpha
        invS = 1.0 / S
        p = p0.copy()
        Bp = np.dot(B, p)
        pg = 0.0
        pBp = 0.0
        for i in range(n):
            pg += p[i] * g[i]
            pBp += p[i] * Bp[i]
        D = (pg - 0.5 * pBp) / n
        s_abs = 0.0
        for i in range(n):
            s_abs += abs(g[i] - Bp[i])
        P = (s_abs / alpha + 0.5 * pBp) / n
        gap = P - D
        scale = max(1.0, abs(P))
        if gap <= gap_tol * scale:
            return p, 0, gap, True, P, D
        p_prev = p.copy()
        Bp_prev = Bp.copy()
        cand = np.empty(n)
        Bc = np.empty(n)
        t_prev = 1.0
        t = 1.0
        it = 0
        while it < max_iter:
            it += 1
            beta = (t_prev - 1.0) / t
            for i in range(n):
                yi = p[i] + beta * (p[i] - p_prev[i])
                Byi = Bp[i] + beta * (Bp[i] - Bp_prev[i])
                ci = yi + (g[i] - Byi) * invS
                if ci > b:
                    ci = b
                elif ci < -b:
                    ci = -b
                cand[i] = ci
            np.dot(B, cand, Bc)
            cg = 0.0
            cBc = 0.0
            for i in range(n):
                cg += cand[i] * g[i]
                cBc += cand[i] * Bc[i]
            D_c = (cg - 0.5 * cBc) / n
            if D_c < D:
                # momentum overshot: plain projected step from the last iterate
                for i in range(n):
                    ci = p[i] + (g[i] - Bp[i]) * invS
                    if ci > b:
                        ci = b
                    elif ci < -b:
                        ci = -b
                    cand[i] = ci
                np.dot(B, cand, Bc)
                cg = 0.0
                cBc = 0.0
                for i in range(n):
                    cg += cand[i] * g[i]
                    cBc += cand[i] * Bc[i]
                D_c = (cg - 0.5 * cBc) / n
                t_prev = 1.0
                t = 1.0
            tmp = p_prev
            p_prev = p
            p = tmp
            tmp = Bp_prev
            Bp_prev = Bp
            Bp = tmp
            for i in range(n):
                p[i] = cand[i]
                Bp[i] = Bc[i]
            D = D_c
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            t_prev = t
            t = t_next
            s_abs = 0.0
            for i in range(n):
                s_abs += abs(g[i] - Bp[i])
            P = (s_abs / alpha + 0.5 * cBc) / n
            gap = P - D
            scale = max(1.0, abs(P))
            if gap <= gap_tol * scale:
                return p, it, gap, True, P, D
        return p, it, gap, False, P, D

    return _numba_l1_fista


_IMPLS = {"numpy": _numpy_l1_fista}

_env = os.environ.get("IMPTIK_BACKEND", "numba").strip().lower() or "numba"
if _env not in ("numba", "numpy"):
    warnings.warn(
        f"unknown IMPTIK_BACKEND value {_env!r}; expected 'numba' or 'numpy', "
        "using 'numba'"
    )
    _env = "numba"
if _env == "numba":
    try:
        _IMPLS["numba"] = _build_numba_impl()
    except ImportError:
        warnings.warn("numba is not importable; falling back to the numpy backend")
        _env = "numpy"

BACKEND = _env
l1_fista = _IMPLS[BACKEND]


def get_impl(name: str):
    """Fetch a backend by name ('numba' or 'numpy'), building it if needed."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name not in _IMPLS:
        _IMPLS[name] = _build_numba_impl()  # raises ImportError if unavailable
    return _IMPLS[name]
