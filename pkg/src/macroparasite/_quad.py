"""Vectorised Gauss-Legendre quadrature along straight segments.

The integrands met here are analytic on a neighbourhood of the path, so
Gauss-Legendre converges geometrically; the rule order is doubled until
successive estimates agree, which gives the error estimate.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureError

N_MIN = 16
N_MAX = 4096


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def segment_integral(f, start, end=1.0, tol: float = 1e-13):
    """Integrate ``f`` from each ``start[i]`` to ``end`` along a straight line.

    ``f(u, rows)`` receives nodes ``u`` of shape (len(rows), n) and the indices
    of the start points they belong to, and must return values of that shape.
    Convergence is declared per start point when two successive orders agree
    to ``tol * max(1, |I|)``.
    """
    start = np.atleast_1d(np.asarray(start))
    result = None
    length = end - start
    active = np.nonzero(length != 0)[0]
    prev = None
    n = N_MIN
    err = np.zeros(0)
    while active.size:
        if n > N_MAX:
            raise QuadratureError("segment quadrature did not converge", float(np.max(err)))
        s, w = gauss_legendre(n)
        u = start[active, None] + length[active, None] * s
        est = (f(u, active) @ w) * length[active]
        if result is None:
            # complex integrands may start from real points, so size the result here
            result = np.zeros(start.shape, dtype=np.result_type(start, end, est, float))
        if prev is not None:
            err = np.abs(est - prev)
            done = err <= tol * np.maximum(1.0, np.abs(est))
            result[active[done]] = est[done]
            active, est, err = active[~done], est[~done], err[~done]
        prev = est
        n *= 2
    if result is None:
        result = np.zeros(start.shape, dtype=np.result_type(start, end, float))
    return result
