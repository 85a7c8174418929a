"""Parameter sweeps behind the figures, the two-system comparison and the
validation battery."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from . import model, orders
from .clump import Degenerate, FiniteSupport, Geometric, GeometricMixture, NegativeBinomial, Poisson
from .errors import MacroparasiteError
from .model import ModelParams

__all__ = [
    "FIGURE_DEFAULTS",
    "FIGURE_COLUMNS",
    "GridPointError",
    "grid",
    "figure_rows",
    "compare",
    "battery",
]


class GridPointError(MacroparasiteError):
    """A numeric failure at one grid point; ``point`` names it."""

    def __init__(self, point: dict, cause: Exception):
        super().__init__(f"failure at grid point {point}: {cause}")
        self.point = point
        self.cause = cause


def grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arithmetic grid, rounded so that repeated runs give identical values."""
    n = int(round((stop - start) / step))
    return np.round(start + step * np.arange(n + 1), 12)


FIGURE_DEFAULTS = {
    1: {"phi": 5.0, "mu_M": 1.0, "clump_mean": 1.0, "series": [0.2, 0.4, 0.6, 0.8, 1.0],
        "grid": {"start": 0.05, "stop": 3.0, "step": 0.05}},
    2: {"phi": 5.0, "alpha": 1.0, "series": [4.0, 5.0, 6.0],
        "grid": {"start": 0.0, "stop": 5.0, "step": 0.05}},
    3: {"phi": 5.0, "alpha": 1.0, "mu_M": 1.0,
        "grid": {"start": 0.1, "stop": 10.0, "step": 0.1}},
}

FIGURE_COLUMNS = {
    1: ["k", "alpha", "cv", "one_minus_prevalence"],
    2: ["m_C", "mu_M", "cv", "one_minus_prevalence"],
    3: ["m_C", "cv", "cv2", "one_minus_prevalence", "gini", "pietra"],
}


def _fig1_point(args):
    phi, mu, mean, k, alpha = args
    p = ModelParams(phi, alpha, mu, NegativeBinomial(mean, k))
    return {"k": k, "alpha": alpha, "cv": model.cv(p), "one_minus_prevalence": model.prevalence_complement(p)}


def _fig2_point(args):
    phi, alpha, m_c, mu = args
    p = ModelParams(phi, alpha, mu, Poisson(m_c))
    return {"m_C": m_c, "mu_M": mu, "cv": model.cv(p), "one_minus_prevalence": model.prevalence_complement(p)}


def _fig3_point(args):
    phi, alpha, mu, m_c, mass_tol = args
    p = ModelParams(phi, alpha, mu, NegativeBinomial(m_c, 1.0))
    rep = model.report(p, mass_tol=mass_tol)
    return {"m_C": m_c, "cv": rep.cv, "cv2": rep.cv**2, "one_minus_prevalence": rep.prevalence_complement,
            "gini": rep.gini, "pietra": rep.pietra}


class _Guarded:
    """Runs one grid point and names it on failure; picklable for process pools."""

    def __init__(self, fn, names: tuple):
        self.fn, self.names = fn, names

    def __call__(self, args):
        try:
            return self.fn(args)
        except (MacroparasiteError, ArithmeticError, ValueError) as exc:
            raise GridPointError(dict(zip(self.names, args)), exc) from exc


def _map(fn, items: list, jobs: int) -> list:
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(item) for item in items]


def figure_rows(which: int, overrides: Optional[dict] = None, mass_tol: float = 1e-12, jobs: int = 1) -> list:
    """Rows of the data behind figure ``which`` (1, 2 or 3), in grid order.

    1: CV and P(load = 0) against alpha for NB(1, k) clumps.
    2: CV and P(load = 0) against mu_M for Poisson(m_C) clumps.
    3: CV, CV**2, P(load = 0), Gini and Pietra against m_C for NB(m_C, 1) clumps.
    """
    if which not in FIGURE_DEFAULTS:
        raise ValueError(f"figure must be one of {sorted(FIGURE_DEFAULTS)}")
    cfg = {**FIGURE_DEFAULTS[which], **(overrides or {})}
    xs = grid(**cfg["grid"]).tolist()
    if which == 1:
        items = [(cfg["phi"], cfg["mu_M"], cfg["clump_mean"], k, a) for k in cfg["series"] for a in xs]
        fn = _Guarded(_fig1_point, ("phi", "mu_M", "clump_mean", "k", "alpha"))
    elif which == 2:
        items = [(cfg["phi"], cfg["alpha"], m, mu) for m in cfg["series"] for mu in xs]
        fn = _Guarded(_fig2_point, ("phi", "alpha", "m_C", "mu_M"))
    else:
        items = [(cfg["phi"], cfg["alpha"], cfg["mu_M"], m, mass_tol) for m in xs]
        fn = _Guarded(_fig3_point, ("phi", "alpha", "mu_M", "m_C", "mass_tol"))
    return _map(fn, items, jobs)


def _indices(rep: model.AggregationReport) -> dict:
    return {"mean": rep.mean, "cv": rep.cv, "gini": rep.gini, "pietra": rep.pietra,
            "prevalence_complement": rep.prevalence_complement, "vmr": rep.vmr}


def compare(left: ModelParams, right: ModelParams, mass_tol: float = 1e-12) -> dict:
    """Lorenz-order (and, for equal means, convex-order) verdict between the
    equilibrium loads of two parameter sets."""
    rl, rr = model.report(left, mass_tol=mass_tol), model.report(right, mass_tol=mass_tol)
    out = {
        "left": {"params": left.to_dict(), "indices": _indices(rl)},
        "right": {"params": right.to_dict(), "indices": _indices(rr)},
        "lorenz": orders.lorenz_order_check(rl.pmf, rr.pmf).to_dict(),
    }
    if abs(rl.pmf.mean - rr.pmf.mean) < 1e-9:
        out["convex"] = orders.convex_order_check(rl.pmf, rr.pmf).to_dict()
    else:
        out["convex"] = {"relation": None, "certificate": {"skipped": "means differ"}}
    out["relation"] = out["lorenz"]["relation"]
    return out


def battery() -> list:
    """Parameter sets spanning lam in {0, 0.3, 0.5, 0.9, 1} and every clump family."""
    clumps = [
        Degenerate(1),
        Geometric(0.5),
        Poisson(4.0),
        NegativeBinomial(1.0, 0.4),
        FiniteSupport((0.3, 0.4, 0.3)),
        GeometricMixture((0.5, 0.5), (0.3, 0.7)),
    ]
    rates = [(1.0, 0.0), (0.7, 0.3), (1.0, 1.0), (0.1, 0.9), (0.0, 1.0)]
    return [ModelParams(5.0, a, mu, c) for c in clumps for a, mu in rates]
