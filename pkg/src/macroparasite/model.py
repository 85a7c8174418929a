"""Host-macroparasite model with clumped infections and parasite-induced host mortality.

A host acquires clumps of parasites at rate ``phi``; each parasite dies at
rate ``mu_M`` and each parasite carried raises the host's death rate by
``alpha``. Conditional on host survival the load settles to an equilibrium
law with PGF

    G(z) = exp( phi/(alpha + mu_M) * int_z^1 (G_C(lam) - G_C(u)) / (u - lam) du ),

``lam = mu_M / (alpha + mu_M)``. This module evaluates that PGF (and its
finite-age counterpart), the closed-form aggregation indices and the
pmf-based report.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import orders
from ._quad import gauss_legendre, segment_integral
from .clump import ClumpDistribution, _check_real_z
from .errors import ConsistencyError, InvalidParameters
from .inversion import PgfEvaluator, choose_k_max, invert
from .pmf import Pmf

__all__ = [
    "ModelParams",
    "AggregationReport",
    "equilibrium_pgf",
    "equilibrium_evaluator",
    "transient_pgf",
    "moments",
    "numeric_moments",
    "vmr",
    "cv",
    "prevalence_complement",
    "equilibrium_pmf",
    "report",
    "report_from_pmf",
    "phi_mixture_pmf",
    "phi_mixture_report",
]

# below this distance from lam the divided difference is computed as an
# average of G_C' to avoid cancellation
_NEAR_LAMBDA = 0.01
_QUAD_TOL = 1e-13


@dataclass(frozen=True)
class ModelParams:
    phi: float
    alpha: float
    mu_M: float
    clump: ClumpDistribution

    def __post_init__(self):
        if not self.phi > 0:
            raise InvalidParameters("phi must be positive")
        if self.alpha < 0 or self.mu_M < 0:
            raise InvalidParameters("alpha and mu_M must be non-negative")
        if not self.alpha + self.mu_M > 0:
            raise InvalidParameters("alpha + mu_M must be positive")
        if not isinstance(self.clump, ClumpDistribution):
            raise InvalidParameters("clump must be a ClumpDistribution")

    @property
    def lam(self) -> float:
        if self.alpha == 0:
            return 1.0
        return self.mu_M / (self.alpha + self.mu_M)

    @property
    def total_rate(self) -> float:
        return self.alpha + self.mu_M

    @property
    def poisson_rate(self) -> float:
        """Event rate of the compound-Poisson representation (also the mean load)."""
        D, _ = self.clump.tail_sums(self.lam)
        return self.phi * D / self.total_rate

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"phi": self.phi, "alpha": self.alpha, "mu_M": self.mu_M, "clump": self.clump.to_spec()}


def _divided_difference(clump: ClumpDistribution, lam: float, u: np.ndarray) -> np.ndarray:
    """(G_C(u) - G_C(lam)) / (u - lam), extended by G_C'(lam) at u = lam."""
    d = u - lam
    near = np.abs(d) < _NEAR_LAMBDA
    out = np.empty(u.shape, dtype=np.result_type(u, float))
    far = ~near
    if far.any():
        out[far] = (clump._pgf(u[far]) - clump._pgf(np.asarray(lam))) / d[far]
    if near.any():
        s, w = gauss_legendre(24)
        pts = lam + d[near][:, None] * s
        out[near] = clump._deriv(pts, 1) @ w
    return out


def equilibrium_log_pgf(params: ModelParams, z, tol: float = _QUAD_TOL):
    lam = params.lam
    clump = params.clump
    integral = segment_integral(lambda u, rows: -_divided_difference(clump, lam, u), z, 1.0, tol)
    return params.phi / params.total_rate * integral


def equilibrium_pgf(params: ModelParams, z, tol: float = _QUAD_TOL):
    """Equilibrium PGF of the load of a surviving host.

    ``z`` may be real in [0, 1] or complex with ``|z| <= 1``; the integral is
    taken along the straight segment from z to 1, where the integrand is
    analytic.
    """
    _check_real_z(z)
    scalar = np.ndim(z) == 0
    out = np.exp(equilibrium_log_pgf(params, z, tol))
    return out.item() if scalar else out


def equilibrium_evaluator(params: ModelParams) -> PgfEvaluator:
    return PgfEvaluator(lambda z: np.exp(equilibrium_log_pgf(params, z)), mean=moments(params)[0])


def transient_pgf(params: ModelParams, age: float, z, tol: float = _QUAD_TOL):
    """PGF of the load at age ``age`` of a host that survived to that age.

    Evaluated as ``exp(-phi * int_0^age [G_C(theta(t;1)) - G_C(theta(t;z))] dt)``
    with ``theta(t;z) = lam + (z - lam) exp(-(alpha + mu_M) t)``, after the
    substitution ``s = exp(-(alpha + mu_M) t)``. This equals 1 at age 0 and
    tends to ``equilibrium_pgf`` as the age grows.
    """
    if age < 0:
        raise InvalidParameters("age must be non-negative")
    _check_real_z(z)
    scalar = np.ndim(z) == 0
    z_arr = np.atleast_1d(np.asarray(z))
    lam = params.lam
    clump = params.clump
    s0 = np.exp(-params.total_rate * age)

    def integrand(s, rows):
        zz = z_arr[rows][:, None]
        # [G(lam + (1-lam)s) - G(lam + (z-lam)s)] / s as an average of G' over
        # the segment between the two arguments; no cancellation near s = 0
        a = lam + (zz - lam) * s
        b = lam + (1 - lam) * s
        x, w = gauss_legendre(16)
        pts = a[..., None] + (b - a)[..., None] * x
        return (1 - zz) * (clump._deriv(pts, 1) @ w)

    starts = np.full(z_arr.shape, s0, dtype=float)
    integral = segment_integral(integrand, starts, 1.0, tol)
    out = np.exp(-params.phi / params.total_rate * integral)
    return out.item() if scalar else out


def _tail_sums(params: ModelParams):
    # the alpha = 0 branch is selected exactly; tail_sums returns the
    # closed-form limits when lam == 1
    return params.clump.tail_sums(params.lam)


def vmr(params: ModelParams) -> float:
    """Variance-to-mean ratio, ``(E[C] + lam H) / D`` in terms of the clump
    tail sums (``1 + E[C(C-1)] / (2 E[C])`` when alpha = 0)."""
    clump = params.clump
    if params.alpha == 0:
        return 1 + clump.factorial_moment2 / (2 * clump.mean)
    D, H = _tail_sums(params)
    return (clump.mean + params.lam * H) / D


def cv(params: ModelParams) -> float:
    """Coefficient of variation, from
    ``CV**2 = ((alpha + mu_M) E[C] + mu_M H) / (phi D**2)``.

    This is the usual ``alpha E[C] / (phi (1 - G_C(lam))**2) - mu_M / (phi (1 - G_C(lam)))``
    with the two large terms combined, so small alpha causes no cancellation.
    """
    clump = params.clump
    D, H = _tail_sums(params)
    radicand = (params.total_rate * clump.mean + params.mu_M * H) / (params.phi * D**2)
    if not radicand > 0:
        raise ConsistencyError(f"non-positive CV radicand {radicand!r}")
    return float(np.sqrt(radicand))


def moments(params: ModelParams):
    """(mean, variance) of the equilibrium load, from mean = VMR / CV**2."""
    v = vmr(params)
    mean = v / cv(params) ** 2
    return mean, v * mean


def numeric_moments(params: ModelParams, h: float = 1e-3, points: int = 7):
    """(mean, variance) by backward differencing of the equilibrium PGF at z = 1.

    Only a cross-check of ``moments``: expect agreement around 1e-6, not
    machine precision.
    """
    hs = h * np.arange(points)
    g = equilibrium_pgf(params, 1 - hs)
    # fit G(1 - x) as a polynomial in x/h, then read off derivatives at x = 0
    coef = np.polynomial.polynomial.polyfit(hs / h, g, points - 1)
    d1 = -coef[1] / h
    d2 = 2 * coef[2] / h**2
    mean = d1
    return float(mean), float(d2 + mean - mean**2)


def prevalence_complement(params: ModelParams) -> float:
    """P(load = 0) at equilibrium."""
    return equilibrium_pgf(params, 0.0)


def equilibrium_pmf(params: ModelParams, mass_tol: float = 1e-12, target_error: float = 1e-12) -> Pmf:
    evaluator = equilibrium_evaluator(params)
    k_max = choose_k_max(evaluator, mass_tol, target_error=target_error)
    return invert(evaluator, k_max, target_error)


@dataclass(frozen=True, eq=False)
class AggregationReport:
    mean: float
    variance: float
    vmr: float
    cv: float
    prevalence_complement: float
    gini: float
    pietra: float
    lorenz: orders.LorenzCurve
    pmf: Pmf
    pmf_mean: float = field(default=float("nan"))
    pmf_cv: float = field(default=float("nan"))

    def to_dict(self, include_pmf: bool = False) -> dict:
        out = {
            "mean": self.mean,
            "variance": self.variance,
            "vmr": self.vmr,
            "cv": self.cv,
            "prevalence_complement": self.prevalence_complement,
            "one_minus_prevalence": self.prevalence_complement,
            "gini": self.gini,
            "pietra": self.pietra,
            "pmf_mean": self.pmf_mean,
            "pmf_cv": self.pmf_cv,
            "pmf_k_max": self.pmf.k_max,
            "pmf_tail_bound": self.pmf.tail_bound,
            "lorenz": [[float(u), float(l)] for u, l in self.lorenz.knots],
        }
        if include_pmf:
            out["pmf"] = self.pmf.mass.tolist()
        return out


def report_from_pmf(pmf: Pmf, mean: float, variance: float, p0: float) -> AggregationReport:
    return AggregationReport(
        mean=mean,
        variance=variance,
        vmr=variance / mean,
        cv=float(np.sqrt(variance) / mean),
        prevalence_complement=p0,
        gini=orders.gini(pmf),
        pietra=orders.pietra(pmf),
        lorenz=orders.lorenz_curve(pmf),
        pmf=pmf,
        pmf_mean=pmf.mean,
        pmf_cv=pmf.cv,
    )


def _gate(name: str, analytic: float, numeric: float, rtol: float):
    if not abs(numeric - analytic) <= rtol * abs(analytic):
        raise ConsistencyError(f"{name}: analytic {analytic!r} vs pmf-based {numeric!r} (rtol {rtol})")


def report(params: ModelParams, mass_tol: float = 1e-12, target_error: float = 1e-12,
           rtol: float = 1e-6) -> AggregationReport:
    """All aggregation indices for one parameter set.

    Mean, variance, VMR, CV and P(load = 0) come from closed forms; Gini,
    Pietra and the Lorenz curve from the inverted pmf. Raises
    ``ConsistencyError`` if the pmf mean or CV strays from the analytic value
    by more than ``rtol``.
    """
    mean, var = moments(params)
    pmf = equilibrium_pmf(params, mass_tol, target_error)
    rep = AggregationReport(
        mean=mean,
        variance=var,
        vmr=vmr(params),
        cv=cv(params),
        prevalence_complement=prevalence_complement(params),
        gini=orders.gini(pmf),
        pietra=orders.pietra(pmf),
        lorenz=orders.lorenz_curve(pmf),
        pmf=pmf,
        pmf_mean=pmf.mean,
        pmf_cv=pmf.cv,
    )
    _gate("mean", mean, rep.pmf_mean, rtol)
    _gate("cv", rep.cv, rep.pmf_cv, rtol)
    _gate("P(M=0)", rep.prevalence_complement, float(pmf.mass[0]), rtol)
    return rep


def phi_mixture_pmf(params: ModelParams, phis: Sequence[float], weights: Sequence[float],
                    mass_tol: float = 1e-12) -> Pmf:
    """Population load law when each host draws its own contact rate from a
    finite distribution."""
    if abs(sum(weights) - 1) > 1e-12 or any(w < 0 for w in weights):
        raise InvalidParameters("phi mixture weights must be non-negative and sum to 1")
    pmfs = [equilibrium_pmf(params.with_(phi=float(p)), mass_tol) for p in phis]
    return Pmf.mixture(pmfs, weights)


def phi_mixture_report(params: ModelParams, phis: Sequence[float], weights: Sequence[float],
                       mass_tol: float = 1e-12, rtol: float = 1e-6) -> AggregationReport:
    pmf = phi_mixture_pmf(params, phis, weights, mass_tol)
    per_host = [moments(params.with_(phi=float(p))) for p in phis]
    mean = sum(w * m for w, (m, _) in zip(weights, per_host))
    second = sum(w * (v + m * m) for w, (m, v) in zip(weights, per_host))
    p0 = sum(w * prevalence_complement(params.with_(phi=float(p))) for w, p in zip(weights, phis))
    rep = report_from_pmf(pmf, mean, second - mean**2, p0)
    _gate("mixture mean", mean, rep.pmf_mean, rtol)
    return rep
