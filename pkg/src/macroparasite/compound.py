"""Compound-Poisson representation of the equilibrium load.

The equilibrium load is a Poisson number of i.i.d. summands, each drawn from
the mixture ``sum_j omega_j(lam) F_j``. The weights

    omega_j(lam) = beta_j (1 - lam) lam**j / (1 - G_C(lam))    (lam < 1)
    omega_j(1)   = beta_j / E[C]

(both are ``beta_j lam**j / D(lam)`` with ``D(lam) = sum_j beta_j lam**j``)

use the clump tails ``beta_j = P(C > j)``, and every component ``F_j`` has
mean one with pmf

    F_j(i + 1) = pi_C(i + j + 1) / (beta_j (i + 1)),   F_j(0) = 1 - sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .clump import ClumpDistribution, _check_real_z
from .errors import InvalidParameters, NoComponentError
from .pmf import Pmf

__all__ = [
    "ComponentSystem",
    "weight",
    "component_pmf",
    "component_pgf",
    "decompose",
    "build_system",
    "reconstruct_pgf",
]

J_CAP = 1_000_000
COMPONENT_TOL = 1e-13


def weight(clump: ClumpDistribution, lam: float, j):
    """omega_j(lam); vectorised over ``j``."""
    if not 0 <= lam <= 1:
        raise InvalidParameters("lambda must lie in [0, 1]")
    j_arr = np.asarray(j)
    beta = np.asarray(clump.tail_beta(j_arr), dtype=float)
    D, _ = clump.tail_sums(lam)
    out = beta * float(lam) ** j_arr.astype(float) / D
    return float(out) if np.ndim(out) == 0 else out


def _component_from_table(table: np.ndarray, j: int, beta_j: float, beta_end: float) -> Pmf:
    upper = table[j + 1:]
    mass = np.empty(upper.size + 1)
    mass[1:] = upper / (beta_j * np.arange(1, upper.size + 1))
    p0 = 1.0 - mass[1:].sum()
    if p0 < -1e-12:
        raise ArithmeticError(f"component {j} has negative mass {p0!r} at zero")
    mass[0] = max(p0, 0.0)
    return Pmf(mass, tail_bound=beta_end / beta_j)


def _table_for(clump: ClumpDistribution, beta_min: float, tol: float):
    if clump.support_max is not None:
        bound = clump.support_max
    else:
        bound = clump.truncate(tol * beta_min)
    table = np.asarray(clump.pmf(np.arange(bound + 1)), dtype=float)
    return table, float(clump.tail_beta(bound))


def component_pmf(clump: ClumpDistribution, j: int, tol: float = COMPONENT_TOL) -> Pmf:
    """F_j from its power series; the truncated clump tail beyond the table is
    at most ``tol * beta_j`` and is reported as the pmf's ``tail_bound``."""
    beta_j = float(clump.tail_beta(j))
    if beta_j <= 0:
        raise NoComponentError(f"beta_{j} = 0: component F_{j} does not exist")
    table, beta_end = _table_for(clump, beta_j, tol)
    return _component_from_table(table, j, beta_j, beta_end)


def component_pgf(clump: ClumpDistribution, j: int, z, method: str = "series"):
    """G_j(z).

    ``method="series"`` evaluates the PGF of ``component_pmf``;
    ``method="integral"`` integrates
    ``1 - int_z^1 (G_C(u) - sum_{i<=j} pi_C(i) u^i) / (beta_j u^(j+1)) du``
    with adaptive quadrature. The integral form loses accuracy near u = 0 for
    large j and is kept as an independent check.
    """
    _check_real_z(z)
    if method == "series":
        out = component_pmf(clump, j).pgf(z)
        return out.item() if np.ndim(out) == 0 else out
    if method != "integral":
        raise InvalidParameters(f"unknown method {method!r}")
    beta_j = float(clump.tail_beta(j))
    if beta_j <= 0:
        raise NoComponentError(f"beta_{j} = 0: component F_{j} does not exist")
    head = np.asarray(clump.pmf(np.arange(j + 1)), dtype=float)

    def integrand(u):
        return (clump.pgf(u) - np.polyval(head[::-1], u)) / (beta_j * u ** (j + 1))

    def one(zz):
        val, _ = integrate.quad(integrand, zz, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
        return 1.0 - val

    if np.ndim(z) == 0:
        return one(float(z))
    return np.array([one(float(zz)) for zz in np.ravel(z)]).reshape(np.shape(z))


def decompose(clump: ClumpDistribution, lam: float, tol: float = 1e-10):
    """(weights, components) for j = 0..J with sum of weights >= 1 - tol."""
    if not 0 <= lam <= 1:
        raise InvalidParameters("lambda must lie in [0, 1]")
    weights = []
    start, block = 0, 64
    cumulative = 0.0
    J = None
    while J is None:
        if start > J_CAP:
            raise ArithmeticError(f"weights still carry {1 - cumulative:.3g} of mass at j = {J_CAP}")
        js = np.arange(start, start + block)
        w = np.asarray(weight(clump, lam, js), dtype=float)
        beta = np.asarray(clump.tail_beta(js), dtype=float)
        cum = cumulative + np.cumsum(w)
        stop = np.nonzero((cum >= 1 - tol) | (beta <= 0))[0]
        if stop.size:
            last = stop[0]
            # an exhausted finite support ends the sequence before beta hits 0
            if beta[last] <= 0:
                last -= 1
            weights.extend(w[: last + 1].tolist())
            J = start + last
        else:
            weights.extend(w.tolist())
            cumulative = float(cum[-1])
            start += block
            block *= 2
    weights = np.asarray(weights)
    beta_J = float(clump.tail_beta(J))
    table, beta_end = _table_for(clump, beta_J, COMPONENT_TOL)
    comps = tuple(
        _component_from_table(table, j, float(clump.tail_beta(j)), beta_end) for j in range(J + 1)
    )
    return weights, comps


@dataclass(frozen=True, eq=False)
class ComponentSystem:
    lam: float
    weights: np.ndarray
    components: tuple
    poisson_rate: float
    tol: float

    @property
    def J(self) -> int:
        return len(self.components) - 1

    def summand_pmf(self) -> Pmf:
        """Law of one summand, sum_j omega_j F_j."""
        return Pmf.mixture(self.components, self.weights)

    def pgf(self, z):
        return reconstruct_pgf(self, z)

    def compound_pmf(self, k_max: int) -> Pmf:
        """Equilibrium pmf on 0..k_max by the Panjer recursion for the compound
        Poisson sum (independent of the PGF inversion route)."""
        f = self.summand_pmf().padded(k_max + 1)[: k_max + 1]
        rate = self.poisson_rate
        p = np.zeros(k_max + 1)
        p[0] = np.exp(-rate * (self.weights.sum() - f[0]))
        i = np.arange(1, k_max + 1)
        weighted = i * f[1:]
        for k in range(1, k_max + 1):
            p[k] = rate / k * np.dot(weighted[:k], p[k - 1::-1])
        return Pmf(p, tail_bound=max(0.0, 1 - p.sum()))


def build_system(clump: ClumpDistribution, params, tol: float = 1e-10) -> ComponentSystem:
    """Weights and components for ``params`` (a ``ModelParams`` whose clump is
    ``clump``), truncated where the omitted weight drops below ``tol``."""
    lam = params.lam
    rate = params.phi * clump.tail_sums(lam)[0] / params.total_rate
    weights, comps = decompose(clump, lam, tol)
    return ComponentSystem(lam=lam, weights=weights, components=comps, poisson_rate=float(rate), tol=tol)


def reconstruct_pgf(system: ComponentSystem, z):
    """exp(rate * sum_j omega_j (G_j(z) - 1))."""
    z_arr = np.asarray(z)
    total = 0.0
    for w, comp in zip(system.weights, system.components):
        total = total + w * (comp.pgf(z_arr) - 1)
    out = np.exp(system.poisson_rate * total)
    return out.item() if np.ndim(out) == 0 else out
