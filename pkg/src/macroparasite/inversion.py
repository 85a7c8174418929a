"""Numerical inversion of probability generating functions.

Uses the damped Fourier-series (trapezoidal Cauchy integral) method of
Abate and Whitt: with ``N = 2n`` points on the circle of radius ``r``,

    p(k) ~= r**-k / N * sum_m G(r w**m) w**(-m k),   w = exp(2 pi i / N),

which picks up an aliasing error ``sum_j p(k + jN) r**(jN) <= r**N / (1 - r**N)``.
Since PGF coefficients are real, G(conj z) = conj G(z) and only the upper
half circle is evaluated (an inverse real FFT does the sum).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InversionError, InvalidParameters
from .pmf import Pmf

__all__ = ["PgfEvaluator", "invert", "choose_k_max", "pgf_of", "Pmf"]

log = logging.getLogger(__name__)

DEFAULT_N = 64
MAX_CLAMPED = 1e-10
K_CAP = 1_000_000
HEAVY_TAIL = 1e-6


@dataclass(frozen=True)
class PgfEvaluator:
    """A PGF as a vectorised callable on the closed unit disk, plus metadata."""

    func: Callable[[np.ndarray], np.ndarray]
    support_bound: Optional[int] = None
    mean: Optional[float] = None

    def __call__(self, z):
        return self.func(np.asarray(z))


def pgf_of(pmf: Pmf) -> PgfEvaluator:
    return PgfEvaluator(pmf.pgf, support_bound=pmf.k_max, mean=pmf.mean)


def _grid(k_max: int, target_error: float, support_bound: Optional[int], n: Optional[int]):
    if support_bound is not None:
        # no aliasing once the grid exceeds the support: evaluate on |z| = 1
        n = n or max(DEFAULT_N, support_bound + 1, k_max + 1)
        return n, 1.0
    # n >= 2 k_max keeps the round-off amplification r**-k below
    # (0.1 target)**(-1/4)
    n = n or max(DEFAULT_N, 2 * k_max)
    r = (0.1 * target_error) ** (1.0 / (2 * n))
    return n, r


def invert(G: PgfEvaluator, k_max: int, target_error: float = 1e-12, n: Optional[int] = None,
           warn: bool = True) -> Pmf:
    """Recover p(0..k_max) from the PGF ``G``.

    Negative round-off is clamped to zero and reported in ``clamped_mass``;
    more than 1e-10 of it raises ``InversionError``. A warning is attached
    (not raised) when the recovered mass falls short of one by more than 1e-6.
    """
    if k_max < 0:
        raise InvalidParameters("k_max must be non-negative")
    if target_error < 1e-12 - 1e-24:
        raise InvalidParameters("target_error below 1e-12 is not attainable in double precision")
    n, r = _grid(k_max, target_error, G.support_bound, n)
    N = 2 * n
    theta = 2 * np.pi * np.arange(n + 1) / N
    z = r * np.exp(1j * theta)
    z[0] = r
    z[n] = -r
    values = np.asarray(G(z), dtype=complex)
    coeffs = np.fft.irfft(np.conj(values), N)[: k_max + 1]
    raw = coeffs / r ** np.arange(k_max + 1)

    negative = raw < 0
    clamped = float(-raw[negative].sum())
    if clamped > MAX_CLAMPED:
        raise InversionError(f"inversion produced {clamped:.3g} of negative mass")
    mass = np.where(negative, 0.0, raw)
    total = float(mass.sum())
    tail = max(0.0, 1.0 - total)
    warning = None
    if tail > HEAVY_TAIL:
        warning = f"k_max={k_max} leaves {tail:.3g} of mass in the tail"
        if warn:
            log.warning(warning)
    return Pmf(mass, tail_bound=tail, clamped_mass=clamped, warning=warning)


def choose_k_max(G: PgfEvaluator, mass_tol: float, target_error: float = 1e-12, start: int = 16) -> int:
    """Smallest K whose recovered cumulative mass reaches ``1 - mass_tol``.

    K is searched geometrically (doubling) and then pinned down within the
    last inversion.
    """
    if not 0 < mass_tol <= 1e-3:
        raise InvalidParameters("mass_tol must lie in (0, 1e-3]")
    k = start
    if G.support_bound is not None:
        k = max(G.support_bound, 1)
    while k <= K_CAP:
        pmf = invert(G, k, target_error, warn=False)
        cum = np.cumsum(pmf.mass)
        hit = np.nonzero(cum >= 1 - mass_tol)[0]
        if hit.size:
            return int(hit[0])
        k *= 2
    raise InversionError(f"cumulative mass does not reach 1 - {mass_tol} below K = {K_CAP}")
