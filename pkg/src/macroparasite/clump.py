"""Clump-size distributions: the number of parasites acquired per infectious contact.

Every distribution lives on the non-negative integers and exposes its pmf,
its probability generating function (valid for complex ``|z| <= 1``, which the
PGF inversion relies on), the first two PGF derivatives and the tail sums
``beta_j = P(C > j)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from ._quad import segment_integral
from .errors import InvalidParameters

__all__ = [
    "ClumpDistribution",
    "Degenerate",
    "Geometric",
    "NegativeBinomial",
    "Poisson",
    "FiniteSupport",
    "GeometricMixture",
    "LogShape",
    "LogShapeKind",
    "classify_log_shape",
    "clump_from_spec",
]

_HARD_SUPPORT_CAP = 10_000_000
# for 1 - lam above this the closed-form quotients in tail_sums lose < 1e-13
_DIRECT_TAIL_SUMS = 0.25


def _check_real_z(z):
    z_arr = np.asarray(z)
    if np.iscomplexobj(z_arr):
        if np.any(np.abs(z_arr) > 1 + 1e-12):
            raise InvalidParameters("complex argument must satisfy |z| <= 1")
    elif np.any((z_arr < 0) | (z_arr > 1)):
        raise InvalidParameters("z must lie in [0, 1]")


class ClumpDistribution:
    """Base class for clump-size laws.

    Subclasses implement ``_pmf``, ``_pgf``, ``_deriv``, ``tail_beta`` and
    ``mean``. The public ``pgf``/``pgf_deriv`` validate their argument; the
    underscored versions skip validation and are what the numerical code
    calls on complex contours.
    """

    def pmf(self, k):
        k_arr = np.asarray(k)
        if np.any(k_arr < 0):
            raise InvalidParameters("k must be non-negative")
        out = self._pmf(k_arr.astype(np.int64))
        return float(out) if np.ndim(out) == 0 else out

    def pgf(self, z):
        _check_real_z(z)
        out = self._pgf(np.asarray(z))
        return out.item() if np.ndim(out) == 0 else out

    def pgf_deriv(self, z, order: int = 1):
        if order not in (1, 2):
            raise InvalidParameters(f"unsupported derivative order {order!r}")
        _check_real_z(z)
        out = self._deriv(np.asarray(z), order)
        return out.item() if np.ndim(out) == 0 else out

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def factorial_moment2(self) -> float:
        """E[C(C-1)] = G''(1)."""
        return float(self._deriv(np.asarray(1.0), 2))

    def tail_beta(self, j):
        raise NotImplementedError

    @property
    def support_max(self) -> Optional[int]:
        """Largest support point, or None for infinite support."""
        return None

    def truncate(self, tol: float) -> int:
        """Smallest bound B with P(C > B) < tol."""
        if self.support_max is not None:
            hi = self.support_max
            betas = np.asarray(self.tail_beta(np.arange(hi + 1)))
            return int(np.argmax(betas < tol))
        hi = 16
        while hi <= _HARD_SUPPORT_CAP:
            betas = np.asarray(self.tail_beta(np.arange(hi + 1)))
            below = np.nonzero(betas < tol)[0]
            if below.size:
                return int(below[0])
            hi *= 2
        raise InvalidParameters(f"tail mass does not fall below {tol} before {_HARD_SUPPORT_CAP}")

    def tail_sums(self, lam: float):
        """``(D, H)`` with ``D = sum_j beta_j lam**j = (1 - G(lam)) / (1 - lam)``
        and ``H = sum_j beta_j (1 + lam + ... + lam**(j-1)) = (E[C] - D) / (1 - lam)``.

        Near lam = 1 both quotients cancel badly, so they are evaluated as
        ``D = int_0^1 G'(lam + e s) ds`` and ``H = int_0^1 s G''(lam + e s) ds``
        with ``e = 1 - lam``. At lam = 1 they are E[C] and E[C(C-1)] / 2.
        """
        if not 0 <= lam <= 1:
            raise InvalidParameters("lambda must lie in [0, 1]")
        if lam == 1:
            return self.mean, self.factorial_moment2 / 2
        eps = 1.0 - lam
        if eps >= _DIRECT_TAIL_SUMS:
            D = (1.0 - float(self._pgf(np.asarray(lam)))) / eps
            return D, (self.mean - D) / eps
        D = segment_integral(lambda s, rows: self._deriv(lam + eps * s, 1), 0.0, 1.0, 1e-14)[0]
        H = segment_integral(lambda s, rows: s * self._deriv(lam + eps * s, 2), 0.0, 1.0, 1e-14)[0]
        return float(D), float(H)

    def pmf_table(self, tol: float = 1e-16) -> np.ndarray:
        """pmf on 0..B where B = truncate(tol)."""
        bound = self.truncate(tol)
        return np.asarray(self._pmf(np.arange(bound + 1)), dtype=float)

    def to_spec(self) -> dict:
        raise NotImplementedError

    def _validate(self):
        if self.mean <= 0 or not np.isfinite(self.mean):
            raise InvalidParameters("clump distribution must have finite positive mean")
        if float(self.tail_beta(0)) <= 0:
            raise InvalidParameters("P(C >= 1) must be positive")


@dataclass(frozen=True)
class Degenerate(ClumpDistribution):
    c: int = 1

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 1:
            raise InvalidParameters("Degenerate clump size must be a positive integer")
        object.__setattr__(self, "c", int(self.c))

    def _pmf(self, k):
        return np.where(k == self.c, 1.0, 0.0)

    def _pgf(self, z):
        return z ** self.c

    def _deriv(self, z, order):
        c = self.c
        if order == 1:
            return c * z ** (c - 1)
        return c * (c - 1) * z ** (c - 2) if c >= 2 else np.zeros_like(z, dtype=float) * z

    @property
    def mean(self):
        return float(self.c)

    def tail_beta(self, j):
        out = np.where(np.asarray(j) < self.c, 1.0, 0.0)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def support_max(self):
        return self.c

    def to_spec(self):
        return {"type": "degenerate", "c": self.c}


@dataclass(frozen=True)
class Geometric(ClumpDistribution):
    """pi(k) = p (1 - p)^k on k = 0, 1, 2, ..."""

    p: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise InvalidParameters("Geometric success probability must lie in (0, 1)")

    def _pmf(self, k):
        return self.p * (1 - self.p) ** k

    def _pgf(self, z):
        return self.p / (1 - (1 - self.p) * z)

    def _deriv(self, z, order):
        q = 1 - self.p
        if order == 1:
            return self.p * q / (1 - q * z) ** 2
        return 2 * self.p * q**2 / (1 - q * z) ** 3

    @property
    def mean(self):
        return (1 - self.p) / self.p

    def tail_beta(self, j):
        out = (1 - self.p) ** (np.asarray(j, dtype=float) + 1)
        return float(out) if np.ndim(out) == 0 else out

    def to_spec(self):
        return {"type": "geometric", "p": self.p}


@dataclass(frozen=True)
class NegativeBinomial(ClumpDistribution):
    """Negative binomial with mean ``m`` and variance ``m + m**2 / k``."""

    m: float
    k: float

    def __post_init__(self):
        if not (self.m > 0 and self.k > 0):
            raise InvalidParameters("NegativeBinomial needs mean > 0 and k > 0")

    @property
    def _scipy(self):
        return stats.nbinom(self.k, self.k / (self.k + self.m))

    def _pmf(self, k):
        return self._scipy.pmf(k)

    def _pgf(self, z):
        return (1 + self.m * (1 - z) / self.k) ** (-self.k)

    def _deriv(self, z, order):
        base = 1 + self.m * (1 - z) / self.k
        if order == 1:
            return self.m * base ** (-self.k - 1)
        return self.m**2 * (1 + 1 / self.k) * base ** (-self.k - 2)

    @property
    def mean(self):
        return float(self.m)

    def tail_beta(self, j):
        out = self._scipy.sf(j)
        return float(out) if np.ndim(out) == 0 else out

    def to_spec(self):
        return {"type": "negbin", "mean": self.m, "k": self.k}


@dataclass(frozen=True)
class Poisson(ClumpDistribution):
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise InvalidParameters("Poisson mean must be positive")

    def _pmf(self, k):
        return stats.poisson.pmf(k, self.m)

    def _pgf(self, z):
        return np.exp(self.m * (z - 1))

    def _deriv(self, z, order):
        return self.m**order * np.exp(self.m * (z - 1))

    @property
    def mean(self):
        return float(self.m)

    def tail_beta(self, j):
        out = stats.poisson.sf(j, self.m)
        return float(out) if np.ndim(out) == 0 else out

    def to_spec(self):
        return {"type": "poisson", "mean": self.m}


@dataclass(frozen=True)
class FiniteSupport(ClumpDistribution):
    """Explicit pmf on {0, ..., len(weights) - 1}."""

    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0):
            raise InvalidParameters("FiniteSupport weights must be a non-empty non-negative sequence")
        if abs(w.sum() - 1) > 1e-12:
            raise InvalidParameters(f"FiniteSupport weights sum to {w.sum()!r}, not 1")
        nz = np.nonzero(w)[0]
        object.__setattr__(self, "weights", tuple(float(x) for x in w[: nz[-1] + 1]))
        self._validate()

    @property
    def _w(self):
        return np.asarray(self.weights)

    def _pmf(self, k):
        w = self._w
        inside = k < w.size
        return np.where(inside, w[np.where(inside, k, 0)], 0.0)

    def _pgf(self, z):
        return np.polyval(self._w[::-1], z)

    def _deriv(self, z, order):
        poly = np.polynomial.Polynomial(self._w).deriv(order)
        return np.polyval(poly.coef[::-1], z) if poly.coef.size else 0.0 * z

    @property
    def mean(self):
        return float(np.dot(np.arange(len(self.weights)), self._w))

    def tail_beta(self, j):
        w = self._w
        tails = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
        j_arr = np.asarray(j)
        out = np.where(j_arr < w.size, tails[np.minimum(j_arr, w.size - 1)], 0.0)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def support_max(self):
        return len(self.weights) - 1

    def to_spec(self):
        return {"type": "finite", "weights": list(self.weights)}


@dataclass(frozen=True)
class GeometricMixture(ClumpDistribution):
    """Finite mixture of Geometric(p_i) laws; strictly log-convex with two or
    more distinct components."""

    weights: tuple
    ps: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        p = np.asarray(self.ps, dtype=float)
        if w.shape != p.shape or w.ndim != 1 or w.size == 0:
            raise InvalidParameters("GeometricMixture needs matching weights and ps")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise InvalidParameters("GeometricMixture weights must be non-negative and sum to 1")
        if np.any((p <= 0) | (p >= 1)):
            raise InvalidParameters("GeometricMixture ps must lie in (0, 1)")
        object.__setattr__(self, "weights", tuple(map(float, w)))
        object.__setattr__(self, "ps", tuple(map(float, p)))

    def _arrays(self):
        return np.asarray(self.weights), np.asarray(self.ps)

    def _pmf(self, k):
        w, p = self._arrays()
        k = np.asarray(k)
        return np.sum(w * p * (1 - p) ** k[..., None], axis=-1)

    def _pgf(self, z):
        w, p = self._arrays()
        z = np.asarray(z)
        return np.sum(w * p / (1 - (1 - p) * z[..., None]), axis=-1)

    def _deriv(self, z, order):
        w, p = self._arrays()
        q = 1 - p
        z = np.asarray(z)[..., None]
        if order == 1:
            return np.sum(w * p * q / (1 - q * z) ** 2, axis=-1)
        return np.sum(w * 2 * p * q**2 / (1 - q * z) ** 3, axis=-1)

    @property
    def mean(self):
        w, p = self._arrays()
        return float(np.sum(w * (1 - p) / p))

    def tail_beta(self, j):
        w, p = self._arrays()
        j = np.asarray(j, dtype=float)
        out = np.sum(w * (1 - p) ** (j[..., None] + 1), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def to_spec(self):
        return {"type": "geometric_mixture", "weights": list(self.weights), "p": list(self.ps)}


class LogShapeKind(str, enum.Enum):
    LOG_CONCAVE = "LogConcave"
    LOG_CONVEX = "LogConvex"
    BOTH = "Both"
    NEITHER = "Neither"


@dataclass(frozen=True)
class LogShape:
    classification: LogShapeKind
    witness_index: Optional[int] = None


def classify_log_shape(clump: ClumpDistribution, support_bound: Optional[int] = None,
                       rtol: float = 1e-12) -> LogShape:
    """Classify the pmf as log-concave, log-convex, both or neither.

    The inequality ``pi(k)**2 >= pi(k-1) pi(k+1)`` is checked for every k
    strictly inside the hull of the support (capped at ``support_bound`` for
    infinite supports). An interior zero flanked by positive mass yields
    ``Neither`` with that index as witness.
    """
    if isinstance(clump, Poisson) or isinstance(clump, Degenerate):
        return LogShape(LogShapeKind.LOG_CONCAVE)
    if isinstance(clump, Geometric):
        return LogShape(LogShapeKind.BOTH)
    if isinstance(clump, GeometricMixture):
        w, p = clump._arrays()
        if np.unique(p[w > 0]).size >= 2:
            return LogShape(LogShapeKind.LOG_CONVEX)
        return LogShape(LogShapeKind.BOTH)

    if support_bound is None:
        support_bound = clump.support_max if clump.support_max is not None else clump.truncate(1e-12)
    pi = np.asarray(clump.pmf(np.arange(support_bound + 1)), dtype=float)
    positive = np.nonzero(pi > 0)[0]
    lo, hi = positive[0], positive[-1]
    if hi - lo < 2:
        return LogShape(LogShapeKind.LOG_CONCAVE if hi == lo else LogShapeKind.BOTH)

    zeros = np.nonzero(pi[lo:hi + 1] == 0)[0]
    if zeros.size:
        return LogShape(LogShapeKind.NEITHER, int(lo + zeros[0]))

    k = np.arange(lo + 1, hi)
    # compare in logs: pmf values span many orders of magnitude
    lhs = 2 * np.log(pi[k])
    rhs = np.log(pi[k - 1]) + np.log(pi[k + 1])
    slack = rtol * np.maximum(np.abs(lhs), 1.0)
    concave = lhs >= rhs - slack
    convex = lhs <= rhs + slack
    if concave.all() and convex.all():
        return LogShape(LogShapeKind.BOTH)
    if concave.all():
        return LogShape(LogShapeKind.LOG_CONCAVE, int(k[np.argmin(convex)]))
    if convex.all():
        return LogShape(LogShapeKind.LOG_CONVEX, int(k[np.argmin(concave)]))
    return LogShape(LogShapeKind.NEITHER, int(k[np.argmin(concave)]))


_SPEC_TYPES = {
    "degenerate": lambda s: Degenerate(s.get("c", 1)),
    "geometric": lambda s: Geometric(s["p"]),
    "negbin": lambda s: NegativeBinomial(s["mean"], s["k"]),
    "poisson": lambda s: Poisson(s["mean"]),
    "finite": lambda s: FiniteSupport(tuple(s["weights"])),
    "geometric_mixture": lambda s: GeometricMixture(tuple(s["weights"]), tuple(s["p"])),
}


def clump_from_spec(spec: dict) -> ClumpDistribution:
    """Build a clump distribution from a config mapping such as
    ``{"type": "negbin", "mean": 1.0, "k": 0.4}``."""
    try:
        factory = _SPEC_TYPES[spec["type"]]
    except KeyError as exc:
        raise InvalidParameters(f"unknown clump spec {spec!r}") from exc
    try:
        return factory(spec)
    except KeyError as exc:
        raise InvalidParameters(f"clump spec {spec!r} is missing field {exc}") from exc
