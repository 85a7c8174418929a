from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameters

__all__ = ["Pmf"]


@dataclass(frozen=True, eq=False)
class Pmf:
    """Truncated distribution on 0..K.

    ``tail_bound`` bounds the probability mass beyond K that is missing from
    ``mass``. ``clamped_mass`` records negative round-off removed during
    numerical inversion; ``warning`` is set when the truncation is suspect.
    """

    mass: np.ndarray
    tail_bound: float = 0.0
    clamped_mass: float = 0.0
    warning: Optional[str] = None

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 1 or mass.size == 0:
            raise InvalidParameters("pmf mass must be a non-empty 1-d array")
        if np.any(mass < 0):
            raise InvalidParameters("pmf mass must be non-negative")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def point_mass(cls, c: int) -> "Pmf":
        mass = np.zeros(c + 1)
        mass[c] = 1.0
        return cls(mass)

    @classmethod
    def from_scipy(cls, dist, tol: float = 1e-15) -> "Pmf":
        """Tabulate a frozen scipy discrete distribution up to tail mass ``tol``."""
        k_max = int(dist.isf(tol)) + 1
        k = np.arange(k_max + 1)
        return cls(dist.pmf(k), tail_bound=float(dist.sf(k_max)))

    @property
    def k_max(self) -> int:
        return self.mass.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.mass.size)

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.mass))

    @property
    def variance(self) -> float:
        k = self.support
        m = self.mean
        return float(np.dot((k - m) ** 2, self.mass))

    @property
    def cv(self) -> float:
        return float(np.sqrt(self.variance) / self.mean)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def survival(self) -> np.ndarray:
        """P(X > k) for k = 0..K, computed from the upper end to keep tail precision."""
        rev = np.cumsum(self.mass[::-1])[::-1]
        return np.concatenate([rev[1:], [0.0]])

    def pgf(self, z):
        return np.polyval(self.mass[::-1], np.asarray(z))

    def padded(self, size: int) -> np.ndarray:
        out = np.zeros(max(size, self.mass.size))
        out[: self.mass.size] = self.mass
        return out

    def normalized(self) -> "Pmf":
        return Pmf(self.mass / self.total, tail_bound=0.0)

    def trimmed(self, tol: float = 0.0) -> "Pmf":
        """Drop trailing entries <= tol, moving their mass into ``tail_bound``."""
        keep = np.nonzero(self.mass > tol)[0]
        last = keep[-1] if keep.size else 0
        dropped = float(self.mass[last + 1:].sum())
        return Pmf(self.mass[: last + 1], self.tail_bound + dropped, self.clamped_mass, self.warning)

    @staticmethod
    def mixture(pmfs, weights) -> "Pmf":
        size = max(p.mass.size for p in pmfs)
        mass = sum(w * p.padded(size) for p, w in zip(pmfs, weights))
        tail = sum(w * p.tail_bound for p, w in zip(pmfs, weights))
        return Pmf(mass, tail_bound=float(tail))

    def allclose(self, other: "Pmf", atol: float) -> bool:
        size = max(self.mass.size, other.mass.size)
        return bool(np.max(np.abs(self.padded(size) - other.padded(size))) <= atol)

    def tv_distance(self, other: "Pmf") -> float:
        size = max(self.mass.size, other.mass.size)
        return 0.5 * float(np.abs(self.padded(size) - other.padded(size)).sum())

    def __repr__(self):
        return f"Pmf(k_max={self.k_max}, mean={self.mean:.6g}, tail_bound={self.tail_bound:.2g})"
