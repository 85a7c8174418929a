"""Lorenz curves, inequality indices and certified stochastic-order checks for
pmfs on the non-negative integers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameters
from .pmf import Pmf

__all__ = [
    "LorenzCurve",
    "Relation",
    "OrderVerdict",
    "lorenz_curve",
    "gini",
    "gini_lorenz_area",
    "pietra",
    "pietra_lorenz_gap",
    "stop_loss",
    "convex_order_check",
    "lorenz_order_check",
    "survival_crossing_check",
]

TIE_TOL = 1e-10


def _mean_or_raise(P: Pmf) -> float:
    m = P.mean
    if not m > 0:
        raise InvalidParameters("distribution has zero mean; Lorenz curve undefined")
    return m


@dataclass(frozen=True, eq=False)
class LorenzCurve:
    """Piecewise-linear Lorenz curve given by its knots (u, L(u))."""

    u: np.ndarray
    L: np.ndarray

    @property
    def knots(self):
        return list(zip(self.u.tolist(), self.L.tolist()))

    def __call__(self, u):
        return np.interp(u, self.u, self.L)

    def area(self) -> float:
        return float(np.sum((self.L[1:] + self.L[:-1]) * np.diff(self.u)) / 2)


def lorenz_curve(P: Pmf) -> LorenzCurve:
    """Exact Lorenz curve of a pmf on 0..K (normalised by its total mass).

    The quantile function is the step function taking value k on
    (F(k-1), F(k)], so L is linear between the cumulative masses F(k).
    """
    _mean_or_raise(P)
    mass = P.mass / P.total
    k = P.support
    # zero-mass points add no knot
    keep = np.concatenate([[True], mass > 0])
    u = np.concatenate([[0.0], np.cumsum(mass)])[keep]
    share = np.concatenate([[0.0], np.cumsum(k * mass)])[keep]
    share /= share[-1]
    u[-1] = 1.0
    return LorenzCurve(u, share)


def gini(P: Pmf) -> float:
    """E|X - X'| / (2 E X) by the double sum over the support.

    Supports longer than 1024 points switch to the equivalent single sum
    E|X - X'| = 2 sum_k F(k)(1 - F(k)).
    """
    _mean_or_raise(P)
    mass = P.mass / P.total
    k = P.support
    m = float(np.dot(k, mass))
    if P.mass.size <= 1024:
        diff = np.abs(k[:, None] - k[None, :])
        return float(mass @ diff @ mass / (2 * m))
    F = np.cumsum(mass)
    return float(np.sum(F * (1 - F)) / m)


def gini_lorenz_area(P: Pmf) -> float:
    """Gini index as 1 - 2 * (area under the Lorenz curve)."""
    return 1 - 2 * lorenz_curve(P).area()


def pietra(P: Pmf) -> float:
    """E|X - E X| / (2 E X)."""
    _mean_or_raise(P)
    mass = P.mass / P.total
    k = P.support
    m = float(np.dot(k, mass))
    return float(np.dot(mass, np.abs(k - m)) / (2 * m))


def pietra_lorenz_gap(P: Pmf) -> float:
    """Pietra index as the maximal vertical gap u - L(u)."""
    curve = lorenz_curve(P)
    return float(np.max(curve.u - curve.L))


class Relation(str, enum.Enum):
    LEFT_SMALLER = "LeftSmaller"
    RIGHT_SMALLER = "RightSmaller"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"


@dataclass(frozen=True)
class OrderVerdict:
    relation: Relation
    certificate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"relation": self.relation.value, "certificate": self.certificate}


def _decide(margins: np.ndarray, grid: np.ndarray, slack: float, kind: str) -> OrderVerdict:
    """Turn margins d = (right functional) - (left functional) into a verdict.

    d >= 0 everywhere means the left argument is smaller. Margins within
    ``slack`` of zero count as ties.
    """
    pos = margins > slack
    neg = margins < -slack
    cert = {
        "kind": kind,
        "slack": slack,
        "grid_size": int(grid.size),
        "min_margin": float(margins.min()),
        "max_margin": float(margins.max()),
    }
    if not pos.any() and not neg.any():
        return OrderVerdict(Relation.EQUAL, cert)
    if not neg.any():
        i = int(np.argmax(margins))
        cert["strict_at"] = float(grid[i])
        return OrderVerdict(Relation.LEFT_SMALLER, cert)
    if not pos.any():
        i = int(np.argmin(margins))
        cert["strict_at"] = float(grid[i])
        return OrderVerdict(Relation.RIGHT_SMALLER, cert)
    i, j = int(np.argmax(margins)), int(np.argmin(margins))
    cert["witness"] = {
        "left_smaller_at": {"at": float(grid[i]), "margin": float(margins[i])},
        "right_smaller_at": {"at": float(grid[j]), "margin": float(margins[j])},
    }
    return OrderVerdict(Relation.INCOMPARABLE, cert)


def stop_loss(P: Pmf, t_max: int) -> np.ndarray:
    """E[(X - t)^+] for integer t = 0..t_max."""
    mass = P.padded(t_max + 1)
    # E[(X - t)^+] = sum_{k > t} P(X >= k) = sum_{k >= t} P(X > k)
    sf = np.concatenate([np.cumsum(mass[::-1])[::-1][1:], [0.0]])
    tail_sums = np.cumsum(sf[::-1])[::-1]
    return tail_sums[: t_max + 1]


def convex_order_check(P: Pmf, Q: Pmf, tol: float = TIE_TOL) -> OrderVerdict:
    """Decide P <=cx Q by comparing stop-loss transforms at every integer t.

    Stop-loss transforms of laws on the integers are piecewise linear with
    integer breakpoints, so the finite grid is an exact certificate. Tail
    bounds of truncated pmfs are added to the tie slack.
    """
    if abs(P.mean - Q.mean) >= 1e-9:
        raise InvalidParameters(f"convex order needs equal means, got {P.mean!r} and {Q.mean!r}")
    t_max = max(P.k_max, Q.k_max)
    t = np.arange(t_max + 1)
    margins = stop_loss(Q, t_max) - stop_loss(P, t_max)
    slack = tol + P.tail_bound + Q.tail_bound
    verdict = _decide(margins, t, slack, "stop-loss")
    verdict.certificate["margins"] = margins.tolist()
    return verdict


def lorenz_order_check(P: Pmf, Q: Pmf, tol: float = TIE_TOL) -> OrderVerdict:
    """Decide P <=Lorenz Q, i.e. L_P(u) >= L_Q(u) for all u.

    Both curves are piecewise linear, so comparing them on the merged knot set
    is exact.
    """
    lp, lq = lorenz_curve(P), lorenz_curve(Q)
    grid = np.union1d(lp.u, lq.u)
    margins = lp(grid) - lq(grid)
    slack = tol + P.tail_bound + Q.tail_bound
    return _decide(margins, grid, slack, "lorenz")


def survival_crossing_check(P: Pmf, Q: Pmf, tol: float = TIE_TOL) -> OrderVerdict:
    """Convex-order test by counting sign changes of P(X > k) - P(Y > k).

    For equal means, a single change from negative to positive certifies
    Q <=cx P, and from positive to negative certifies P <=cx Q. Anything else
    falls back to ``convex_order_check``.
    """
    if abs(P.mean - Q.mean) >= 1e-9:
        raise InvalidParameters(f"convex order needs equal means, got {P.mean!r} and {Q.mean!r}")
    size = max(P.mass.size, Q.mass.size)
    diff = Pmf(P.padded(size)).survival() - Pmf(Q.padded(size)).survival()
    slack = tol + P.tail_bound + Q.tail_bound
    signs = np.where(diff > slack, 1, np.where(diff < -slack, -1, 0))
    nz = signs[signs != 0]
    changes = int(np.count_nonzero(np.diff(nz))) if nz.size else 0
    cert = {"kind": "survival-crossing", "slack": slack, "sign_changes": changes}
    if nz.size == 0:
        return OrderVerdict(Relation.EQUAL, cert)
    if changes == 1:
        k = np.nonzero(signs != 0)[0]
        cert["crossing_after"] = int(k[np.nonzero(np.diff(nz))[0][0]])
        cert["first_sign"] = int(nz[0])
        if nz[0] < 0:
            return OrderVerdict(Relation.RIGHT_SMALLER, cert)
        return OrderVerdict(Relation.LEFT_SMALLER, cert)
    fallback = convex_order_check(P, Q, tol)
    fallback.certificate["survival_sign_changes"] = changes
    return fallback
