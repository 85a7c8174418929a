"""Monte Carlo oracle: exact event-driven simulation of one host's parasite load.

Two samplers of the load at age ``a`` given survival are provided:

``rejection``
    The raw chain (infection at rate phi with a clump from C, parasite death
    at rate mu_M * m, host death at rate alpha * m); dead hosts are discarded.
    Survival decays roughly like exp(-alpha * E[M] * a), so this is only usable
    at small ages or weak mortality.

``conditioned`` (default)
    The same chain conditioned on survival to age ``a``. A parasite present
    with time ``tau`` left spares the host with probability
    ``theta(tau) = lam + (1 - lam) exp(-(alpha + mu_M) tau)``, independently of
    the others, so conditioning turns the rates into
    ``phi pi_C(k) theta(tau)**k`` for gaining k parasites and
    ``mu_M m / theta(tau)`` for losing one, with no host death. Both rates are
    sampled exactly by thinning.

Baseline host mortality does not depend on the load and drops out of either
conditional law, so it is not simulated.

Random numbers come from counter-based SplitMix64 streams keyed on
``(seed, replicate index)``, so every replicate is reproducible on its own and
results do not depend on how replicates are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import InvalidParameters
from .model import ModelParams
from .pmf import Pmf

__all__ = ["RngStream", "SimConfig", "SimResult", "simulate_host", "simulate_loads", "run_ensemble", "uniforms"]

MODES = ("conditioned", "rejection")
Z95 = 1.959963984540054

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_TWO_M53 = 2.0 ** -53


@numba.njit(cache=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True)
def _stream_key(seed, index):
    return _mix(_mix(np.uint64(seed)) + _GOLDEN * (np.uint64(index) + np.uint64(1)))


@numba.njit(cache=True)
def _uniform(key, counter):
    """Uniform on (0, 1) from the ``counter``-th draw of stream ``key``."""
    bits = _mix(key + _GOLDEN * (np.uint64(counter) + np.uint64(1))) >> _S11
    return (np.float64(bits) + 0.5) * _TWO_M53


@numba.njit(cache=True)
def _simulate(seed, first, count, age, alpha, mu, lam, phis, phi_cdf, clump_cdf, conditioned, out):
    rate = alpha + mu
    for r in range(count):
        key = _stream_key(seed, first + np.uint64(r))
        c = 0
        if phis.size == 1:
            phi = phis[0]
        else:
            phi = phis[np.searchsorted(phi_cdf, _uniform(key, c))]
            c += 1
        m = 0
        t = 0.0
        alive = True
        while True:
            if conditioned:
                theta_now = lam + (1.0 - lam) * np.exp(-rate * (age - t))
                loss_bound = mu * m / theta_now
                bound = phi + loss_bound
                t += -np.log(_uniform(key, c)) / bound
                c += 1
                if t >= age:
                    break
                theta = lam + (1.0 - lam) * np.exp(-rate * (age - t))
                u = _uniform(key, c) * bound
                c += 1
                if u < phi:
                    k = np.searchsorted(clump_cdf, _uniform(key, c))
                    c += 1
                    if _uniform(key, c) < theta ** k:
                        m += k
                    c += 1
                else:
                    if _uniform(key, c) < theta_now / theta:
                        m -= 1
                    c += 1
            else:
                bound = phi + rate * m
                t += -np.log(_uniform(key, c)) / bound
                c += 1
                if t >= age:
                    break
                u = _uniform(key, c) * bound
                c += 1
                if u < phi:
                    m += np.searchsorted(clump_cdf, _uniform(key, c))
                    c += 1
                elif u < phi + mu * m:
                    m -= 1
                else:
                    alive = False
                    break
        out[r] = m if alive else -1


@numba.njit(cache=True)
def _uniforms(seed, index, n, out):
    key = _stream_key(seed, index)
    for i in range(n):
        out[i] = _uniform(key, i)


def uniforms(seed: int, index: int, n: int) -> np.ndarray:
    """First ``n`` draws of stream ``(seed, index)``; exposed for testing."""
    out = np.empty(n)
    _uniforms(np.uint64(seed), np.uint64(index), n, out)
    return out


@dataclass(frozen=True)
class RngStream:
    seed: int
    index: int = 0


def _clump_cdf(params: ModelParams) -> np.ndarray:
    table = params.clump.pmf_table(1e-16)
    cdf = np.cumsum(table)
    cdf[-1] = 1.0
    return cdf


def _phi_arrays(params: ModelParams, phi_mixture):
    if phi_mixture is None:
        return np.array([params.phi]), np.array([1.0])
    phis, weights = phi_mixture
    phis = np.asarray(phis, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if phis.shape != weights.shape or np.any(phis <= 0) or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise InvalidParameters("phi_mixture needs positive rates and weights summing to 1")
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return phis, cdf


def simulate_loads(params: ModelParams, age: float, replicates: int, seed: int, first: int = 0,
                   mode: str = "conditioned", phi_mixture=None) -> np.ndarray:
    """Loads of replicates ``first .. first + replicates - 1``; -1 marks a dead host."""
    if mode not in MODES:
        raise InvalidParameters(f"mode must be one of {MODES}")
    if age < 0 or replicates < 0:
        raise InvalidParameters("age and replicates must be non-negative")
    phis, phi_cdf = _phi_arrays(params, phi_mixture)
    out = np.empty(replicates, dtype=np.int64)
    _simulate(np.uint64(seed), np.uint64(first), replicates, float(age), float(params.alpha),
              float(params.mu_M), float(params.lam), phis, phi_cdf, _clump_cdf(params),
              mode == "conditioned", out)
    return out


def simulate_host(params: ModelParams, age: float, stream: RngStream, mode: str = "conditioned") -> Optional[int]:
    """Load at ``age`` for one host, or None if the host died (rejection mode only)."""
    load = int(simulate_loads(params, age, 1, stream.seed, stream.index, mode)[0])
    return None if load < 0 else load


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    age: float
    replicates: int
    seed: int
    phi_mixture: Optional[tuple] = None
    mode: str = "conditioned"

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidParameters("replicates must be at least 1")
        if self.age < 0:
            raise InvalidParameters("age must be non-negative")
        if self.mode not in MODES:
            raise InvalidParameters(f"mode must be one of {MODES}")


@dataclass(frozen=True, eq=False)
class SimResult:
    replicates: int
    survivors: int
    empirical_pmf: Optional[Pmf]
    mean_ci: tuple
    cv_ci: tuple
    prevalence_complement_ci: tuple
    survival_fraction: Optional[float]
    flag: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "survivors": self.survivors,
            "survival_fraction": self.survival_fraction,
            "mean_ci": list(self.mean_ci),
            "cv_ci": list(self.cv_ci),
            "prevalence_complement_ci": list(self.prevalence_complement_ci),
            "flag": self.flag,
            "empirical_pmf": None if self.empirical_pmf is None else self.empirical_pmf.mass.tolist(),
        }


def _interval(est: float, se: float) -> tuple:
    return (float(est), float(est - Z95 * se), float(est + Z95 * se))


def summarize(loads: np.ndarray, replicates: int, mode: str) -> SimResult:
    alive = loads[loads >= 0]
    n = alive.size
    survival = n / replicates if mode == "rejection" else None
    nan3 = (float("nan"),) * 3
    if n == 0:
        return SimResult(replicates, 0, None, nan3, nan3, nan3, survival, flag="no survivors")
    counts = np.bincount(alive)
    pmf = Pmf(counts / n)
    x = alive.astype(float)
    mean = x.mean()
    centred = x - mean
    var = np.mean(centred**2)
    mu3 = np.mean(centred**3)
    mu4 = np.mean(centred**4)
    mean_ci = _interval(mean, np.sqrt(var / n))
    if mean > 0 and var > 0:
        cv = np.sqrt(var) / mean
        # delta method for sqrt(var)/mean with sample moments
        cv_var = (var**2 / mean**4 + (mu4 - var**2) / (4 * mean**2 * var) - mu3 / mean**3) / n
        cv_ci = _interval(cv, np.sqrt(max(cv_var, 0.0)))
    else:
        cv_ci = nan3
    p0 = counts[0] / n
    p0_ci = _interval(p0, np.sqrt(p0 * (1 - p0) / n))
    return SimResult(replicates, n, pmf, mean_ci, cv_ci, p0_ci, survival)


def run_ensemble(cfg: SimConfig, chunk: int = 1 << 16) -> SimResult:
    """Simulate ``cfg.replicates`` independent hosts and summarise survivors.

    Work is split into chunks of replicate indices; because every replicate
    owns its stream, the chunking never changes the result.
    """
    loads = np.empty(cfg.replicates, dtype=np.int64)
    for start in range(0, cfg.replicates, chunk):
        stop = min(start + chunk, cfg.replicates)
        loads[start:stop] = simulate_loads(cfg.params, cfg.age, stop - start, cfg.seed, start,
                                           cfg.mode, cfg.phi_mixture)
    return summarize(loads, cfg.replicates, cfg.mode)
