"""Experiment configuration files (JSON or TOML), validated with pydantic.

Every subcommand reads one declarative file. Clumps are written as tagged
mappings, for example ``{"type": "negbin", "mean": 1.0, "k": 0.4}``:

==================== ==========================================
type                 fields
==================== ==========================================
``degenerate``       ``c`` (default 1)
``geometric``        ``p``
``negbin``           ``mean``, ``k``
``poisson``          ``mean``
``finite``           ``weights`` (pi_C(0), pi_C(1), ...)
``geometric_mixture`` ``weights``, ``p`` (lists of equal length)
==================== ==========================================
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, NonNegativeFloat, model_validator

from .clump import ClumpDistribution, clump_from_spec
from .model import ModelParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ClumpSpec",
    "ParamsSpec",
    "InversionSpec",
    "GridSpec",
    "ReportConfig",
    "FigureConfig",
    "CompareConfig",
    "SimulateConfig",
    "DecomposeConfig",
    "InvertConfig",
    "CONFIG_TYPES",
    "load_mapping",
    "apply_overrides",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DegenerateSpec(_Strict):
    type: Literal["degenerate"]
    c: PositiveInt = 1


class GeometricSpec(_Strict):
    type: Literal["geometric"]
    p: float = Field(gt=0, lt=1)


class NegBinSpec(_Strict):
    type: Literal["negbin"]
    mean: PositiveFloat
    k: PositiveFloat


class PoissonSpec(_Strict):
    type: Literal["poisson"]
    mean: PositiveFloat


class FiniteSpec(_Strict):
    type: Literal["finite"]
    weights: List[NonNegativeFloat] = Field(min_length=2)


class GeometricMixtureSpec(_Strict):
    type: Literal["geometric_mixture"]
    weights: List[NonNegativeFloat] = Field(min_length=1)
    p: List[float] = Field(min_length=1)


ClumpSpec = Annotated[
    Union[DegenerateSpec, GeometricSpec, NegBinSpec, PoissonSpec, FiniteSpec, GeometricMixtureSpec],
    Field(discriminator="type"),
]


def build_clump(spec) -> ClumpDistribution:
    return clump_from_spec(spec.model_dump())


class ParamsSpec(_Strict):
    phi: PositiveFloat
    alpha: NonNegativeFloat
    mu_M: NonNegativeFloat
    clump: ClumpSpec

    @model_validator(mode="after")
    def _rates(self):
        if self.alpha == 0 and self.mu_M == 0:
            raise ValueError("alpha and mu_M cannot both be zero")
        return self

    def build(self) -> ModelParams:
        return ModelParams(self.phi, self.alpha, self.mu_M, build_clump(self.clump))


class InversionSpec(_Strict):
    mass_tol: float = Field(default=1e-12, gt=0, le=1e-3)
    target_error: float = Field(default=1e-12, ge=1e-12, lt=1)


class PhiMixtureSpec(_Strict):
    phi: List[PositiveFloat] = Field(min_length=1)
    weights: List[NonNegativeFloat] = Field(min_length=1)

    @model_validator(mode="after")
    def _shape(self):
        if len(self.phi) != len(self.weights):
            raise ValueError("phi and weights must have the same length")
        if abs(sum(self.weights) - 1) > 1e-12:
            raise ValueError("phi mixture weights must sum to 1")
        return self


class GridSpec(_Strict):
    start: float
    stop: float
    step: PositiveFloat

    @model_validator(mode="after")
    def _nonempty(self):
        if self.stop < self.start:
            raise ValueError("grid stop lies below start")
        return self


class ReportConfig(ParamsSpec):
    inversion: InversionSpec = InversionSpec()
    phi_mixture: Optional[PhiMixtureSpec] = None


class FigureConfig(_Strict):
    """Overrides of the default figure grids; omitted fields keep the defaults."""

    which: Optional[Literal[1, 2, 3]] = None
    phi: Optional[PositiveFloat] = None
    alpha: Optional[NonNegativeFloat] = None
    mu_M: Optional[NonNegativeFloat] = None
    clump_mean: Optional[PositiveFloat] = None
    series: Optional[List[PositiveFloat]] = Field(default=None, min_length=1)
    grid: Optional[GridSpec] = None
    inversion: InversionSpec = InversionSpec()
    jobs: PositiveInt = 1

    def overrides(self) -> dict:
        keys = ("phi", "alpha", "mu_M", "clump_mean", "series", "grid")
        out = {}
        for key in keys:
            value = getattr(self, key)
            if value is not None:
                out[key] = value.model_dump() if isinstance(value, BaseModel) else value
        return out


class CompareConfig(_Strict):
    left: ParamsSpec
    right: ParamsSpec
    inversion: InversionSpec = InversionSpec()


class SimulateConfig(ParamsSpec):
    age: Optional[NonNegativeFloat] = None
    replicates: PositiveInt = 100_000
    seed: int = Field(default=0, ge=0, lt=2**64)
    mode: Literal["conditioned", "rejection"] = "conditioned"
    phi_mixture: Optional[PhiMixtureSpec] = None

    def resolved_age(self) -> float:
        """The configured age, defaulting to 15 / (alpha + mu_M) (near equilibrium)."""
        return self.age if self.age is not None else 15.0 / (self.alpha + self.mu_M)


class DecomposeConfig(_Strict):
    clump: ClumpSpec
    lam: Optional[float] = Field(default=None, ge=0, le=1, alias="lambda")
    alpha: Optional[NonNegativeFloat] = None
    mu_M: Optional[NonNegativeFloat] = None
    columns: PositiveInt = 10
    tol: float = Field(default=1e-10, gt=0, lt=1)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def _lambda_source(self):
        if self.lam is None and (self.alpha is None or self.mu_M is None):
            raise ValueError("give either lambda or both alpha and mu_M")
        if self.lam is None and self.alpha == 0 and self.mu_M == 0:
            raise ValueError("alpha and mu_M cannot both be zero")
        return self

    def resolved_lambda(self) -> float:
        if self.lam is not None:
            return self.lam
        return 1.0 if self.alpha == 0 else self.mu_M / (self.alpha + self.mu_M)


class InvertConfig(ParamsSpec):
    k_max: Optional[PositiveInt] = None
    inversion: InversionSpec = InversionSpec()


CONFIG_TYPES = {
    "report": ReportConfig,
    "figure": FigureConfig,
    "compare": CompareConfig,
    "simulate": SimulateConfig,
    "decompose": DecomposeConfig,
    "invert": InvertConfig,
}


def load_mapping(path: Union[str, Path]) -> dict:
    """Read a JSON or TOML file (chosen by suffix) into a mapping."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        return tomllib.loads(text)
    return json.loads(text)


def apply_overrides(mapping: dict, assignments: List[str]) -> dict:
    """Apply ``dotted.key=value`` assignments; values parse as JSON when they
    can and stay strings otherwise."""
    out = json.loads(json.dumps(mapping))
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ValueError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValueError(f"override {item!r} descends into a non-table")
        node[parts[-1]] = value
    return out
