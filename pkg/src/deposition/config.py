"""Strict JSON scenario configs for the command line."""
from __future__ import annotations

import hashlib
import json
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Positive = Annotated[float, Field(gt=0)]
State = tuple[float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Strict):
    x_min: float = -1.0
    x_max: float = 1.0
    n_cells: int = Field(400, ge=4)
    boundary: Literal["periodic", "outflow"] = "outflow"

    @model_validator(mode="after")
    def _ordered(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        return self


class ConstantInit(_Strict):
    type: Literal["constant"]
    rho: float = Field(ge=0)
    u: float = 0.0


class RiemannInit(_Strict):
    type: Literal["riemann"]
    left: State
    right: State
    x0: float = 0.0

    @field_validator("left", "right")
    @classmethod
    def _physical(cls, v):
        if v[0] < 0:
            raise ValueError("density must be non-negative")
        return v


class BumpInit(_Strict):
    type: Literal["bump"]
    base: State = (1.0, 0.0)
    amplitude: State = (0.5, 0.0)
    center: float = 0.0
    width: Positive = 0.1


class SineInit(_Strict):
    type: Literal["sine"]
    base: State = (1.0, 0.0)
    amplitude: State = (0.5, 0.5)
    wavenumber: int = 1
    phase: float = 0.0


class TableInit(_Strict):
    type: Literal["table"]
    x: list[float]
    rho: list[float]
    u: list[float]

    @model_validator(mode="after")
    def _lengths(self):
        if not (len(self.x) == len(self.rho) == len(self.u) >= 2):
            raise ValueError("x, rho and u need equal lengths >= 2")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("x must increase")
        if min(self.rho) < 0:
            raise ValueError("density must be non-negative")
        return self


Initial = Annotated[Union[ConstantInit, RiemannInit, BumpInit, SineInit, TableInit],
                    Field(discriminator="type")]


class SchemeSpec(_Strict):
    kind: Literal["viscous", "lax-friedrichs", "hll"] = "hll"
    eps: float = Field(0.0, ge=0)
    cfl: float = Field(0.45, gt=0, le=1)
    dt: Positive | None = None

    @model_validator(mode="after")
    def _viscosity(self):
        if self.kind == "viscous" and not self.eps > 0:
            raise ValueError("viscous runs need eps > 0")
        return self


class EvolveConfig(_Strict):
    kind: Literal["evolve"] = "evolve"
    grid: GridConfig = GridConfig()
    initial: Initial
    scheme: SchemeSpec = SchemeSpec()
    t_end: Positive
    snapshots: int = Field(10, ge=1)
    measure_speed: bool = False
    eps_sweep: list[Positive] | None = None
    workers: int = Field(1, ge=1)
    seed: int = 0


class ConvergenceConfig(_Strict):
    kind: Literal["convergence"] = "convergence"
    grid: GridConfig = GridConfig(x_min=-2.0, x_max=2.0, n_cells=800)
    left: State = (2.0, 1.0)
    right: State = (0.75, 1.0 / 6.0)
    x0: float = 0.0
    t_end: Positive = 0.5
    eps: list[Positive] = [0.1, 0.05, 0.025, 0.0125]
    cfl: float = Field(0.45, gt=0, le=1)
    workers: int = Field(1, ge=1)
    seed: int = 0

    @field_validator("eps")
    @classmethod
    def _at_least_two(cls, v):
        if len(v) < 2:
            raise ValueError("need at least two viscosities")
        return v


class RiemannConfig(_Strict):
    kind: Literal["riemann"] = "riemann"
    left: State
    right: State | None = None
    sigma: float | None = None
    run: bool = False
    cells: int = Field(4000, ge=4)
    half_width: Positive = 1.5
    t_end: Positive = 0.6
    scheme: Literal["hll", "lax-friedrichs"] = "hll"
    seed: int = 0

    @model_validator(mode="after")
    def _one_of(self):
        if (self.right is None) == (self.sigma is None):
            raise ValueError("give exactly one of right and sigma")
        return self


class GibbsSpec(_Strict):
    fugacity: Positive = 0.8
    tilt: Positive = 1.2
    parity: Literal[0, 1] = 0


class BricklayerConfig(_Strict):
    kind: Literal["bricklayer"] = "bricklayer"
    mode: Literal["run", "stationarity", "flux"] = "run"
    L: int = Field(64, ge=2)
    t_end: Positive = 10.0
    beta: Positive = 1.0
    gibbs: GibbsSpec = GibbsSpec()
    initial: Literal["gibbs", "empty"] = "gibbs"
    record: int = Field(10, ge=1)
    samples: int = Field(100_000, ge=2)
    replicas: int = Field(8, ge=1)
    seed: int = 0


class Range(_Strict):
    start: float
    stop: float
    num: int = Field(ge=1)


class HydroTableConfig(_Strict):
    kind: Literal["hydro-table"] = "hydro-table"
    beta: Positive = 1.0
    parity: Literal[0, 1] = 0
    fugacity: list[Positive] | Range = Range(start=0.2, stop=2.0, num=10)
    tilt: list[Positive] | Range = Range(start=0.5, stop=2.0, num=16)
    seed: int = 0


class EntropyScanConfig(_Strict):
    kind: Literal["entropy-scan"] = "entropy-scan"
    pair: Literal["canonical", "similarity"] = "canonical"
    alpha: float = 0.25
    phi0: float = 1.0
    dphi0: float = 0.0
    y_range: State = (-1.1, 1.1)
    step: Positive = 0.01
    samples: int = Field(1000, ge=1)
    rho_range: State = (0.1, 10.0)
    u_range: State = (-5.0, 5.0)
    seed: int = 0


CONFIGS = {
    "evolve": EvolveConfig,
    "convergence": ConvergenceConfig,
    "bricklayer": BricklayerConfig,
    "hydro-table": HydroTableConfig,
    "entropy-scan": EntropyScanConfig,
}


def load_config(command: str, text: str | None, seed: int | None = None):
    """Parse and validate ``text`` (JSON) for ``command``; ``seed`` overrides the file."""
    data = json.loads(text) if text else {}
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    data.setdefault("kind", command)
    if data["kind"] != command:
        raise ValueError(f"config kind {data['kind']!r} does not match command {command!r}")
    if seed is not None:
        data["seed"] = seed
    return CONFIGS[command].model_validate(data)


def canonical_json(cfg: BaseModel) -> str:
    """Sorted, compact JSON with every default spelled out."""
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: BaseModel) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()
