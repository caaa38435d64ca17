"""HTTP service exposing the sweep operations.

Every computation endpoint accepts the same request shape — a run
configuration dict plus optional ``key=value`` override strings — validates
it against the versioned schema, and returns the resulting table.  The CLI
is a thin client of this app; mounting it under ASGI serves the same API
over the network.
"""

from __future__ import annotations

from typing import Optional, Union

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .config import ConfigError, RunConfig, apply_overrides
from .sweeps import (
    SCHEME_NAMES,
    Table,
    advantage_grid,
    advantage_region,
    crossover_table,
    hard_gate_failure,
    mc_validate,
    optimize_params,
    run_curve,
)

__all__ = ["app", "ORACLE_Z_THRESHOLD"]

#: largest acceptable |z| between analytic and sampled statistics
ORACLE_Z_THRESHOLD = 5.0

Cell = Union[str, float, None]


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict = Field(default_factory=dict)
    overrides: list[str] = Field(default_factory=list)

    def build(self) -> RunConfig:
        try:
            data = apply_overrides(dict(self.config), self.overrides)
            return RunConfig.model_validate(data)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc


class CrossoverRequest(RunRequest):
    scheme_a: str
    scheme_b: str


class TableResponse(BaseModel):
    format: str
    kind: str
    columns: list[str]
    rows: list[list[Cell]]


class FiniteRatesResponse(BaseModel):
    table: TableResponse
    gate_failure: Optional[str] = None


class CrossoverResponse(BaseModel):
    table: TableResponse
    crossovers: list[float]
    message: Optional[str] = None


class ValidationResponse(BaseModel):
    table: TableResponse
    max_abs_z: float
    threshold: float
    passed: bool


class HealthResponse(BaseModel):
    status: str
    version: str


app = FastAPI(title="cvqss", version=__version__)


def _table_response(table: Table) -> TableResponse:
    return TableResponse(**table.to_payload())


def _guard(fn, *args):
    """Run a sweep operation, mapping domain validation errors to 422."""
    try:
        return fn(*args)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/v1/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/v1/rates/asymptotic", response_model=TableResponse)
def rates_asymptotic(request: RunRequest) -> TableResponse:
    return _table_response(_guard(run_curve, request.build(), "asymptotic"))


@app.post("/v1/rates/finite", response_model=FiniteRatesResponse)
def rates_finite(request: RunRequest) -> FiniteRatesResponse:
    table = _guard(run_curve, request.build(), "finite")
    return FiniteRatesResponse(
        table=_table_response(table), gate_failure=hard_gate_failure(table)
    )


@app.post("/v1/crossover", response_model=CrossoverResponse)
def crossover(request: CrossoverRequest) -> CrossoverResponse:
    for name in (request.scheme_a, request.scheme_b):
        if name not in SCHEME_NAMES:
            raise HTTPException(
                status_code=422,
                detail=f"unknown scheme {name!r}; choose from {list(SCHEME_NAMES)}",
            )
    table = _guard(crossover_table, request.build(), request.scheme_a, request.scheme_b)
    found = [row[2] for row in table.rows if isinstance(row[2], float) and row[2] == row[2]]
    return CrossoverResponse(
        table=_table_response(table),
        crossovers=found,
        message=None if found else "no crossover in range",
    )


@app.post("/v1/advantage-region", response_model=TableResponse)
def advantage_region_endpoint(request: RunRequest) -> TableResponse:
    return _table_response(_guard(advantage_region, request.build()))


@app.post("/v1/advantage-grid", response_model=TableResponse)
def advantage_grid_endpoint(request: RunRequest) -> TableResponse:
    return _table_response(_guard(advantage_grid, request.build()))


@app.post("/v1/optimize", response_model=TableResponse)
def optimize(request: RunRequest) -> TableResponse:
    return _table_response(_guard(optimize_params, request.build()))


@app.post("/v1/mc-validate", response_model=ValidationResponse)
def mc_validate_endpoint(request: RunRequest) -> ValidationResponse:
    table = _guard(mc_validate, request.build())
    z_col = table.columns.index("max_abs_z")
    worst = max((row[z_col] for row in table.rows), default=0.0)
    return ValidationResponse(
        table=_table_response(table),
        max_abs_z=worst,
        threshold=ORACLE_Z_THRESHOLD,
        passed=worst <= ORACLE_Z_THRESHOLD,
    )
