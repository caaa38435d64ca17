"""Run configuration: a versioned JSON schema with literature defaults.

A :class:`RunConfig` captures everything a sweep needs — device parameters,
finite-size protocol constants, and sweep axes — so the bundled defaults
reproduce the reference curves with a near-empty config file.  Unknown keys
are rejected at parse time, and all validation failures surface as
:class:`ConfigError` with the offending location.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .finite import FiniteSizeParams
from .graphs import db_to_squeezing
from .networks import NetworkParams, inferred_squeezing

__all__ = [
    "ConfigError",
    "PhysicalSettings",
    "FiniteSettings",
    "SweepSettings",
    "RunConfig",
    "load_config",
    "apply_overrides",
]

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Configuration rejected: bad JSON, unknown key, or invalid value."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PhysicalSettings(_Strict):
    """Device parameters of the realistic network (lab-values defaults)."""

    eta_escape: float = 0.99
    eta_fibre: float = 0.95
    eta_detector: float = 0.99
    excess_noise: float = 0.002
    energy_test_transmission: float = 0.99
    measured_squeezing_db: float = 15.3
    measurement_efficiency: float = 0.975

    @model_validator(mode="after")
    def _preconditions(self) -> "PhysicalSettings":
        for name in ("eta_escape", "eta_fibre", "eta_detector", "measurement_efficiency"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
        if self.excess_noise < 0:
            raise ValueError("excess noise must be non-negative")
        if not 0.5 < self.energy_test_transmission <= 1:
            raise ValueError(
                "energy-test transmission must lie in (0.5, 1] for the tail bound"
            )
        if self.measured_squeezing_db <= 0:
            raise ValueError("measured squeezing must be positive (dB)")
        return self

    def source_budget(self) -> float:
        """Offline squeezing budget inferred from the measured level."""
        return inferred_squeezing(
            self.measured_squeezing_db, self.measurement_efficiency
        )

    def network_params(self, distance_km: float, squeezing: float, gate_gain: float = 0.0) -> NetworkParams:
        """Network parameters with every arm at ``distance_km``."""
        return NetworkParams(
            squeezing=squeezing,
            gate_gain=gate_gain,
            distance_a_km=distance_km,
            distance_b_km=distance_km,
            distance_c_km=distance_km,
            eta_escape=self.eta_escape,
            eta_fibre=self.eta_fibre,
            eta_detector=self.eta_detector,
            excess_noise=self.excess_noise,
            energy_test_transmission=self.energy_test_transmission,
        )


class FiniteSettings(_Strict):
    """Composable-security constants and block sizes (protocol defaults)."""

    eps_smooth: float = 1e-9
    eps_correct: float = 1e-9
    eps_one: float = 4e-11
    eps_mu: float = 4e-20
    delta_key: float = 0.1
    delta_check: float = 0.4
    range_m: float = 25.0
    alpha: float = 28.0
    beta: float = 0.98
    players: int = 2
    block_sizes: list[float] = Field(default_factory=lambda: [1e12, 1e9])
    key_probability: Optional[float] = None
    """Fixed key-round probability; None optimizes it per point."""

    @field_validator("block_sizes")
    @classmethod
    def _nonempty(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("at least one block size is required")
        if any(m <= 0 for m in v):
            raise ValueError("block sizes must be positive")
        return v

    @model_validator(mode="after")
    def _preconditions(self) -> "FiniteSettings":
        # materializing one parameter set runs the full module validation
        self.params(self.block_sizes[0], self.key_probability or 0.9)
        return self

    def params(
        self,
        m: float,
        key_probability: float = 0.9,
        energy_test_transmission: float = 0.99,
    ) -> FiniteSizeParams:
        """Materialize the validated parameter set for one block size.

        The energy-test transmission rides along from the physical table so
        the security analysis and the device model stay in sync.
        """
        return FiniteSizeParams(
            eps_smooth=self.eps_smooth,
            eps_correct=self.eps_correct,
            eps_one=self.eps_one,
            eps_mu=self.eps_mu,
            delta_key=self.delta_key,
            delta_check=self.delta_check,
            range_m=self.range_m,
            alpha=self.alpha,
            energy_test_transmission=energy_test_transmission,
            beta=self.beta,
            m=m,
            key_probability=key_probability,
            players=self.players,
        )


class SweepSettings(_Strict):
    """Axes for distance sweeps and the advantage-region grid."""

    distance_start_km: float = 0.1
    distance_stop_km: float = 8.0
    distance_step_km: float = 0.1
    squeezing_db_min: float = 0.5
    squeezing_db_max: float = 15.0
    squeezing_points: int = 50
    distance_points: int = 50

    @field_validator("distance_step_km")
    @classmethod
    def _positive_step(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("distance step must be positive")
        return v

    @field_validator("squeezing_points", "distance_points")
    @classmethod
    def _enough_points(cls, v: int) -> int:
        if v < 1:
            raise ValueError("grid needs at least one point")
        return v


class RunConfig(_Strict):
    """Top-level run description (versioned schema)."""

    version: int = SCHEMA_VERSION
    dealer: str = "middle"
    squeezing_budget_db: float = 15.0
    """Offline budget for the ideal asymptotic curves, in dB."""
    benchmarks: list[str] = Field(default_factory=lambda: ["plob", "squeezed", "coherent"])
    physical: PhysicalSettings = Field(default_factory=PhysicalSettings)
    finite: FiniteSettings = Field(default_factory=FiniteSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    mc_rounds: int = 10**6
    mc_scenarios: int = 20
    seed: int = 20240817
    optimizer_tolerance: float = 1e-4
    output: Optional[str] = None

    @field_validator("optimizer_tolerance")
    @classmethod
    def _tol(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("optimizer tolerance must lie in (0, 1)")
        return v

    @field_validator("version")
    @classmethod
    def _version(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v}; this build reads version {SCHEMA_VERSION}")
        return v

    @field_validator("dealer")
    @classmethod
    def _dealer(cls, v: str) -> str:
        if v not in ("middle", "edge"):
            raise ValueError("dealer must be 'middle' or 'edge'")
        return v

    @field_validator("benchmarks")
    @classmethod
    def _benchmarks(cls, v: list[str]) -> list[str]:
        allowed = {"plob", "squeezed", "coherent"}
        bad = [b for b in v if b not in allowed]
        if bad:
            raise ValueError(f"unknown benchmark(s) {bad}; choose from {sorted(allowed)}")
        return v

    def finite_params(self, m: float, key_probability: float = 0.9) -> FiniteSizeParams:
        """Finite-size parameters for one block size, device table applied."""
        return self.finite.params(
            m, key_probability, self.physical.energy_test_transmission
        )

    def asymptotic_budget(self) -> float:
        """Squeezing-parameter cap for the ideal curves."""
        return db_to_squeezing(self.squeezing_budget_db)


def _coerce(value: str):
    """Interpret an override value: JSON if it parses, raw string otherwise."""
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` assignments onto a config dict."""
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a non-section key")
        node[parts[-1]] = _coerce(value)
    return data


def load_config(path: Optional[str] = None, overrides: Optional[list[str]] = None) -> RunConfig:
    """Read, override, and validate a run configuration.

    ``path=None`` starts from the built-in defaults.  Raises
    :class:`ConfigError` with the JSON line/column or the dotted field path.
    """
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})"
            ) from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    if overrides:
        data = apply_overrides(data, list(overrides))
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{loc}: {err['msg']}")
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines)) from exc
