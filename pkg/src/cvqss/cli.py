"""Command-line client for the rate service.

Subcommands call the in-process HTTP app, so every result the CLI prints is
exactly what the service would return over the network.  Tables are emitted
as versioned CSV (stdout or ``--output``).

Exit codes: 0 success; 2 configuration error; 3 numerical gate failure (the
failing Theorem-2 style gate is named on stderr); 4 oracle-validation
failure.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Optional

import warnings

import click
import httpx

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from .config import ConfigError
from .service import app
from .sweeps import SCHEME_NAMES, Table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_ORACLE = 4


def _load_config_dict(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _post(path: str, payload: dict, server: Optional[str] = None) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            response = client.post(path, json=payload)
    else:
        with TestClient(app) as client:
            response = client.post(path, json=payload)
    if response.status_code == 422:
        detail = response.json().get("detail", "invalid request")
        raise ConfigError(detail if isinstance(detail, str) else json.dumps(detail))
    response.raise_for_status()
    return response.json()


def _rebuild_table(payload: dict) -> Table:
    rows = tuple(
        tuple(math.nan if cell is None else cell for cell in row)
        for row in payload["rows"]
    )
    return Table(payload["kind"], tuple(payload["columns"]), rows)


def _emit(table: Table, output: Optional[str]) -> None:
    text = table.to_csv()
    if output:
        Path(output).write_text(text)
        click.echo(f"wrote {output}", err=True)
    else:
        click.echo(text, nl=False)


def _common(fn):
    fn = click.option(
        "--config", "-c", "config_path", type=click.Path(), default=None,
        help="JSON run configuration (defaults reproduce the reference curves).",
    )(fn)
    fn = click.option(
        "--set", "-s", "overrides", multiple=True, metavar="KEY=VALUE",
        help="Override a config key (dotted paths, JSON-typed values).",
    )(fn)
    fn = click.option(
        "--output", "-o", default=None, help="Write the CSV table to this path."
    )(fn)
    fn = click.option(
        "--server", default=None, metavar="URL",
        help="Talk to a running service instead of the in-process app.",
    )(fn)
    return fn


def _payload(config_path: Optional[str], overrides: tuple[str, ...]) -> dict:
    return {"config": _load_config_dict(config_path), "overrides": list(overrides)}


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ConfigError as exc:
            click.echo(f"configuration error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)


@click.group(cls=_Group)
def main() -> None:
    """Secret-sharing rate calculator for lossy bottleneck networks."""


@main.group()
def rates() -> None:
    """Rate-versus-distance curves."""


@rates.command("asymptotic")
@_common
def rates_asymptotic(config_path, overrides, output, server) -> None:
    """Asymptotic rates and benchmarks on the ideal network."""
    result = _post("/v1/rates/asymptotic", _payload(config_path, overrides), server)
    _emit(_rebuild_table(result), output)


@rates.command("finite")
@_common
def rates_finite(config_path, overrides, output, server) -> None:
    """Composable finite-size secret fractions with realistic devices."""
    result = _post("/v1/rates/finite", _payload(config_path, overrides), server)
    _emit(_rebuild_table(result["table"]), output)
    if result["gate_failure"]:
        click.echo(f"numerical gate failure: {result['gate_failure']}", err=True)
        sys.exit(EXIT_GATE)


@main.command()
@click.argument("scheme_a", type=click.Choice(SCHEME_NAMES))
@click.argument("scheme_b", type=click.Choice(SCHEME_NAMES))
@_common
def crossover(scheme_a, scheme_b, config_path, overrides, output, server) -> None:
    """Distances where two schemes' rates cross on the sweep axis."""
    payload = _payload(config_path, overrides)
    payload.update(scheme_a=scheme_a, scheme_b=scheme_b)
    result = _post("/v1/crossover", payload, server)
    _emit(_rebuild_table(result["table"]), output)
    if result["message"]:
        click.echo(result["message"], err=True)


@main.command("advantage-region")
@click.option("--grid", "emit_grid", is_flag=True, help="Emit the raw rate grid instead of boundaries.")
@_common
def advantage_region_cmd(emit_grid, config_path, overrides, output, server) -> None:
    """Squeezing-versus-distance region where the scheme beats benchmarks."""
    endpoint = "/v1/advantage-grid" if emit_grid else "/v1/advantage-region"
    result = _post(endpoint, _payload(config_path, overrides), server)
    _emit(_rebuild_table(result), output)


@main.command()
@_common
def optimize(config_path, overrides, output, server) -> None:
    """Optimal squeezing and key-round probability per distance."""
    result = _post("/v1/optimize", _payload(config_path, overrides), server)
    _emit(_rebuild_table(result), output)


@main.command("mc-validate")
@_common
def mc_validate_cmd(config_path, overrides, output, server) -> None:
    """Check analytic statistics against the seeded sampling oracle."""
    result = _post("/v1/mc-validate", _payload(config_path, overrides), server)
    _emit(_rebuild_table(result["table"]), output)
    verdict = "ok" if result["passed"] else "FAILED"
    click.echo(
        f"oracle validation {verdict}: max |z| = {result['max_abs_z']:.3f} "
        f"(threshold {result['threshold']:g})",
        err=True,
    )
    if not result["passed"]:
        sys.exit(EXIT_ORACLE)


if __name__ == "__main__":
    main()
