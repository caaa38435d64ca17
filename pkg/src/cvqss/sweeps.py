"""Sweep engine: rate curves, crossovers, advantage contours, optimization.

Every operation maps a :class:`~cvqss.config.RunConfig` to a :class:`Table` —
a versioned, unit-labelled column layout that serializes to gnuplot-friendly
CSV.  Output is deterministic: a given config produces byte-identical tables,
whether points are evaluated serially or by a worker pool (``CVQSS_WORKERS``),
because workers only ever fill pre-assigned slots.

The energy-test tail-bound warning raised at very conservative thresholds is
suppressed inside sweep workers; hard gate failures still surface in the
``*_gate`` columns.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from .asymptotic import (
    DEALER_EDGE,
    DEALER_MIDDLE,
    bqss_optimal,
    kss_asymptotic,
    kss_optimal,
    plob,
    plob_lossy_transmission,
    seeded_golden_max,
)
from .config import RunConfig
from .estimation import expected_moments
from .finite import (
    GATE_ENERGY_TEST,
    GATE_EPSILON_MU,
    optimize_key_probability,
    secret_fraction_qkd,
    secret_fraction_qss,
)
from .graphs import budget_solve
from .montecarlo import compare_to_analytic
from .networks import (
    NetworkParams,
    distance_to_transmission,
    hub_out_cm,
    experimental_cm,
    qkd_cm,
)

__all__ = [
    "TABLE_FORMAT",
    "SENTINEL",
    "Table",
    "CrossoverScan",
    "SCHEME_NAMES",
    "distance_axis",
    "run_curve",
    "find_crossover",
    "crossover_table",
    "scheme_rate_fn",
    "advantage_grid",
    "advantage_region",
    "optimize_params",
    "mc_validate",
    "hard_gate_failure",
]

#: table format tag written as the first CSV line
TABLE_FORMAT = "cvqss-table v1"
#: emitted for boundaries that do not exist on the queried axis
SENTINEL = math.nan

_HARD_GATES = (GATE_ENERGY_TEST, GATE_EPSILON_MU)


@dataclass(frozen=True)
class Table:
    """A computed result table: versioned kind, unit-labelled columns, rows."""

    kind: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_csv(self) -> str:
        lines = [f"# {TABLE_FORMAT} kind={self.kind}", ",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_payload(self) -> dict:
        """JSON-safe dict (non-finite numbers become null)."""
        return {
            "format": TABLE_FORMAT,
            "kind": self.kind,
            "columns": list(self.columns),
            "rows": [
                [v if isinstance(v, str) or math.isfinite(v) else None for v in row]
                for row in self.rows
            ],
        }


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    return f"{value:.12g}"


def _worker_count() -> int:
    raw = os.environ.get("CVQSS_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_points(fn: Callable, items: Sequence) -> list:
    """Evaluate independent points, gathering results in axis order."""
    if _worker_count() <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=_worker_count()) as pool:
        return list(pool.map(fn, items))


def _quiet() -> warnings.catch_warnings:
    ctx = warnings.catch_warnings()
    ctx.__enter__()
    warnings.simplefilter("ignore", RuntimeWarning)
    return ctx


def distance_axis(config: RunConfig) -> list[float]:
    """Inclusive distance grid from the sweep settings (may be empty)."""
    s = config.sweep
    span = s.distance_stop_km - s.distance_start_km
    if span < -1e-12:
        return []
    count = int(math.floor(span / s.distance_step_km + 1e-9)) + 1
    return [round(s.distance_start_km + i * s.distance_step_km, 12) for i in range(count)]


# ---------------------------------------------------------------------------
# asymptotic curves


def _ideal_builder(distance_km: float) -> Callable[[float, float], object]:
    def build(r: float, g: float):
        return hub_out_cm(
            NetworkParams(
                squeezing=r,
                gate_gain=g,
                distance_a_km=distance_km,
                distance_b_km=distance_km,
                distance_c_km=distance_km,
            )
        )

    return build


def _asymptotic_point(config: RunConfig, distance_km: float) -> tuple:
    ctx = _quiet()
    try:
        r_max = config.asymptotic_budget()
        tol = config.optimizer_tolerance
        build = _ideal_builder(distance_km)
        mid, r_mid, g_mid = kss_optimal(build, DEALER_MIDDLE, r_max, tol)
        edge, r_edge, g_edge = kss_optimal(build, DEALER_EDGE, r_max, tol)
        sq, r_sq = bqss_optimal(r_max, distance_km, "squeezed", tol=tol)
        coh, r_coh = bqss_optimal(r_max, distance_km, "coherent", tol=tol)
        t_arm = distance_to_transmission(distance_km)
        return (
            distance_km,
            mid.rate,
            edge.rate,
            sq.rate,
            coh.rate,
            plob(t_arm**2, n_uses=2),
            r_mid,
            g_mid,
            r_edge,
            g_edge,
            r_sq,
            r_coh,
        )
    finally:
        ctx.__exit__(None, None, None)


_ASYMPTOTIC_COLUMNS = (
    "distance_km",
    "qss_middle_bits_per_use",
    "qss_edge_bits_per_use",
    "bqss_squeezed_bits_per_use",
    "bqss_coherent_bits_per_use",
    "plob_bits_per_use",
    "optimal_r_middle",
    "optimal_gain_middle",
    "optimal_r_edge",
    "optimal_gain_edge",
    "optimal_r_bqss_squeezed",
    "optimal_r_bqss_coherent",
)


# ---------------------------------------------------------------------------
# finite-size curves


def _block_label(m: float) -> str:
    exponent = math.log10(m)
    if abs(exponent - round(exponent)) < 1e-9:
        return f"1e{int(round(exponent))}"
    return f"{m:g}"


def _finite_qss_at(config: RunConfig, scenario, moments, fs0):
    """(rate result, p) for the multiparty scheme, optimizing p if unset."""
    fixed_p = config.finite.key_probability

    def run(p: float):
        return secret_fraction_qss(scenario, replace(fs0, key_probability=p), moments)

    if fixed_p is not None:
        return run(fixed_p), fixed_p
    p_star, _ = optimize_key_probability(lambda p: run(p).rate)
    return run(p_star), p_star


def _finite_qkd_at(config: RunConfig, scenario, moments, fs0):
    fixed_p = config.finite.key_probability

    def run(p: float):
        return secret_fraction_qkd(scenario, replace(fs0, key_probability=p), moments)

    if fixed_p is not None:
        return run(fixed_p), fixed_p
    p_star, _ = optimize_key_probability(lambda p: run(p).rate)
    return run(p_star), p_star


def _finite_scenarios(config: RunConfig, distance_km: float):
    """Realistic QSS and comparator scenarios at one distance.

    The source squeezing/gain for the multiparty scheme follow the ideal
    asymptotic optimum under the inferred offline budget; the two-party
    comparator transmits at the full budget.
    """
    budget = config.physical.source_budget()
    _, r_star, g_star = kss_optimal(
        _ideal_builder(distance_km),
        config.dealer,
        budget,
        config.optimizer_tolerance,
    )
    qss_scenario = experimental_cm(
        config.physical.network_params(distance_km, r_star, g_star)
    )
    qkd_scenario = qkd_cm(config.physical.network_params(distance_km, budget))
    return qss_scenario, qkd_scenario, r_star, g_star


def _finite_point(config: RunConfig, distance_km: float) -> tuple:
    ctx = _quiet()
    try:
        qss_scenario, qkd_scenario, r_star, g_star = _finite_scenarios(
            config, distance_km
        )
        fs_probe = config.finite_params(config.finite.block_sizes[0])
        moments_a = expected_moments(qss_scenario, fs_probe, "A")
        symmetric = (
            qss_scenario.params.distance_a_km == qss_scenario.params.distance_c_km
        )
        moments_c = (
            moments_a if symmetric else expected_moments(qss_scenario, fs_probe, "C")
        )
        qss_moments = {"A": moments_a, "C": moments_c}
        qkd_moments = expected_moments(qkd_scenario, fs_probe)

        row: list = [distance_km, r_star, g_star]
        for m in config.finite.block_sizes:
            fs0 = config.finite_params(m)
            qss, p_qss = _finite_qss_at(config, qss_scenario, qss_moments, fs0)
            qkd, p_qkd = _finite_qkd_at(config, qkd_scenario, qkd_moments, fs0)
            row += [
                qss.rate,
                p_qss,
                qss.gate or "",
                qkd.rate,
                p_qkd,
                qkd.gate or "",
            ]
        row.append(
            plob(plob_lossy_transmission(qss_scenario.params), n_uses=2)
        )
        return tuple(row)
    finally:
        ctx.__exit__(None, None, None)


def _finite_columns(config: RunConfig) -> tuple[str, ...]:
    cols = ["distance_km", "optimal_r", "optimal_gain"]
    for m in config.finite.block_sizes:
        tag = _block_label(m)
        cols += [
            f"qss_m{tag}_bits_per_use",
            f"qss_m{tag}_key_probability",
            f"qss_m{tag}_gate",
            f"qkd_m{tag}_bits_per_use",
            f"qkd_m{tag}_key_probability",
            f"qkd_m{tag}_gate",
        ]
    cols.append("plob_lossy_bits_per_use")
    return tuple(cols)


def run_curve(config: RunConfig, kind: str = "asymptotic") -> Table:
    """Rate curve over the configured distance axis.

    ``kind`` selects the asymptotic family (ideal network, budgeted
    squeezing, benchmarks) or the finite-size family (realistic devices,
    per-block-size secret fractions with optimized key-round probability).
    """
    axis = distance_axis(config)
    if kind == "asymptotic":
        rows = _map_points(partial(_asymptotic_point, config), axis)
        return Table("asymptotic-rates", _ASYMPTOTIC_COLUMNS, tuple(rows))
    if kind == "finite":
        rows = _map_points(partial(_finite_point, config), axis)
        return Table("finite-rates", _finite_columns(config), tuple(rows))
    raise ValueError(f"curve kind must be 'asymptotic' or 'finite', got {kind!r}")


# ---------------------------------------------------------------------------
# crossovers


@dataclass(frozen=True)
class CrossoverScan:
    """Distances where two rate curves exchange order on a scan grid."""

    crossovers: tuple[float, ...]
    message: Optional[str] = None


def find_crossover(
    rate_a: Callable[[float], float],
    rate_b: Callable[[float], float],
    distances: Sequence[float],
    tol: float = 0.01,
) -> CrossoverScan:
    """Bisect every sign change of (rate_a - rate_b) on the given grid.

    A crossing is a transition between strictly-positive and non-positive
    difference; each is refined to ``tol`` kilometres.  With no transition
    the scan reports "no crossover in range"; several transitions are all
    returned.
    """
    grid = list(distances)
    if len(grid) < 2:
        raise ValueError("crossover scan needs at least two grid points")
    diffs = [rate_a(d) - rate_b(d) for d in grid]
    found = []
    for i in range(len(grid) - 1):
        lo_pos, hi_pos = diffs[i] > 0, diffs[i + 1] > 0
        if lo_pos == hi_pos:
            continue
        lo, hi = grid[i], grid[i + 1]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if (rate_a(mid) - rate_b(mid) > 0) == lo_pos:
                lo = mid
            else:
                hi = mid
        found.append(0.5 * (lo + hi))
    if not found:
        return CrossoverScan((), "no crossover in range")
    return CrossoverScan(tuple(found))


SCHEME_NAMES = (
    "qss-middle",
    "qss-edge",
    "bqss-squeezed",
    "bqss-coherent",
    "plob",
    "plob-lossy",
    "finite-qss",
    "finite-qkd",
)


def scheme_rate_fn(config: RunConfig, name: str) -> Callable[[float], float]:
    """Rate-versus-distance callable for a named scheme.

    Asymptotic schemes live on the ideal network at the configured budget;
    finite schemes run the realistic pipeline at the first configured block
    size.  Used by the crossover scan so every reported distance is
    reproducible from the underlying module calls.
    """
    r_max = config.asymptotic_budget()
    tol = config.optimizer_tolerance

    if name in ("qss-middle", "qss-edge"):
        dealer = DEALER_MIDDLE if name == "qss-middle" else DEALER_EDGE

        def qss(d: float) -> float:
            res, _, _ = kss_optimal(_ideal_builder(d), dealer, r_max, tol)
            return res.rate

        return qss
    if name in ("bqss-squeezed", "bqss-coherent"):
        protocol = name.split("-")[1]

        def bqss(d: float) -> float:
            res, _ = bqss_optimal(r_max, d, protocol, tol=tol)
            return res.rate

        return bqss
    if name == "plob":
        return lambda d: plob(distance_to_transmission(d) ** 2, n_uses=2)
    if name == "plob-lossy":

        def lossy(d: float) -> float:
            params = config.physical.network_params(d, 0.0)
            return plob(plob_lossy_transmission(params), n_uses=2)

        return lossy
    if name in ("finite-qss", "finite-qkd"):
        m = config.finite.block_sizes[0]

        def finite(d: float) -> float:
            ctx = _quiet()
            try:
                qss_sc, qkd_sc, _, _ = _finite_scenarios(config, d)
                fs0 = config.finite_params(m)
                if name == "finite-qss":
                    mom = expected_moments(qss_sc, fs0, "A")
                    result, _ = _finite_qss_at(
                        config, qss_sc, {"A": mom, "C": mom}, fs0
                    )
                else:
                    mom = expected_moments(qkd_sc, fs0)
                    result, _ = _finite_qkd_at(config, qkd_sc, mom, fs0)
                return result.rate
            finally:
                ctx.__exit__(None, None, None)

        return finite
    raise ValueError(f"unknown scheme {name!r}; choose from {SCHEME_NAMES}")


def crossover_table(config: RunConfig, scheme_a: str, scheme_b: str) -> Table:
    """Crossover distances between two named schemes on the sweep axis."""
    axis = distance_axis(config)
    scan = find_crossover(
        scheme_rate_fn(config, scheme_a), scheme_rate_fn(config, scheme_b), axis
    )
    rows = tuple((scheme_a, scheme_b, d) for d in scan.crossovers)
    if not rows and scan.message:
        rows = ((scheme_a, scheme_b, SENTINEL),)
    return Table(
        "crossovers", ("scheme_a", "scheme_b", "crossover_km"), rows
    )


# ---------------------------------------------------------------------------
# advantage region


def _squeezing_axis(config: RunConfig) -> list[float]:
    s = config.sweep
    return [float(x) for x in np.linspace(s.squeezing_db_min, s.squeezing_db_max, s.squeezing_points)]


def _advantage_distances(config: RunConfig) -> list[float]:
    s = config.sweep
    return [float(x) for x in np.linspace(s.distance_start_km, s.distance_stop_km, s.distance_points)]


def _kss_at_budget(config: RunConfig, squeezing_db: float) -> Callable[[float], float]:
    from .graphs import db_to_squeezing

    r_max = db_to_squeezing(squeezing_db)
    tol = config.optimizer_tolerance

    def rate(d: float) -> float:
        res, _, _ = kss_optimal(_ideal_builder(d), config.dealer, r_max, tol)
        return res.rate

    return rate


def _benchmark_fn(config: RunConfig, name: str, squeezing_db: float) -> Callable[[float], float]:
    from .graphs import db_to_squeezing

    if name == "plob":
        return lambda d: plob(distance_to_transmission(d) ** 2, n_uses=2)
    r_max = db_to_squeezing(squeezing_db)
    tol = config.optimizer_tolerance

    def rate(d: float) -> float:
        res, _ = bqss_optimal(r_max, d, name, tol=tol)
        return res.rate

    return rate


def _grid_row(config: RunConfig, squeezing_db: float) -> list[tuple]:
    kss = _kss_at_budget(config, squeezing_db)
    benches = {b: _benchmark_fn(config, b, squeezing_db) for b in config.benchmarks}
    out = []
    for d in _advantage_distances(config):
        k = kss(d)
        out.append((squeezing_db, d, k, *(benches[b](d) for b in config.benchmarks)))
    return out


def advantage_grid(config: RunConfig) -> Table:
    """Raw rate grid over (squeezing dB x distance km) for contouring."""
    rows_nested = _map_points(partial(_grid_row, config), _squeezing_axis(config))
    cols = ("squeezing_db", "distance_km", "kss_bits_per_use") + tuple(
        f"{b}_bits_per_use" for b in config.benchmarks
    )
    return Table(
        "advantage-grid", cols, tuple(row for group in rows_nested for row in group)
    )


def _region_interval(
    kss: Callable[[float], float],
    bench: Callable[[float], float],
    distances: Sequence[float],
    tol: float = 0.01,
) -> tuple[float, float]:
    """First maximal interval where the multiparty rate exceeds a benchmark.

    Boundaries are bisected to ``tol``; an interval clipped by the axis keeps
    the axis endpoint, and a missing region is a (sentinel, sentinel) pair.
    """
    scan = find_crossover(kss, bench, distances, tol)
    positive = [kss(d) - bench(d) > 0 for d in distances]
    if not any(positive):
        return (SENTINEL, SENTINEL)
    crossings = list(scan.crossovers)
    start = distances[0] if positive[0] else (crossings.pop(0) if crossings else SENTINEL)
    stop = crossings.pop(0) if crossings else SENTINEL
    if stop is SENTINEL and positive[-1]:
        stop = distances[-1]
    return (start, stop)


def _memoized(fn: Callable[[float], float]) -> Callable[[float], float]:
    cache: dict[float, float] = {}

    def wrapped(x: float) -> float:
        if x not in cache:
            cache[x] = fn(x)
        return cache[x]

    return wrapped


def _region_row(config: RunConfig, squeezing_db: float) -> tuple:
    distances = _advantage_distances(config)
    kss = _memoized(_kss_at_budget(config, squeezing_db))
    cells: list[float] = [squeezing_db]
    for name in config.benchmarks:
        bench = _memoized(_benchmark_fn(config, name, squeezing_db))
        cells.extend(_region_interval(kss, bench, distances))
    return tuple(cells)


def advantage_region(config: RunConfig) -> Table:
    """Advantage-region boundaries per squeezing level.

    For each level and each configured benchmark, the start/stop distances of
    the first interval where the multiparty rate beats the benchmark, bisected
    to 0.01 km; absent regions carry the sentinel.
    """
    rows = _map_points(partial(_region_row, config), _squeezing_axis(config))
    cols = ["squeezing_db"]
    for name in config.benchmarks:
        cols += [f"advantage_start_{name}_km", f"advantage_stop_{name}_km"]
    return Table("advantage-region", tuple(cols), tuple(rows))


# ---------------------------------------------------------------------------
# parameter optimization


def _optimize_point(config: RunConfig, distance_km: float) -> tuple:
    ctx = _quiet()
    try:
        r_max = config.asymptotic_budget()
        tol = config.optimizer_tolerance
        build = _ideal_builder(distance_km)

        def rate_of(r: float) -> float:
            return kss_asymptotic(
                build(r, budget_solve(r, r_max)), config.dealer
            ).raw_rate

        r_star, best, iterations = seeded_golden_max(rate_of, 0.0, r_max, tol)
        best = max(0.0, best)
        qss_sc, qkd_sc, _, _ = _finite_scenarios(config, distance_km)
        fs0 = config.finite_params(config.finite.block_sizes[0])
        mom = expected_moments(qss_sc, fs0, "A")
        qss, p_qss = _finite_qss_at(config, qss_sc, {"A": mom, "C": mom}, fs0)
        qkd, p_qkd = _finite_qkd_at(
            config, qkd_sc, expected_moments(qkd_sc, fs0), fs0
        )
        return (
            distance_km,
            r_star,
            budget_solve(r_star, r_max),
            best,
            float(iterations),
            p_qss,
            qss.rate,
            p_qkd,
            qkd.rate,
        )
    finally:
        ctx.__exit__(None, None, None)


_OPTIMIZE_COLUMNS = (
    "distance_km",
    "optimal_r",
    "optimal_gain",
    "asymptotic_rate_bits_per_use",
    "golden_iterations",
    "optimal_p_qss",
    "finite_qss_bits_per_use",
    "optimal_p_qkd",
    "finite_qkd_bits_per_use",
)


def optimize_params(config: RunConfig) -> Table:
    """Optimal source squeezing and key-round probability per distance.

    Squeezing is the ideal-network asymptotic optimum under the configured
    budget (with golden-section convergence metadata); the key-round
    probabilities optimize the realistic finite-size schemes at the first
    configured block size.
    """
    rows = _map_points(partial(_optimize_point, config), distance_axis(config))
    return Table("optimal-params", _OPTIMIZE_COLUMNS, tuple(rows))


# ---------------------------------------------------------------------------
# Monte Carlo validation


def _mc_scenario(config: RunConfig, rng: np.random.Generator):
    """Random realistic scenario drawn inside the module preconditions."""
    kind = rng.integers(0, 2)
    params = NetworkParams(
        squeezing=float(rng.uniform(0.2, 2.0)),
        gate_gain=float(rng.uniform(0.2, 1.5)),
        distance_a_km=float(rng.uniform(0.1, 4.0)),
        distance_b_km=float(rng.uniform(0.1, 4.0)),
        distance_c_km=float(rng.uniform(0.1, 4.0)),
        eta_escape=float(rng.uniform(0.9, 1.0)),
        eta_fibre=float(rng.uniform(0.9, 1.0)),
        eta_detector=float(rng.uniform(0.9, 1.0)),
        excess_noise=float(rng.uniform(0.0, 0.01)),
        energy_test_transmission=config.physical.energy_test_transmission,
    )
    if kind == 0:
        return experimental_cm(params), "realistic-qss"
    return qkd_cm(params), "realistic-qkd"


def _mc_point(config: RunConfig, index: int) -> tuple:
    ctx = _quiet()
    try:
        rng = np.random.Generator(np.random.Philox(key=(config.seed << 64) + index))
        scenario, family = _mc_scenario(config, rng)
        fs0 = config.finite_params(config.finite.block_sizes[0])
        report = compare_to_analytic(
            scenario, fs0, config.mc_rounds, seed=config.seed + index
        )
        return (
            float(index),
            family,
            *report.moment_z,
            report.slope_z,
            report.max_abs_z,
        )
    finally:
        ctx.__exit__(None, None, None)


_MC_COLUMNS = (
    "scenario_index",
    "family",
    "z_expected_d",
    "z_v_d",
    "z_v_a_pe",
    "z_v_b_pe",
    "z_slope",
    "max_abs_z",
)


def mc_validate(config: RunConfig) -> Table:
    """Z-score the analytic moments against seeded sampling.

    Draws ``mc_scenarios`` random realistic scenarios (both families) and
    compares analytic and empirical binned moments plus the rescaling slope
    at ``mc_rounds`` samples each.
    """
    rows = _map_points(partial(_mc_point, config), list(range(config.mc_scenarios)))
    return Table("mc-validation", _MC_COLUMNS, tuple(rows))


# ---------------------------------------------------------------------------
# result inspection for exit codes


def hard_gate_failure(table: Table) -> Optional[str]:
    """Gate name when every finite-rate point died on a hard Theorem-2 gate.

    Returns None when any point produced an ordinary rate (including a
    zero-rate key-length gate, which is a regime, not a failure).
    """
    gate_cols = [i for i, c in enumerate(table.columns) if c.endswith("_gate")]
    if not gate_cols or not table.rows:
        return None
    seen: set[str] = set()
    for row in table.rows:
        for i in gate_cols:
            gate = row[i]
            if gate in _HARD_GATES:
                seen.add(gate)
            else:
                return None
    return sorted(seen)[0] if seen else None
