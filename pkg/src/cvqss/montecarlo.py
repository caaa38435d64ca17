"""Seeded Monte Carlo sampling of measurement rounds.

Brute-force oracle for the analytic statistics in :mod:`cvqss.estimation`:
draws homodyne outcomes directly from the Gaussian distribution a covariance
matrix implies (:func:`sample_rounds`), bins them on the same grids the
protocol uses, and reports the empirical index moments with standard errors
(:func:`empirical_moments`).  :func:`compare_to_analytic` packages the whole
round trip for one scenario into z-scores.

Sampling is chunked, and each chunk's generator is keyed by (seed, chunk
index) alone, so a batch is bit-identical no matter how many workers produce
it or in which order the chunks complete.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimation import (
    BinGrid,
    MomentEstimates,
    check_quadratures,
    expected_moments,
    rescale_factor,
)
from .gaussian import quad_index
from .networks import ScenarioCM

__all__ = [
    "CHUNK_ROUNDS",
    "SampleBatch",
    "MomentStandardErrors",
    "EmpiricalMoments",
    "OracleComparison",
    "sample_rounds",
    "sample_check_rounds",
    "empirical_moments",
    "regression_slope",
    "compare_to_analytic",
]

#: rounds generated per independently-seeded chunk
CHUNK_ROUNDS = 65536

_MAX_SEED = 2**64


@dataclass(frozen=True)
class SampleBatch:
    """Outcomes of ``count`` measurement rounds.

    ``outcomes`` has one row per round and one column per sampled quadrature,
    in the order the assignment listed them.
    """

    seed: int
    count: int
    outcomes: np.ndarray


@dataclass(frozen=True)
class MomentStandardErrors:
    """Standard errors of the four empirical index moments."""

    expected_d: float
    v_d: float
    v_a_pe: float
    v_b_pe: float


@dataclass(frozen=True)
class EmpiricalMoments:
    """Empirical counterpart of :class:`~cvqss.estimation.MomentEstimates`."""

    estimates: MomentEstimates
    errors: MomentStandardErrors
    count: int


@dataclass(frozen=True)
class OracleComparison:
    """Analytic-vs-sampled statistics for one scenario.

    ``moment_z`` holds the four moment z-scores in the order (E[d], V_d,
    V_A^PE, V_B^PE); ``slope_z`` is the through-origin regression check of
    the rescaling factor.  ``max_abs_z`` is the worst of all five.
    """

    analytic: MomentEstimates
    empirical: EmpiricalMoments
    moment_z: tuple[float, float, float, float]
    slope: float
    slope_se: float
    slope_z: float
    max_abs_z: float


def _chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    """Counter-based generator for one chunk, independent of worker layout."""
    return np.random.Generator(np.random.Philox(key=(seed << 64) + chunk_index))


def sample_rounds(
    cm: np.ndarray,
    quadratures: list[tuple[int, str]],
    count: int,
    seed: int,
) -> SampleBatch:
    """Draw i.i.d. rounds of the selected quadratures' joint distribution.

    ``quadratures`` lists (mode index, "x"|"p") pairs, one per sampled mode;
    the reduced covariance of those rows defines a zero-mean normal, sampled
    through its Cholesky factor.  Raises ValueError if the reduction is not
    positive definite.
    """
    if count <= 0:
        raise ValueError("sample count must be positive")
    if not 0 <= seed < _MAX_SEED:
        raise ValueError("seed must fit in 64 bits")
    rows = [quad_index(mode, quad) for mode, quad in quadratures]
    if len(set(rows)) != len(rows):
        raise ValueError("assignment selects the same quadrature twice")
    reduced = np.asarray(cm, dtype=float)[np.ix_(rows, rows)]
    try:
        chol = np.linalg.cholesky(reduced)
    except np.linalg.LinAlgError as exc:
        raise ValueError("reduced covariance is not positive definite") from exc

    outcomes = np.empty((count, len(rows)))
    for chunk_index in range(math.ceil(count / CHUNK_ROUNDS)):
        start = chunk_index * CHUNK_ROUNDS
        stop = min(start + CHUNK_ROUNDS, count)
        gen = _chunk_generator(seed, chunk_index)
        normals = gen.standard_normal((stop - start, len(rows)))
        outcomes[start:stop] = normals @ chol.T
    return SampleBatch(seed=seed, count=count, outcomes=outcomes)


def sample_check_rounds(
    scenario: ScenarioCM, count: int, seed: int, partner: str = "A"
) -> SampleBatch:
    """Sample the (partner, dealer) check pair of a scenario.

    Column 0 is the partner's check quadrature (unscaled), column 1 the
    dealer's.
    """
    pair = check_quadratures(scenario, partner)
    return sample_rounds(
        scenario.cm, [pair["partner"], pair["dealer"]], count, seed
    )


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))


def empirical_moments(
    batch: SampleBatch, grid_a: BinGrid, grid_b: BinGrid, a: float
) -> EmpiricalMoments:
    """Bin a sampled check pair and estimate the four index moments.

    The partner column is rescaled by ``a`` before binning, mirroring the
    analytic pipeline; moments are raw (uncentred) index moments, and each
    standard error is the sample deviation of the per-round statistic over
    the square root of the round count.
    """
    idx_a = grid_a.bin_indices(a * batch.outcomes[:, 0]).astype(float)
    idx_b = grid_b.bin_indices(batch.outcomes[:, 1]).astype(float)
    dist = np.abs(idx_a - idx_b)

    e_d, se_d = _mean_and_se(dist)
    v_d, se_vd = _mean_and_se(dist**2)
    v_a, se_va = _mean_and_se(idx_a**2)
    v_b, se_vb = _mean_and_se(idx_b**2)
    return EmpiricalMoments(
        estimates=MomentEstimates(
            expected_d=e_d, v_d=v_d, v_a_pe=v_a, v_b_pe=v_b, a=a
        ),
        errors=MomentStandardErrors(
            expected_d=se_d, v_d=se_vd, v_a_pe=se_va, v_b_pe=se_vb
        ),
        count=batch.count,
    )


def regression_slope(batch: SampleBatch) -> tuple[float, float]:
    """Through-origin regression of the dealer column on the partner column.

    Returns (slope, standard error); the slope estimates the rescaling
    factor from raw outcomes, independently of any binning.
    """
    partner = batch.outcomes[:, 0]
    dealer = batch.outcomes[:, 1]
    sxx = float(partner @ partner)
    slope = float(partner @ dealer) / sxx
    residuals = dealer - slope * partner
    resid_var = float(residuals @ residuals) / (batch.count - 1)
    return slope, math.sqrt(resid_var / sxx)


def compare_to_analytic(
    scenario: ScenarioCM, fs, count: int, seed: int, partner: str = "A"
) -> OracleComparison:
    """Sample one scenario's check pair and z-score it against the analytics.

    ``fs`` supplies the grid parameters (``delta_p``, ``range_m``).  Each
    moment z-score is (empirical - analytic) / standard error; the slope
    z-score checks the rescaling factor against the unbinned regression.
    """
    analytic = expected_moments(scenario, fs, partner)
    batch = sample_check_rounds(scenario, count, seed, partner)
    grid = BinGrid(fs.delta_p, fs.range_m)
    empirical = empirical_moments(batch, grid, grid, analytic.a)

    est, err = empirical.estimates, empirical.errors
    moment_z = tuple(
        (getattr(est, name) - getattr(analytic, name)) / getattr(err, name)
        for name in ("expected_d", "v_d", "v_a_pe", "v_b_pe")
    )
    slope, slope_se = regression_slope(batch)
    slope_z = (slope - rescale_factor(scenario, partner)) / slope_se
    max_abs_z = max(abs(z) for z in (*moment_z, slope_z))
    return OracleComparison(
        analytic=analytic,
        empirical=empirical,
        moment_z=moment_z,
        slope=slope,
        slope_se=slope_se,
        slope_z=slope_z,
        max_abs_z=max_abs_z,
    )
