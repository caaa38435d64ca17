"""Expected parameter-estimation statistics for coarse-grained homodyne data.

The check measurements of a protocol round are binned on a finite-range grid
(:class:`BinGrid`).  This module computes what an honest run is expected to
observe on that grid: the rescaling factor aligning the two check variables
(:func:`rescale_factor`), the conditional spread between them
(:func:`conditional_check_variance`), the binned joint distribution
(:func:`joint_bin_probability`), its index moments (:func:`expected_moments`),
and the reconciliation leakage (:func:`ec_leakage`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import ndtr

from .gaussian import conditional_variance, quad_index
from .networks import ScenarioCM, TAG_QKD

__all__ = [
    "BinGrid",
    "MomentEstimates",
    "check_quadratures",
    "rescale_factor",
    "conditional_check_variance",
    "joint_bin_probability",
    "expected_moments",
    "key_variances",
    "ec_leakage",
]

#: dual-path agreement required between closed-form and Schur conditional variances
DUAL_PATH_TOL = 1e-10
#: conditional variance floor for the perfectly-correlated limit
_VAR_FLOOR = 1e-30


@dataclass(frozen=True)
class BinGrid:
    """Finite-range measurement grid: interior bins of width ``delta`` on
    (-range_m, range_m), with the two end bins extended to infinity.

    ``2 * range_m / delta`` must be an integer (the bin count).
    """

    delta: float
    range_m: float

    def __post_init__(self):
        if self.delta <= 0 or self.range_m <= 0:
            raise ValueError("bin resolution and range must be positive")
        count = 2.0 * self.range_m / self.delta
        if abs(count - round(count)) > 1e-9:
            raise ValueError(
                f"2M/delta = {count:.6g} is not an integer; "
                "choose a resolution that divides the range"
            )

    @property
    def n_bins(self) -> int:
        return int(round(2.0 * self.range_m / self.delta))

    def edges(self) -> np.ndarray:
        """Bin edges including the infinite outer ones (length n_bins + 1)."""
        inner = -self.range_m + self.delta * np.arange(1, self.n_bins)
        return np.concatenate([[-np.inf], inner, [np.inf]])

    def bin_indices(self, values: np.ndarray) -> np.ndarray:
        """1-based bin index of each value."""
        inner = -self.range_m + self.delta * np.arange(1, self.n_bins)
        return np.searchsorted(inner, values, side="left") + 1


@dataclass(frozen=True)
class MomentEstimates:
    """Expected binned-index moments of the check pair.

    ``expected_d`` and ``v_d`` are the first and raw second moments of the
    index distance |j - k|; ``v_a_pe`` and ``v_b_pe`` are raw second moments
    of the individual indices.  ``a`` is the rescaling factor applied to the
    partner's check values before binning.
    """

    expected_d: float
    v_d: float
    v_a_pe: float
    v_b_pe: float
    a: float


def check_quadratures(scenario: ScenarioCM, partner: str = "A") -> dict:
    """Check-round measurement assignment implied by the correlation structure.

    The dealer (mode B) keys on p and checks on x in both scenario families;
    the partner's check quadrature is whichever of theirs correlates with the
    dealer's x: p for the graph scenarios, x for the two-party comparator.
    ``partner`` selects which player performs the check ("A" or "C").
    """
    if scenario.tag == TAG_QKD and partner != "A":
        raise ValueError("the two-party comparator has a single partner, 'A'")
    partner_quad = "x" if scenario.tag == TAG_QKD else "p"
    return {
        "partner": (scenario.mode(partner), partner_quad),
        "dealer": (scenario.mode("B"), "x"),
    }


def rescale_factor(scenario: ScenarioCM, partner: str = "A") -> float:
    """Regression slope of the dealer's check quadrature on the partner's.

    Scaling the partner's check value by this factor centres it on the
    dealer's outcome: E[dealer | partner = q] = a q.  Zero when uncorrelated.
    """
    pair = check_quadratures(scenario, partner)
    i = quad_index(*pair["partner"])
    j = quad_index(*pair["dealer"])
    v_partner = scenario.cm[i, i]
    return float(scenario.cm[i, j] / v_partner)


def _graph_check_variance_analytic(scenario: ScenarioCM, partner: str = "A") -> float:
    """Closed-form V(partner p | dealer x) for the lossy graph distribution.

    Derived symbolically from the distribution circuit (tools directory);
    reduces to e^{-2r} for perfect devices and no loss.
    """
    p = scenario.params
    partner_dist = p.distance_a_km if partner == "A" else p.distance_c_km
    t_a = 10.0 ** (-0.02 * partner_dist)
    t_b = 10.0 ** (-0.02 * p.distance_b_km)
    c = p.eta_escape * p.eta_fibre
    d = p.eta_detector
    t_e = p.energy_test_transmission
    xi = p.excess_noise
    g = p.gate_gain
    e2r = math.exp(2.0 * p.squeezing)
    em2r = math.exp(-2.0 * p.squeezing)

    v_pa = t_a * d * (c * (g**2 * e2r + em2r - 1.0) - xi) + xi * d + 1.0
    v_xb = d * t_e * (e2r * t_b * c - t_b * (xi + c) + xi) + 1.0
    cov = g * e2r * c * d * math.sqrt(t_e * t_a * t_b)
    return v_pa - cov**2 / v_xb


def _qkd_check_variance_analytic(scenario: ScenarioCM) -> float:
    """Closed-form V(x_A | x_B) for the two-party comparator circuit."""
    p = scenario.params
    t_arm = 10.0 ** (-0.02 * p.distance_a_km)
    eta_a = p.eta_escape * p.eta_detector
    eta_c = p.eta_escape * p.eta_fibre
    d = p.eta_detector
    t_e = p.energy_test_transmission
    xi = p.excess_noise
    ch, sh = math.cosh(2.0 * p.squeezing), math.sinh(2.0 * p.squeezing)

    v_xa = eta_a * ch + 1.0 - eta_a
    v1 = eta_c * ch + 1.0 - eta_c
    v2 = t_arm * v1 + (1.0 - t_arm) * (1.0 + xi)
    v3 = t_arm * v2 + (1.0 - t_arm) * (1.0 + xi)
    v4 = t_e * v3 + 1.0 - t_e
    v_xb = d * v4 + 1.0 - d
    cov = math.sqrt(eta_a * eta_c * t_e * d) * t_arm * sh
    return v_xa - cov**2 / v_xb


def conditional_check_variance(scenario: ScenarioCM, partner: str = "A") -> float:
    """Residual variance of the partner's check given the dealer's check.

    Evaluated both by Schur complement on the scenario covariance and by the
    scenario family's closed form; a mismatch beyond 1e-10 means one of the
    two constructions has drifted and is raised as a hard error.
    """
    pair = check_quadratures(scenario, partner)
    schur = conditional_variance(scenario.cm, pair["partner"], [pair["dealer"]])
    if scenario.tag == TAG_QKD:
        closed = _qkd_check_variance_analytic(scenario)
    else:
        closed = _graph_check_variance_analytic(scenario, partner)
    if abs(schur - closed) > DUAL_PATH_TOL * max(1.0, abs(closed)):
        raise RuntimeError(
            f"conditional check variance mismatch: Schur {schur!r} vs "
            f"closed form {closed!r} for scenario {scenario.tag!r}"
        )
    return float(schur)


def joint_bin_probability(
    grid_a: BinGrid,
    grid_b: BinGrid,
    var_a: float,
    var_b: float,
    cov: float,
) -> np.ndarray:
    """Bin-by-bin probabilities of a zero-mean bivariate normal pair.

    Entry (j, k) is the mass in A-bin j and B-bin k.  Computed as an adaptive
    quadrature over each A-interval of the A-marginal density times the
    conditional B-interval mass, with semi-infinite end bins handled through
    exact normal CDF evaluation rather than truncation.
    """
    det = var_a * var_b - cov * cov
    if var_a <= 0.0 or var_b <= 0.0 or det < -1e-12 * var_a * var_b:
        raise ValueError("second-moment matrix is not positive semi-definite")

    slope = cov / var_a
    var_cond = max(var_b - cov * cov / var_a, _VAR_FLOOR)
    sd_cond = math.sqrt(var_cond)
    sd_a = math.sqrt(var_a)
    edges_b = grid_b.edges()

    def conditional_mass(q: float) -> np.ndarray:
        z = (edges_b - slope * q) / sd_cond
        cdf = ndtr(z)
        return np.diff(cdf) * math.exp(-0.5 * (q / sd_a) ** 2) / (sd_a * math.sqrt(2.0 * math.pi))

    rows = []
    edges_a = grid_a.edges()
    for j in range(grid_a.n_bins):
        row, _ = quad_vec(
            conditional_mass, edges_a[j], edges_a[j + 1], epsabs=1e-9, norm="max"
        )
        rows.append(row)
    return np.vstack(rows)


def expected_moments(scenario: ScenarioCM, fs, partner: str = "A") -> MomentEstimates:
    """Expected binned-index moments of the rescaled check pair.

    The partner's check variable is rescaled by :func:`rescale_factor` so it
    is centred on the dealer's; both are binned on the check grid
    (resolution ``fs.delta_p``, range ``fs.range_m``) and the index moments
    are taken over the joint bin distribution.
    """
    pair = check_quadratures(scenario, partner)
    i = quad_index(*pair["partner"])
    j = quad_index(*pair["dealer"])
    a = rescale_factor(scenario, partner)
    conditional_check_variance(scenario, partner)  # dual-path consistency guard
    var_a = a * a * scenario.cm[i, i]
    var_b = scenario.cm[j, j]
    cov = a * scenario.cm[i, j]

    grid = BinGrid(fs.delta_p, fs.range_m)
    prob = joint_bin_probability(grid, grid, var_a, var_b, cov)
    idx = np.arange(1, grid.n_bins + 1, dtype=float)
    dist = np.abs(idx[:, None] - idx[None, :])
    marginal_a = prob.sum(axis=1)
    marginal_b = prob.sum(axis=0)
    return MomentEstimates(
        expected_d=float(np.sum(dist * prob)),
        v_d=float(np.sum(dist**2 * prob)),
        v_a_pe=float(np.sum(idx**2 * marginal_a)),
        v_b_pe=float(np.sum(idx**2 * marginal_b)),
        a=a,
    )


def key_variances(scenario: ScenarioCM) -> tuple[float, float]:
    """Key-quadrature variance and its authorised conditional variance.

    The dealer keys on p; the authorised estimate conditions on both players'
    x quadratures for the graph scenarios and on the partner's p for the
    two-party comparator.
    """
    cm = scenario.cm
    key = (scenario.mode("B"), "p")
    if scenario.tag == TAG_QKD:
        guesses = [(scenario.mode("A"), "p")]
    else:
        guesses = [(scenario.mode("A"), "x"), (scenario.mode("C"), "x")]
    k = quad_index(*key)
    return float(cm[k, k]), float(conditional_variance(cm, key, guesses))


def ec_leakage(
    m: float, beta: float, delta_key: float, v_key: float, v_conditional: float
) -> float:
    """Bits disclosed for reconciliation of m Gaussian key values.

    Discrete key entropy minus the beta-discounted mutual information with
    the authorised estimate, both in the Gaussian approximation:
    (m/2) [ log2(2 pi e V / delta^2) - beta log2(V / V_cond) ].
    """
    if v_key <= 0.0 or v_conditional <= 0.0:
        raise ValueError("variances must be positive")
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"reconciliation efficiency must be in (0, 1], got {beta}")
    discrete_entropy = 0.5 * math.log2(2.0 * math.pi * math.e * v_key / delta_key**2)
    info = 0.5 * math.log2(v_key / v_conditional)
    return m * (discrete_entropy - beta * info)
