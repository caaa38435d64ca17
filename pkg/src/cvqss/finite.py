"""Composable finite-size secret fractions for binned homodyne protocols.

Builds the security-parameter machinery — complementarity constant
(:func:`q_constant`), correlation penalty (:func:`gamma_fn`), energy-test
tail bound (:func:`energy_gamma`), statistical slack (:func:`statistical_slack_mu`)
— and assembles them into per-network-use secret fractions for the
multi-party scheme (:func:`secret_fraction_qss`) and the two-party comparator
(:func:`secret_fraction_qkd`).  Any violated positivity gate yields a rate of
exactly zero together with a diagnostic code.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import spherical_jn

from .estimation import MomentEstimates, ec_leakage, expected_moments, key_variances
from .networks import ScenarioCM, TAG_QKD

__all__ = [
    "FiniteSizeParams",
    "BlockSizes",
    "FiniteRateResult",
    "GateFailure",
    "GATE_ENERGY_TEST",
    "GATE_EPSILON_MU",
    "GATE_KEY_LENGTH",
    "q_constant",
    "gamma_fn",
    "energy_gamma",
    "block_sizes",
    "solve_v",
    "statistical_slack_mu",
    "binary_entropy",
    "secret_fraction_qss",
    "secret_fraction_qkd",
    "optimize_key_probability",
]

GATE_ENERGY_TEST = "energy-test-positivity"
GATE_EPSILON_MU = "epsilon-mu-positivity"
GATE_KEY_LENGTH = "nonpositive-key-length"


class GateFailure(Exception):
    """A positivity gate of the finite-size bound failed.

    ``code`` identifies which gate; callers translate this into a zero rate
    with the code attached as the diagnostic reason.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class FiniteSizeParams:
    """Protocol and security constants of a finite-size evaluation.

    Security failure budgets (eps_smooth for secrecy smoothening, eps_correct
    for correctness, eps_one for the extractor, eps_mu for the statistical
    slack), detector resolutions for the key and check bases, detector range,
    energy-test threshold and tap transmission, reconciliation efficiency,
    key-round target m, key-basis probability p, and player count.
    """

    eps_smooth: float = 1e-9
    eps_correct: float = 1e-9
    eps_one: float = 4e-11
    eps_mu: float = 4e-20
    delta_key: float = 0.1
    delta_check: float = 0.4
    range_m: float = 25.0
    alpha: float = 28.0
    energy_test_transmission: float = 0.99
    beta: float = 0.98
    m: float = 1e12
    key_probability: float = 0.9
    players: int = 2

    # alias used by the estimation grid helpers
    @property
    def delta_p(self) -> float:
        return self.delta_check

    def __post_init__(self):
        for name in ("eps_smooth", "eps_correct", "eps_one", "eps_mu"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0,1), got {val}")
        if self.eps_one >= self.eps_smooth:
            raise ValueError("extractor budget must be smaller than the smoothing budget")
        for name in ("delta_key", "delta_check"):
            val = getattr(self, name)
            if not 0.0 < val < 2.0 * self.range_m:
                raise ValueError(f"{name} must lie in (0, 2*range), got {val}")
        count = 2.0 * self.range_m / self.delta_check
        if abs(count - round(count)) > 1e-9:
            raise ValueError(
                f"2M/delta_check = {count:.6g} is not an integer; "
                "choose a check resolution that divides the range"
            )
        if not 0.0 < self.key_probability < 1.0:
            raise ValueError("key probability must lie in (0,1)")
        if self.m <= 0:
            raise ValueError("key-round count must be positive")
        if self.players < 2:
            raise ValueError("at least two players required")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("reconciliation efficiency must lie in (0,1]")


@dataclass(frozen=True)
class BlockSizes:
    """Expected round accounting: network uses, key rounds, check rounds."""

    network_uses: float
    key_rounds: float
    check_rounds: float

    @property
    def total(self) -> float:
        return self.key_rounds + self.check_rounds


@dataclass(frozen=True)
class FiniteRateResult:
    """Finite-size rate in bits per network use with gate diagnostics.

    ``gate`` is None on success or one of the GATE_* codes when a positivity
    condition failed (in which case the rate is exactly zero).
    """

    rate: float
    key_length: float
    gate: str | None
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# security-machinery constants


def _prolate_eigencoeffs(c: float, size: int = 40) -> np.ndarray:
    """Legendre coefficients d_r (even r) of the lowest prolate angular mode.

    Solves the even-order three-term recurrence as a small tridiagonal
    eigenproblem and returns the eigenvector of the smallest eigenvalue,
    normalised so the coefficient sum is one.
    """
    mat = np.zeros((size, size))
    for i in range(size):
        r = 2 * i
        mat[i, i] = r * (r + 1) + c * c * (2 * r * (r + 1) - 1) / (
            (2 * r - 1) * (2 * r + 3)
        )
        if i + 1 < size:
            mat[i, i + 1] = (r + 2) * (r + 1) * c * c / ((2 * r + 3) * (2 * r + 5))
            rp = r + 2
            mat[i + 1, i] = rp * (rp - 1) * c * c / ((2 * rp - 3) * (2 * rp - 1))
    eigvals, eigvecs = np.linalg.eig(mat)
    k = np.argmin(eigvals.real)
    d = eigvecs[:, k].real
    return d / d.sum()


def _prolate_radial_one(c: float, tol: float = 1e-10) -> float:
    """Lowest radial prolate spheroidal function of the first kind at radius 1.

    Spherical-Bessel series over the Legendre coefficients, truncated when the
    running sum changes by less than ``tol``.
    """
    d = _prolate_eigencoeffs(c)
    orders = 2 * np.arange(d.size)
    terms = np.where(orders % 4 == 0, 1.0, -1.0) * d * spherical_jn(orders, c)
    total = 0.0
    for k, term in enumerate(terms):
        total += term
        if k > 2 and abs(term) < tol * max(1.0, abs(total)):
            break
    return total / d.sum()


def q_constant(delta_key: float, delta_check: float) -> float:
    """Complementarity constant (bits per round) of two binned quadratures.

    -log2 of (delta_key*delta_check/2pi) times the squared lowest radial
    prolate spheroidal function evaluated at the product resolution.  Grows
    as resolutions refine; this is the entropy budget each round contributes
    before correlation penalties.
    """
    if delta_key <= 0 or delta_check <= 0:
        raise ValueError("resolutions must be positive")
    u = delta_key * delta_check / 4.0
    if u > 0.5:
        raise ValueError(f"product resolution {u} outside validated series range")
    s = _prolate_radial_one(u)
    return -math.log2(delta_key * delta_check / (2.0 * math.pi) * s * s)


def gamma_fn(d: float) -> float:
    """Correlation penalty base: maps an average bin distance to the factor
    whose log2 is charged against the entropy budget.  Equals 1 at d = 0 and
    increases monotonically."""
    if d < 0:
        raise ValueError("distance must be non-negative")
    if d < 1e-12:
        return 1.0
    s = math.sqrt(1.0 + d * d)
    # d/(s-1) == (s+1)/d, numerically stable for small d
    return (d + s) * math.exp(d * math.log((s + 1.0) / d))


def energy_gamma(range_m: float, test_transmission: float, alpha: float) -> float:
    """Per-round tail probability bound of the heterodyne energy test.

    ``range_m`` is the detector range guaranteed by the test, ``alpha`` the
    abort threshold on the tapped beam.  Emits a warning when the scaled
    range does not exceed the threshold, where the bound is vacuous, but
    still returns the formula value.
    """
    if not 0.5 < test_transmission <= 1.0:
        raise ValueError("energy-test transmission must lie in (0.5, 1]")
    lam = ((2.0 * test_transmission - 1.0) / test_transmission) ** 2
    zeta = math.sqrt((1.0 - test_transmission) / (2.0 * test_transmission))
    if zeta * range_m <= alpha:
        warnings.warn(
            "energy-test threshold exceeds the scaled detector range; "
            "the tail bound is vacuous at this operating point",
            RuntimeWarning,
            stacklevel=2,
        )
    prefactor = (math.sqrt(1.0 + lam) + math.sqrt(1.0 + 1.0 / lam)) / 2.0
    exponent = -((zeta * range_m - alpha) ** 2) / (test_transmission * (1.0 + lam) / 2.0)
    return prefactor * math.exp(exponent)


# ---------------------------------------------------------------------------
# round accounting and statistical slack


def block_sizes(kind: str, p: float, m: float, players: int = 2) -> BlockSizes:
    """Expected round counts for a key target of m rounds at basis bias p.

    The multi-party scheme burns rounds whenever any of the players or the
    dealer picks the wrong basis (key rounds arrive at rate p^(players+1));
    the two-party comparator pre-agrees its check rounds so only the dealer's
    choice matters.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("basis probability must lie in (0,1)")
    if kind == "QSS":
        uses = m / p ** (players + 1)
        checks = (1.0 - p) ** 2 * uses
    elif kind == "QKD":
        uses = m / p
        checks = (1.0 - p) * uses
    else:
        raise ValueError(f"unknown protocol kind {kind!r}")
    return BlockSizes(network_uses=uses, key_rounds=m, check_rounds=checks)


def solve_v(
    eps_mu_target: float, m: float, t_j: float, range_m: float, budget: float
) -> float:
    """Smallest slack constant consistent with the statistical failure budget.

    ``budget`` is the squared remainder of the smoothing budget after the
    extractor and energy-test costs.  Inverts the tail equation for v; when
    the remaining budget cannot cover ``eps_mu_target`` the slack gate fails.
    """
    if budget <= eps_mu_target:
        raise GateFailure(
            GATE_EPSILON_MU,
            f"statistical budget {budget:.3e} cannot cover eps_mu {eps_mu_target:.3e}",
        )
    n_total = m + t_j
    return range_m**2 * math.sqrt(
        n_total * (t_j + 1.0) / (2.0 * m * t_j**2) * math.log(2.0 / (budget - eps_mu_target))
    )


def statistical_slack_mu(
    fs: FiniteSizeParams, blocks: BlockSizes, moments: MomentEstimates
) -> float:
    """Serfling-plus-Bernstein slack added to the observed bin distance.

    Raises :class:`GateFailure` when the energy-test or slack budgets cannot
    be met, which callers convert to a zero rate.
    """
    m, t_j = blocks.key_rounds, blocks.check_rounds
    n_total = blocks.total
    gamma_e = energy_gamma(fs.range_m, fs.energy_test_transmission, fs.alpha)
    remainder = fs.eps_smooth - fs.eps_one - 2.0 * math.sqrt(2.0 * m * gamma_e)
    if remainder <= 0.0:
        raise GateFailure(
            GATE_ENERGY_TEST,
            "energy-test cost exhausts the smoothing budget "
            f"(remainder {remainder:.3e})",
        )
    v = solve_v(fs.eps_mu, m, t_j, fs.range_m, remainder**2)

    d0 = moments.expected_d
    sigma_sq = (t_j / n_total) * (moments.v_d - (t_j / n_total) * d0 * d0) + (
        m / n_total
    ) * (moments.v_a_pe + moments.v_b_pe + 2.0 * v / fs.delta_check**2)
    log_term = math.log2(1.0 / fs.eps_mu)
    return (
        math.sqrt(2.0 * log_term) * n_total * math.sqrt(sigma_sq) / (t_j * math.sqrt(m))
        + (4.0 * (fs.range_m / fs.delta_check) * log_term / 3.0) * n_total / (m * t_j)
    )


def binary_entropy(p: float) -> float:
    """Shannon entropy of a bit with bias p; zero at both endpoints."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("probability must lie in [0,1]")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


# ---------------------------------------------------------------------------
# secret fractions


def _extractor_cost(fs: FiniteSizeParams) -> float:
    return math.log2(1.0 / (fs.eps_correct * fs.eps_one**2))


def secret_fraction_qss(
    scenario: ScenarioCM,
    fs: FiniteSizeParams,
    moments_by_partner: dict[str, MomentEstimates] | None = None,
) -> FiniteRateResult:
    """Finite-size secret bits per network use of the multi-party scheme.

    The entropy budget m*q is charged the worst correlation penalty over the
    untrusted singletons (each judged by the complementary player's check
    data), the reconciliation leakage toward the full player set, and the
    extractor cost.  Pre-computed moments can be supplied to amortise the
    binning integrals across a p-optimization.
    """
    if scenario.tag == TAG_QKD:
        raise ValueError("two-party comparator scenarios use secret_fraction_qkd")
    blocks = block_sizes("QSS", fs.key_probability, fs.m, fs.players)
    if moments_by_partner is None:
        moments_by_partner = {
            partner: expected_moments(scenario, fs, partner) for partner in ("A", "C")
        }
    q = q_constant(fs.delta_key, fs.delta_check)
    diagnostics: dict = {"q": q, "blocks": blocks}
    try:
        penalty = -math.inf
        for partner, moments in moments_by_partner.items():
            mu = statistical_slack_mu(fs, blocks, moments)
            term = math.log2(gamma_fn(moments.expected_d + mu))
            diagnostics[f"mu_{partner}"] = mu
            diagnostics[f"d0_{partner}"] = moments.expected_d
            if term > penalty:
                penalty = term
    except GateFailure as gate:
        return FiniteRateResult(0.0, 0.0, gate.code, diagnostics)

    v_key, v_cond = key_variances(scenario)
    ec_bits = ec_leakage(fs.m, fs.beta, fs.delta_key, v_key, v_cond)
    diagnostics.update(
        gamma_penalty=penalty, ec_bits_per_round=ec_bits / fs.m, v_key=v_key, v_cond=v_cond
    )
    key_length = fs.m * (q - penalty) - ec_bits - _extractor_cost(fs) + 2.0
    if key_length <= 0.0:
        return FiniteRateResult(0.0, key_length, GATE_KEY_LENGTH, diagnostics)
    return FiniteRateResult(key_length / blocks.network_uses, key_length, None, diagnostics)


def secret_fraction_qkd(
    scenario: ScenarioCM,
    fs: FiniteSizeParams,
    moments: MomentEstimates | None = None,
) -> FiniteRateResult:
    """Finite-size secret bits per network use of the two-party comparator.

    Same entropy accounting as the multi-party scheme with a single check
    partner, a pre-shared-key refresh penalty for the agreed check rounds,
    and a 1/2 prefactor because serving both players costs two uses.
    """
    if scenario.tag != TAG_QKD:
        raise ValueError("secret_fraction_qkd requires a two-party comparator scenario")
    blocks = block_sizes("QKD", fs.key_probability, fs.m)
    if moments is None:
        moments = expected_moments(scenario, fs)
    q = q_constant(fs.delta_key, fs.delta_check)
    diagnostics: dict = {"q": q, "blocks": blocks, "d0": moments.expected_d}
    try:
        mu = statistical_slack_mu(fs, blocks, moments)
    except GateFailure as gate:
        return FiniteRateResult(0.0, 0.0, gate.code, diagnostics)
    penalty = math.log2(gamma_fn(moments.expected_d + mu))

    v_key, v_cond = key_variances(scenario)
    ec_bits = ec_leakage(fs.m, fs.beta, fs.delta_key, v_key, v_cond)
    diagnostics.update(
        mu=mu, gamma_penalty=penalty, ec_bits_per_round=ec_bits / fs.m,
        v_key=v_key, v_cond=v_cond,
    )
    key_length = 0.5 * (
        fs.m * (q - penalty)
        - ec_bits
        - _extractor_cost(fs)
        + 2.0
        - binary_entropy(fs.key_probability) * blocks.network_uses
    )
    if key_length <= 0.0:
        return FiniteRateResult(0.0, key_length, GATE_KEY_LENGTH, diagnostics)
    return FiniteRateResult(key_length / blocks.network_uses, key_length, None, diagnostics)


def optimize_key_probability(
    rate_of_p, lo: float = 0.5, hi: float = 0.9999, tol: float = 1e-4
) -> tuple[float, float]:
    """Maximise a rate curve over the key-basis probability.

    A 20-point coarse grid seeds a golden-section refinement (the curves are
    smooth and unimodal in practice).  Returns (best p, best rate).
    """
    grid = np.linspace(lo, hi, 20)
    values = [rate_of_p(p) for p in grid]
    k = int(np.argmax(values))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = rate_of_p(x1), rate_of_p(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = rate_of_p(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = rate_of_p(x1)
    best_p = (a + b) / 2.0
    return best_p, rate_of_p(best_p)
