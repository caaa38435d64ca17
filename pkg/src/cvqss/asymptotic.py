"""Asymptotic secret-sharing and benchmark key rates.

All rates are bits per network use.  The secret-sharing rate for the
two-player threshold protocol is

    K = max(0, I(key : authorized estimate) - max_j chi(key : Eve + player j))

where the dealer's key quadrature and each party's guessing quadrature follow
from the graph nullifiers, and every Holevo term is evaluated from the reduced
party covariance via purity of the global state (all ancillas belong to the
adversary).  Benchmarks: the point-to-point bipartite protocols run per pair
(':func:`bqss_rate`), and the repeaterless bound :func:`plob`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import (
    beamsplitter,
    condition_heterodyne,
    condition_homodyne,
    conditional_variance,
    embed,
    partial_trace,
    quad_index,
    squeezer,
    von_neumann_entropy,
)
from .graphs import budget_solve
from .networks import (
    NetworkParams,
    ScenarioCM,
    TAG_QKD,
    distance_to_transmission,
)

__all__ = [
    "RateResult",
    "mutual_info_homodyne",
    "mutual_info_heterodyne",
    "holevo_information",
    "kss_asymptotic",
    "kss_optimal",
    "bqss_rate",
    "plob",
    "plob_lossy_transmission",
    "golden_section_max",
    "DEALER_MIDDLE",
    "DEALER_EDGE",
]

DEALER_MIDDLE = "middle"
DEALER_EDGE = "edge"

#: conditional variances below this are treated as noiseless (infinite info)
_ZERO_VARIANCE = 1e-300


@dataclass
class RateResult:
    """A key rate with its information-theoretic breakdown.

    ``rate`` is floored at zero; ``raw_rate`` keeps the sign.  ``holevo`` maps
    each untrusted-party label to its Holevo term.
    """

    rate: float
    raw_rate: float
    mutual_info: float
    holevo: dict[str, float] = field(default_factory=dict)
    key_variance: float = math.nan
    conditional_key_variance: float = math.nan
    details: dict[str, float] = field(default_factory=dict)


def mutual_info_homodyne(
    cm: np.ndarray, key: tuple[int, str], guesses: list[tuple[int, str]]
) -> float:
    """Mutual information between a homodyned key quadrature and joint estimates.

    :param cm: covariance matrix of the party modes.
    :param key: (mode, quadrature) measured to produce the key.
    :param guesses: quadratures measured by the estimating parties.
    :returns: 0.5 log2(V_key / V_key|guesses) in bits; ``math.inf`` when the
        conditional variance vanishes.
    """
    v_key = cm[quad_index(*key), quad_index(*key)]
    v_cond = conditional_variance(cm, key, guesses)
    if v_cond <= _ZERO_VARIANCE:
        return math.inf
    return float(0.5 * np.log2(v_key / v_cond))


def mutual_info_heterodyne(
    cm: np.ndarray,
    key: tuple[int, str],
    guess_mode: int,
    key_heterodyned: bool = False,
) -> float:
    """Mutual information when one or both parties heterodyne.

    Each heterodyned quadrature carries one extra vacuum unit.  With only the
    estimating party heterodyning:
    I = 0.5 log2(V_key / (V_key - C^2/(V_guess + 1))); with the key side
    heterodyned as well, V_key gains a unit in both numerator and denominator.
    """
    k = quad_index(*key)
    g = quad_index(guess_mode, key[1])
    extra = 1.0 if key_heterodyned else 0.0
    v_key = cm[k, k] + extra
    v_cond = v_key - cm[k, g] ** 2 / (cm[g, g] + 1.0)
    if v_cond <= _ZERO_VARIANCE:
        return math.inf
    return float(0.5 * np.log2(v_key / v_cond))


def holevo_information(
    cm: np.ndarray,
    dealer: int,
    key_quad: str,
    trusted: int,
    key_detection: str = "homodyne",
) -> float:
    """Holevo information of the adversary plus one untrusted player.

    With the global state pure (ancillas adversarial), the adversary-side
    entropy equals the entropy of the complementary subsystem, so both terms
    are computed on the party covariance ``cm``:

    chi = S(dealer + trusted) - S(trusted | dealer key outcome).

    ``key_detection`` selects how the key mode is read out; heterodyne reads
    both quadratures (``key_quad`` is then ignored) and both conditionings are
    rank-one, so the conditional entropy is outcome-independent either way.
    """
    n = cm.shape[0] // 2
    joint = partial_trace(cm, sorted({dealer, trusted}))
    prior = von_neumann_entropy(joint)
    if key_detection == "heterodyne":
        cond_cm, _ = condition_heterodyne(cm, dealer)
    elif key_detection == "homodyne":
        cond_cm, _ = condition_homodyne(cm, dealer, key_quad)
    else:
        raise ValueError(
            f"key_detection must be 'homodyne' or 'heterodyne', got {key_detection!r}"
        )
    remaining = [m for m in range(n) if m != dealer]
    reduced = partial_trace(cond_cm, [remaining.index(trusted)])
    return float(prior - von_neumann_entropy(reduced))


def _qss_roles(scenario: ScenarioCM, dealer: str) -> dict:
    """Key/guess quadrature assignment implied by the line-graph nullifiers."""
    a, b, c = (scenario.mode(x) for x in ("A", "B", "C"))
    if dealer == DEALER_MIDDLE:
        return {
            "dealer": b,
            "key_quad": "p",
            "guesses": [(a, "x"), (c, "x")],
            "untrusted": {"A": (a, c), "C": (c, a)},  # untrusted -> (them, trusted)
        }
    if dealer == DEALER_EDGE:
        return {
            "dealer": a,
            "key_quad": "x",
            "guesses": [(b, "p"), (c, "x")],
            "untrusted": {"B": (b, c), "C": (c, b)},
        }
    raise ValueError(f"dealer must be '{DEALER_MIDDLE}' or '{DEALER_EDGE}', got {dealer!r}")


def kss_asymptotic(scenario: ScenarioCM, dealer: str = DEALER_MIDDLE) -> RateResult:
    """Asymptotic secret-sharing rate of a three-party scenario.

    The authorized pair estimates the dealer's key quadrature jointly; each
    single player is the untrusted party of one Holevo term.
    """
    roles = _qss_roles(scenario, dealer)
    cm = scenario.cm
    key = (roles["dealer"], roles["key_quad"])
    info = mutual_info_homodyne(cm, key, roles["guesses"])
    holevo = {
        label: holevo_information(cm, roles["dealer"], roles["key_quad"], trusted)
        for label, (_, trusted) in roles["untrusted"].items()
    }
    raw = info - max(holevo.values())
    k = quad_index(*key)
    return RateResult(
        rate=max(0.0, raw),
        raw_rate=raw,
        mutual_info=info,
        holevo=holevo,
        key_variance=float(cm[k, k]),
        conditional_key_variance=conditional_variance(cm, key, roles["guesses"]),
    )


def golden_section_max(fn, lo: float, hi: float, tol: float = 1e-4) -> tuple[float, float, int]:
    """Maximize a unimodal function on [lo, hi] by golden-section search.

    Returns (argmax, max, evaluations).
    """
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    evals = 2
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
        evals += 1
    x = 0.5 * (a + b)
    return x, fn(x), evals + 1


def seeded_golden_max(
    fn, lo: float, hi: float, tol: float = 1e-4, points: int = 24
) -> tuple[float, float, int]:
    """Coarse scan followed by golden-section refinement around the best point.

    Robust to objectives that are flat over part of the interval (for
    example zero-clipped rates), where a bare golden section can converge
    onto the plateau and miss a narrow interior maximum.
    """
    xs = np.linspace(lo, hi, points)
    values = [fn(float(x)) for x in xs]
    best = int(np.argmax(values))
    a = float(xs[max(best - 1, 0)])
    b = float(xs[min(best + 1, points - 1)])
    x, fx, evals = golden_section_max(fn, a, b, tol)
    return x, fx, evals + points


def kss_optimal(
    scenario_builder,
    dealer: str,
    r_max: float,
    tol: float = 1e-4,
) -> tuple[RateResult, float, float]:
    """Optimize the source squeezing under an offline-squeezing budget.

    ``scenario_builder(r, g)`` must return a :class:`ScenarioCM`; the gate
    gain is always budget-saturated via :func:`graphs.budget_solve`.
    Optimizes the unclipped rate so the search stays informative past the
    distance where the protocol stops paying.  Returns (best result, r*, g*).
    """

    def rate_of(r: float) -> float:
        return kss_asymptotic(
            scenario_builder(r, budget_solve(r, r_max)), dealer
        ).raw_rate

    r_star, _, _ = seeded_golden_max(rate_of, 0.0, r_max, tol)
    g_star = budget_solve(r_star, r_max)
    return kss_asymptotic(scenario_builder(r_star, g_star), dealer), r_star, g_star


def _bipartite_lossy_cm(r_max: float, transmission_sq: float) -> np.ndarray:
    """Two-mode squeezed source with one arm through intensity loss T^2."""
    n = 3
    op = embed(squeezer(r_max), [0], n)
    op = embed(squeezer(-r_max), [1], n) @ op
    op = embed(beamsplitter(0.5), [0, 1], n) @ op
    op = embed(beamsplitter(transmission_sq), [1, 2], n) @ op
    return partial_trace(op @ op.T, [0, 1])


def bqss_rate(
    r_max: float,
    distance_km: float,
    protocol: str = "squeezed",
    n_uses: int = 2,
) -> RateResult:
    """Bipartite benchmark rate per network use (dealer links each player).

    The transmitted mode crosses two arms (T^2) and carries the key under
    reverse reconciliation.  ``protocol`` selects the encoding/readout pair:
    'squeezed' encodes one quadrature and both ends homodyne; 'coherent'
    encodes both quadratures and both ends heterodyne.  The bipartite key is
    shared across ``n_uses`` network uses.
    """
    t_sq = distance_to_transmission(distance_km) ** 2
    cm = _bipartite_lossy_cm(r_max, t_sq)
    key = (1, "x")
    if protocol == "squeezed":
        info = mutual_info_homodyne(cm, key, [(0, "x")])
        chi = holevo_information(cm, dealer=1, key_quad="x", trusted=0)
        v_key = float(cm[2, 2])
        v_cond = float(cm[2, 2] - cm[0, 2] ** 2 / cm[0, 0])
    elif protocol == "coherent":
        info = mutual_info_heterodyne(cm, key, 0, key_heterodyned=True)
        chi = holevo_information(
            cm, dealer=1, key_quad="x", trusted=0, key_detection="heterodyne"
        )
        v_key = float(cm[2, 2] + 1.0)
        v_cond = float(cm[2, 2] + 1.0 - cm[0, 2] ** 2 / (cm[0, 0] + 1.0))
    else:
        raise ValueError(f"protocol must be 'squeezed' or 'coherent', got {protocol!r}")
    raw = (info - chi) / n_uses
    return RateResult(
        rate=max(0.0, raw),
        raw_rate=raw,
        mutual_info=info,
        holevo={"E": chi},
        key_variance=v_key,
        conditional_key_variance=v_cond,
    )


def bqss_optimal(
    r_max: float, distance_km: float, protocol: str, n_uses: int = 2, tol: float = 1e-4
) -> tuple[RateResult, float]:
    """Bipartite benchmark with the two-mode squeezing optimized up to the cap."""

    def rate_of(r: float) -> float:
        return bqss_rate(r, distance_km, protocol, n_uses).raw_rate

    r_star, _, _ = seeded_golden_max(rate_of, 0.0, r_max, tol)
    return bqss_rate(r_star, distance_km, protocol, n_uses), r_star


def plob(effective_transmission: float, n_uses: int = 1) -> float:
    """Repeaterless secret-key capacity -log2(1 - T) per network use.

    Returns ``math.inf`` at unit transmission.
    """
    if not 0.0 <= effective_transmission <= 1.0:
        raise ValueError("transmission must lie in [0, 1]")
    if effective_transmission >= 1.0:
        return math.inf
    return float(-np.log2(1.0 - effective_transmission) / n_uses)


def plob_lossy_transmission(params: NetworkParams) -> float:
    """Effective transmission for the device-aware repeaterless benchmark.

    Counts fibre coupling once and escape/detector efficiency per hop:
    eta_fibre (T eta_detector eta_escape)^2 over the two arms.
    """
    t_arm = distance_to_transmission(params.distance_a_km)
    return params.eta_fibre * (t_arm * params.eta_detector * params.eta_escape) ** 2
