"""Covariance-matrix builders for graph states sent over lossy star networks.

Geometry: a central hub connects three parties A, B, C by fibre arms of given
lengths; the hub either prepares the three-mode line graph and sends all modes
out ("hub-out"), or the first player prepares locally and routes through the
hub ("player-in").  The realistic model adds escape/fibre/detector
inefficiencies, thermal excess noise in each arm, and an energy-test tap on
the middle mode.  A two-party one-way comparator ("qkd") sends half of a
two-mode squeezed state across the same two fibre hops.

Each builder returns a :class:`ScenarioCM` carrying the reduced covariance on
the labelled party modes plus the full covariance with every ancilla, so tests
can check both against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .gaussian import beamsplitter, cz_gate, embed, evolve, partial_trace, squeezer

__all__ = [
    "NetworkParams",
    "ScenarioCM",
    "TAG_HUB_OUT",
    "TAG_PLAYER_IN",
    "TAG_REALISTIC",
    "TAG_QKD",
    "FIBRE_DB_PER_KM",
    "distance_to_transmission",
    "hub_out_cm",
    "player_in_cm",
    "experimental_cm",
    "experimental_cm_closed_form",
    "qkd_cm",
    "inferred_squeezing",
]

TAG_HUB_OUT = "hub-out-ideal"
TAG_PLAYER_IN = "player-in-ideal"
TAG_REALISTIC = "realistic-qss"
TAG_QKD = "realistic-qkd"

#: standard telecom fibre attenuation used throughout
FIBRE_DB_PER_KM = 0.2


def distance_to_transmission(distance_km: float) -> float:
    """Intensity transmission of a fibre arm: 0.2 dB/km attenuation."""
    if distance_km < 0:
        raise ValueError(f"distance must be non-negative, got {distance_km}")
    return 10.0 ** (-FIBRE_DB_PER_KM * distance_km / 10.0)


@dataclass(frozen=True)
class NetworkParams:
    """Physical parameters of one network configuration.

    Args:
        squeezing: effective graph squeezing r of the source.
        gate_gain: controlled-phase gain g of the graph edges (ignored by qkd).
        distance_a_km / distance_b_km / distance_c_km: fibre arm lengths.
        eta_escape: source escape efficiency.
        eta_fibre: fibre coupling efficiency.
        eta_detector: homodyne detection efficiency.
        excess_noise: thermal excess noise (variance above vacuum) per arm.
        energy_test_transmission: tap ratio kept by the dealer's energy test.
    """

    squeezing: float
    gate_gain: float = 0.0
    distance_a_km: float = 0.0
    distance_b_km: float = 0.0
    distance_c_km: float = 0.0
    eta_escape: float = 1.0
    eta_fibre: float = 1.0
    eta_detector: float = 1.0
    excess_noise: float = 0.0
    energy_test_transmission: float = 1.0

    def transmissions(self) -> tuple[float, float, float]:
        """Per-arm fibre transmissions (T_A, T_B, T_C)."""
        return (
            distance_to_transmission(self.distance_a_km),
            distance_to_transmission(self.distance_b_km),
            distance_to_transmission(self.distance_c_km),
        )

    def swapped_ac(self) -> "NetworkParams":
        """Same network with the outer arms A and C exchanged."""
        return replace(
            self,
            distance_a_km=self.distance_c_km,
            distance_c_km=self.distance_a_km,
        )


@dataclass
class ScenarioCM:
    """A prepared-and-distributed state, reduced to the party modes.

    Attributes:
        tag: scenario identifier (one of the TAG_* constants).
        cm: covariance matrix on the labelled party modes (XPXP).
        labels: party mode names matching ``cm``.
        params: the network parameters that produced it.
        full_cm: covariance of the complete mode set, ancillas included.
        full_labels: names matching ``full_cm``.
    """

    tag: str
    cm: np.ndarray
    labels: tuple[str, ...]
    params: NetworkParams
    full_cm: np.ndarray = field(repr=False, default=None)
    full_labels: tuple[str, ...] = ()

    def mode(self, label: str) -> int:
        """Index of a party mode in ``cm``."""
        return self.labels.index(label)


def _three_mode_source(params: NetworkParams, n_modes: int) -> np.ndarray:
    """Line-graph source (squeezers then both gates) embedded in n_modes."""
    r, g = params.squeezing, params.gate_gain
    total = np.eye(2 * n_modes)
    for mode in (0, 1, 2):
        total = embed(squeezer(-r), [mode], n_modes) @ total
    total = embed(cz_gate(g), [0, 1], n_modes) @ total
    total = embed(cz_gate(g), [1, 2], n_modes) @ total
    return total


def hub_out_cm(params: NetworkParams) -> ScenarioCM:
    """Line graph prepared at the hub, every mode sent out through its arm.

    Modes: A, B, C plus one vacuum loss port per arm.
    """
    t_a, t_b, t_c = params.transmissions()
    n = 6
    op = _three_mode_source(params, n)
    op = embed(beamsplitter(t_a), [0, 3], n) @ op
    op = embed(beamsplitter(t_b), [1, 4], n) @ op
    op = embed(beamsplitter(t_c), [2, 5], n) @ op
    full = op @ op.T
    return ScenarioCM(
        tag=TAG_HUB_OUT,
        cm=partial_trace(full, [0, 1, 2]),
        labels=("A", "B", "C"),
        params=params,
        full_cm=full,
        full_labels=("A", "B", "C", "VA", "VB", "VC"),
    )


def player_in_cm(params: NetworkParams) -> ScenarioCM:
    """First player prepares, routes through the hub, hub links the rest.

    The hub entangles its local pair (B-C) while A's mode is in transit, then
    applies the A-B gate to the mode that arrives; because the A arm is lossy
    before that gate, the distributed state genuinely differs from hub-out.
    B and C travel outward afterwards.
    """
    t_a, t_b, t_c = params.transmissions()
    r, g = params.squeezing, params.gate_gain
    n = 6
    op = np.eye(2 * n)
    for mode in (0, 1, 2):
        op = embed(squeezer(-r), [mode], n) @ op
    op = embed(cz_gate(g), [1, 2], n) @ op
    op = embed(beamsplitter(t_a), [0, 3], n) @ op
    op = embed(cz_gate(g), [0, 1], n) @ op
    op = embed(beamsplitter(t_b), [1, 4], n) @ op
    op = embed(beamsplitter(t_c), [2, 5], n) @ op
    full = op @ op.T
    return ScenarioCM(
        tag=TAG_PLAYER_IN,
        cm=partial_trace(full, [0, 1, 2]),
        labels=("A", "B", "C"),
        params=params,
        full_cm=full,
        full_labels=("A", "B", "C", "VA", "VB", "VC"),
    )


def experimental_cm(params: NetworkParams) -> ScenarioCM:
    """Hub-out distribution with inefficiencies, thermal arms and energy tap.

    Mode layout of the full state:
    [A, B, C, Be, V1, V2, V3, V4, V5, V6, EA, EB, EC] where V1-V3 purify the
    coupling loss, EA-EC are the thermal arm environments, Be is the dealer's
    energy-test tap, and V4-V6 purify the detectors.  The reduced state keeps
    (A, B, C); everything else is conceded to the adversary.
    """
    t_a, t_b, t_c = params.transmissions()
    eta_c = params.eta_escape * params.eta_fibre
    eta_d = params.eta_detector
    t_e = params.energy_test_transmission
    xi = params.excess_noise

    labels = ("A", "B", "C", "Be", "V1", "V2", "V3", "V4", "V5", "V6", "EA", "EB", "EC")
    n = len(labels)
    idx = {name: k for k, name in enumerate(labels)}

    init = np.eye(2 * n)
    for env in ("EA", "EB", "EC"):
        k = idx[env]
        init[2 * k, 2 * k] = init[2 * k + 1, 2 * k + 1] = 1.0 + xi

    op = _three_mode_source(params, n)
    op = embed(beamsplitter(eta_c), [idx["A"], idx["V1"]], n) @ op
    op = embed(beamsplitter(eta_c), [idx["B"], idx["V2"]], n) @ op
    op = embed(beamsplitter(eta_c), [idx["C"], idx["V3"]], n) @ op
    op = embed(beamsplitter(t_a), [idx["A"], idx["EA"]], n) @ op
    op = embed(beamsplitter(t_b), [idx["B"], idx["EB"]], n) @ op
    op = embed(beamsplitter(t_c), [idx["C"], idx["EC"]], n) @ op
    op = embed(beamsplitter(t_e), [idx["B"], idx["Be"]], n) @ op
    op = embed(beamsplitter(eta_d), [idx["A"], idx["V4"]], n) @ op
    op = embed(beamsplitter(eta_d), [idx["B"], idx["V5"]], n) @ op
    op = embed(beamsplitter(eta_d), [idx["C"], idx["V6"]], n) @ op
    full = evolve(init, op)
    return ScenarioCM(
        tag=TAG_REALISTIC,
        cm=partial_trace(full, [0, 1, 2]),
        labels=("A", "B", "C"),
        params=params,
        full_cm=full,
        full_labels=labels,
    )


def experimental_cm_closed_form(params: NetworkParams) -> np.ndarray:
    """Closed-form reduced covariance of :func:`experimental_cm`.

    Independent expression used to cross-validate the circuit construction;
    the two must agree to 1e-10 for any physical parameter set.
    """
    t_a, t_b, t_c = params.transmissions()
    c = params.eta_escape * params.eta_fibre
    d = params.eta_detector
    t_e = params.energy_test_transmission
    xi = params.excess_noise
    g = params.gate_gain
    e2r = np.exp(2.0 * params.squeezing)
    em2r = np.exp(-2.0 * params.squeezing)

    def edge_block(t_arm: float) -> np.ndarray:
        xx = d * (e2r * t_arm * c - t_arm * (xi + c) + xi) + 1.0
        pp = t_arm * d * (c * (g**2 * e2r + em2r - 1.0) - xi) + xi * d + 1.0
        return np.diag([xx, pp])

    mid_xx = d * t_e * (e2r * t_b * c - t_b * (xi + c) + xi) + 1.0
    mid_pp = d * t_e * (t_b * c * (2.0 * g**2 * e2r + em2r - 1.0) + xi - xi * t_b) + 1.0
    gamma_a = edge_block(t_a)
    gamma_b = np.diag([mid_xx, mid_pp])
    gamma_c = edge_block(t_c)

    c_ab = g * e2r * c * d * np.sqrt(t_e) * np.sqrt(t_a * t_b)
    c_bc = g * e2r * c * d * np.sqrt(t_e) * np.sqrt(t_b * t_c)
    c_ac_pp = g**2 * e2r * c * d * np.sqrt(t_a * t_c)

    cross_ab = np.array([[0.0, c_ab], [c_ab, 0.0]])
    cross_bc = np.array([[0.0, c_bc], [c_bc, 0.0]])
    cross_ac = np.array([[0.0, 0.0], [0.0, c_ac_pp]])

    return np.block(
        [
            [gamma_a, cross_ab, cross_ac],
            [cross_ab.T, gamma_b, cross_bc],
            [cross_ac.T, cross_bc.T, gamma_c],
        ]
    )


def qkd_cm(params: NetworkParams) -> ScenarioCM:
    """Two-party comparator: half a two-mode squeezed state over two fibre hops.

    Alice keeps one mode (detected directly: escape then detector loss); the
    other crosses two arms of length ``distance_a_km`` with thermal noise,
    the dealer's energy tap, then detector loss.  ``squeezing`` is the
    two-mode squeezing parameter.
    """
    t_arm = distance_to_transmission(params.distance_a_km)
    eta_s = params.eta_escape
    eta_c = params.eta_escape * params.eta_fibre
    eta_d = params.eta_detector
    t_e = params.energy_test_transmission
    xi = params.excess_noise
    r = params.squeezing

    labels = ("A", "B", "Be", "V1", "V2", "V3", "V4", "EA", "EB")
    n = len(labels)
    idx = {name: k for k, name in enumerate(labels)}

    init = np.eye(2 * n)
    for env in ("EA", "EB"):
        k = idx[env]
        init[2 * k, 2 * k] = init[2 * k + 1, 2 * k + 1] = 1.0 + xi

    op = embed(squeezer(r), [idx["A"]], n)
    op = embed(squeezer(-r), [idx["B"]], n) @ op
    op = embed(beamsplitter(0.5), [idx["A"], idx["B"]], n) @ op
    op = embed(beamsplitter(eta_s), [idx["A"], idx["V1"]], n) @ op
    op = embed(beamsplitter(eta_c), [idx["B"], idx["V2"]], n) @ op
    op = embed(beamsplitter(t_arm), [idx["B"], idx["EA"]], n) @ op
    op = embed(beamsplitter(t_arm), [idx["B"], idx["EB"]], n) @ op
    op = embed(beamsplitter(t_e), [idx["B"], idx["Be"]], n) @ op
    op = embed(beamsplitter(eta_d), [idx["A"], idx["V4"]], n) @ op
    op = embed(beamsplitter(eta_d), [idx["B"], idx["V3"]], n) @ op
    full = evolve(init, op)
    return ScenarioCM(
        tag=TAG_QKD,
        cm=partial_trace(full, [0, 1]),
        labels=("A", "B"),
        params=params,
        full_cm=full,
        full_labels=labels,
    )


def inferred_squeezing(measured_db: float, eta_total: float) -> float:
    """Source squeezing parameter from a lossy squeezing measurement.

    The measured squeezed-quadrature variance 10^{-dB/10} is modelled as
    eta_total e^{-2r} + (1 - eta_total); inverts for r.
    """
    if not 0.0 < eta_total <= 1.0:
        raise ValueError(f"eta_total must be in (0, 1], got {eta_total}")
    v_meas = 10.0 ** (-measured_db / 10.0)
    net = (v_meas - (1.0 - eta_total)) / eta_total
    if net <= 0.0:
        raise ValueError(
            f"measured variance {v_meas:.4g} is below the loss floor "
            f"{1.0 - eta_total:.4g}; no squeezing parameter reproduces it"
        )
    return float(-0.5 * np.log(net))
