"""Shared builders for randomized test inputs."""

from __future__ import annotations

import numpy as np

from cvqss.gaussian import beamsplitter, cz_gate, embed, evolve, squeezer, vacuum_cm
from cvqss.networks import NetworkParams


def random_symplectic(rng: np.random.Generator, n_modes: int, gates: int = 8) -> np.ndarray:
    """Random symplectic built from squeezer/beamsplitter/CZ embeds."""
    op = np.eye(2 * n_modes)
    for _ in range(gates):
        kind = rng.integers(0, 3)
        if kind == 0 or n_modes == 1:
            gate = squeezer(rng.uniform(-1.5, 1.5))
            modes = [int(rng.integers(0, n_modes))]
        else:
            pair = rng.choice(n_modes, size=2, replace=False)
            modes = [int(pair[0]), int(pair[1])]
            if kind == 1:
                gate = beamsplitter(rng.uniform(0.05, 0.95))
            else:
                gate = cz_gate(rng.uniform(-1.5, 1.5))
        op = embed(gate, modes, n_modes) @ op
    return op


def random_pure_cm(rng: np.random.Generator, n_modes: int) -> np.ndarray:
    """Random pure-state covariance (symplectic acting on vacuum)."""
    return evolve(vacuum_cm(n_modes), random_symplectic(rng, n_modes))


def random_physical_cm(rng: np.random.Generator, n_modes: int) -> np.ndarray:
    """Random physical covariance (pure core plus optional classical noise)."""
    cm = random_pure_cm(rng, n_modes)
    if rng.random() < 0.5:
        noise = rng.uniform(0.0, 0.5, size=2 * n_modes)
        cm = cm + np.diag(noise)
    return cm


def random_network_params(rng: np.random.Generator, symmetric: bool = False) -> NetworkParams:
    """Random in-domain network parameters for property sweeps."""
    d_a = float(rng.uniform(0.1, 4.0))
    d_c = d_a if symmetric else float(rng.uniform(0.1, 4.0))
    return NetworkParams(
        squeezing=float(rng.uniform(0.2, 2.0)),
        gate_gain=float(rng.uniform(0.2, 1.5)),
        distance_a_km=d_a,
        distance_b_km=float(rng.uniform(0.1, 4.0)),
        distance_c_km=d_c,
        eta_escape=float(rng.uniform(0.9, 1.0)),
        eta_fibre=float(rng.uniform(0.9, 1.0)),
        eta_detector=float(rng.uniform(0.9, 1.0)),
        excess_noise=float(rng.uniform(0.0, 0.01)),
        energy_test_transmission=float(rng.uniform(0.95, 1.0)),
    )
