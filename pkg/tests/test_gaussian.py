"""Phase-space toolkit: constructors, evolution, conditioning, entropies."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvqss.gaussian import (
    assert_physical,
    assert_symplectic,
    beamsplitter,
    condition_heterodyne,
    condition_homodyne,
    conditional_variance,
    cz_gate,
    embed,
    entropy_g,
    evolve,
    omega,
    partial_trace,
    quad_index,
    reorder,
    squeezer,
    symplectic_eigenvalues,
    thermal_cm,
    two_mode_squeezed_cm,
    vacuum_cm,
    von_neumann_entropy,
    xpxp_to_xxpp,
    xxpp_to_xpxp,
)
from helpers import random_pure_cm, random_symplectic

finite_reals = st.floats(-3.0, 3.0, allow_nan=False)


def symplectic_defect(op: np.ndarray) -> float:
    n = op.shape[0] // 2
    return float(np.max(np.abs(op @ omega(n) @ op.T - omega(n))))


# --- constructors -----------------------------------------------------------


def test_squeezer_matrix():
    assert np.allclose(squeezer(0.0), np.eye(2))
    np.testing.assert_allclose(
        squeezer(1.0), np.diag([math.exp(-1.0), math.exp(1.0)]), rtol=1e-12
    )
    assert math.isclose(np.linalg.det(squeezer(0.7)), 1.0, rel_tol=1e-12)


def test_beamsplitter_matrix():
    assert np.allclose(beamsplitter(1.0), np.eye(4))
    full_reflection = beamsplitter(0.0)
    expected = np.block(
        [[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]]
    )
    np.testing.assert_allclose(full_reflection, expected, atol=1e-15)
    half = beamsplitter(0.5)
    assert np.allclose(np.abs(half[np.abs(half) > 1e-12]), 1 / math.sqrt(2))
    with pytest.raises(ValueError):
        beamsplitter(1.2)


def test_cz_gate_couplings():
    assert np.allclose(cz_gate(0.0), np.eye(4))
    gate = cz_gate(1.0)
    expected = np.eye(4)
    expected[1, 2] = 1.0
    expected[3, 0] = 1.0
    np.testing.assert_allclose(gate, expected, atol=1e-15)


@given(finite_reals)
def test_squeezer_symplectic(r):
    assert symplectic_defect(squeezer(r)) <= 1e-12


@given(st.floats(0.0, 1.0))
def test_beamsplitter_symplectic(transmission):
    assert symplectic_defect(beamsplitter(transmission)) <= 1e-12


@given(finite_reals)
def test_cz_symplectic(gain):
    assert symplectic_defect(cz_gate(gain)) <= 1e-12


@given(st.integers(0, 12345))
def test_random_composites_symplectic(seed):
    rng = np.random.default_rng(seed)
    op = random_symplectic(rng, 4)
    assert symplectic_defect(op) <= 1e-11
    assert_symplectic(op, tol=1e-11)


def test_embed_layouts():
    r = 0.4
    two_mode = embed(squeezer(r), [0], 2)
    expected = np.block(
        [[squeezer(r), np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2)]]
    )
    np.testing.assert_allclose(two_mode, expected)
    assert np.allclose(embed(np.eye(2), [1], 3), np.eye(6))
    padded = embed(beamsplitter(0.3), [1, 2], 3)
    assert np.allclose(padded[:2, :2], np.eye(2))
    assert np.allclose(padded[:2, 2:], 0.0)
    with pytest.raises(ValueError):
        embed(beamsplitter(0.3), [0, 0], 3)
    with pytest.raises(ValueError):
        embed(beamsplitter(0.3), [0, 5], 3)


# --- evolution and reduction ------------------------------------------------


def test_evolve_examples():
    vac = vacuum_cm(1)
    assert np.allclose(evolve(vac, np.eye(2)), vac)
    out = evolve(vac, squeezer(0.8))
    np.testing.assert_allclose(
        out, np.diag([math.exp(-1.6), math.exp(1.6)]), rtol=1e-12
    )


@given(st.integers(0, 5000))
def test_evolution_preserves_physicality(seed):
    rng = np.random.default_rng(seed)
    cm = evolve(random_pure_cm(rng, 3), random_symplectic(rng, 3))
    assert_physical(cm)


def test_partial_trace_examples():
    rng = np.random.default_rng(7)
    cm = random_pure_cm(rng, 3)
    assert np.allclose(partial_trace(cm, [0, 1, 2]), cm)
    tmsv = two_mode_squeezed_cm(0.9)
    reduced = partial_trace(tmsv, [0])
    np.testing.assert_allclose(reduced, math.cosh(1.8) * np.eye(2), rtol=1e-12)
    with pytest.raises(ValueError):
        partial_trace(cm, [])


def test_partial_trace_commutes_with_reorder():
    rng = np.random.default_rng(11)
    cm = random_pure_cm(rng, 3)
    perm = [2, 0, 1]
    direct = partial_trace(reorder(cm, perm), [0, 1])
    # keeping modes {0,1} after the permutation selects original modes {2,0}
    other = reorder(partial_trace(cm, [0, 2]), [1, 0])
    np.testing.assert_allclose(direct, other, atol=1e-12)


def test_ordering_conversions():
    diag = np.diag([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(xpxp_to_xxpp(diag), np.diag([1.0, 3.0, 2.0, 4.0]))
    rng = np.random.default_rng(3)
    cm = random_pure_cm(rng, 3)
    np.testing.assert_allclose(xxpp_to_xpxp(xpxp_to_xxpp(cm)), cm, atol=1e-14)


def test_quad_index():
    assert quad_index(0, "x") == 0
    assert quad_index(0, "p") == 1
    assert quad_index(2, "x") == 4
    with pytest.raises(ValueError):
        quad_index(0, "y")


# --- conditioning -----------------------------------------------------------


def test_homodyne_product_state_untouched():
    cm = np.diag([2.0, 0.5, 3.0, 1.0 / 3.0])
    out_cm, _ = condition_homodyne(cm, 1, "x")
    np.testing.assert_allclose(out_cm, cm[:2, :2])


def test_homodyne_tmsv_conditional_variance():
    tmsv = two_mode_squeezed_cm(1.0)
    out_cm, _ = condition_homodyne(tmsv, 1, "x")
    assert out_cm.shape == (2, 2)
    assert math.isclose(out_cm[0, 0], 1.0 / math.cosh(2.0), rel_tol=1e-12)
    assert math.isclose(out_cm[0, 0], 0.26580, rel_tol=1e-4)


def test_homodyne_outcome_independent_cm_linear_mean():
    tmsv = two_mode_squeezed_cm(0.7)
    cm0, mean0 = condition_homodyne(tmsv, 1, "x", outcome=0.0)
    cm5, mean5 = condition_homodyne(tmsv, 1, "x", outcome=5.0)
    np.testing.assert_allclose(cm0, cm5, atol=1e-14)
    assert np.allclose(mean0, 0.0)
    slope = tmsv[0, 2] / tmsv[2, 2]
    assert math.isclose(mean5[0], 5.0 * slope, rel_tol=1e-12)
    cm10, mean10 = condition_homodyne(tmsv, 1, "x", outcome=10.0)
    np.testing.assert_allclose(mean10, 2.0 * mean5, atol=1e-12)


def test_heterodyne_matches_manual_schur():
    rng = np.random.default_rng(21)
    cm = random_pure_cm(rng, 2)
    out_cm, _ = condition_heterodyne(cm, 1)
    block_a = cm[:2, :2]
    cross = cm[:2, 2:]
    block_b = cm[2:, 2:] + np.eye(2)
    manual = block_a - cross @ np.linalg.inv(block_b) @ cross.T
    np.testing.assert_allclose(out_cm, manual, atol=1e-12)


def test_conditional_variance_matches_conditioning():
    tmsv = two_mode_squeezed_cm(0.9)
    direct = conditional_variance(tmsv, (0, "x"), [(1, "x")])
    out_cm, _ = condition_homodyne(tmsv, 1, "x")
    assert math.isclose(direct, out_cm[0, 0], rel_tol=1e-12)


# --- spectra and entropies --------------------------------------------------


def test_symplectic_eigenvalue_examples():
    assert np.allclose(symplectic_eigenvalues(vacuum_cm(3)), 1.0)
    assert np.allclose(symplectic_eigenvalues(thermal_cm(2.5)), 2.5)
    tmsv = two_mode_squeezed_cm(1.3)
    np.testing.assert_allclose(symplectic_eigenvalues(tmsv), [1.0, 1.0], atol=1e-9)
    with pytest.raises(ValueError):
        symplectic_eigenvalues(0.5 * np.eye(2))


def test_entropy_examples():
    assert von_neumann_entropy(vacuum_cm(2)) == 0.0
    assert math.isclose(von_neumann_entropy(thermal_cm(3.0)), 2.0, rel_tol=1e-12)
    assert entropy_g(1.0) == 0.0
    assert math.isclose(entropy_g(3.0), 2.0, rel_tol=1e-12)
    a = thermal_cm(3.0)
    b = thermal_cm(1.7)
    joint = np.block(
        [[a, np.zeros((2, 2))], [np.zeros((2, 2)), b]]
    )
    assert math.isclose(
        von_neumann_entropy(joint),
        von_neumann_entropy(a) + von_neumann_entropy(b),
        rel_tol=1e-12,
    )


@given(st.integers(0, 5000), st.integers(1, 4))
def test_pure_state_entropy_duality(seed, cut):
    rng = np.random.default_rng(seed)
    cm = random_pure_cm(rng, 5)
    part = list(range(cut))
    complement = list(range(cut, 5))
    s_part = von_neumann_entropy(partial_trace(cm, part))
    s_comp = von_neumann_entropy(partial_trace(cm, complement))
    assert abs(s_part - s_comp) <= 1e-9


def test_assert_physical_rejects_subvacuum():
    with pytest.raises(ValueError):
        assert_physical(0.5 * np.eye(2))


# --- conditioning vs sampling -----------------------------------------------


def test_schur_conditioning_agrees_with_sampling():
    from cvqss.montecarlo import sample_rounds

    tmsv = two_mode_squeezed_cm(1.0)
    count = 10**6
    batch = sample_rounds(tmsv, [(0, "x"), (1, "x")], count, seed=902)
    x_a, x_b = batch.outcomes[:, 0], batch.outcomes[:, 1]
    slope = float(np.sum(x_a * x_b) / np.sum(x_b * x_b))
    resid = x_a - slope * x_b
    var_resid = float(np.var(resid, ddof=1))
    schur_slope = tmsv[0, 2] / tmsv[2, 2]
    schur_var = conditional_variance(tmsv, (0, "x"), [(1, "x")])
    se_slope = math.sqrt(var_resid / float(np.sum(x_b * x_b)))
    se_var = schur_var * math.sqrt(2.0 / count)
    assert abs(slope - schur_slope) <= 5.0 * se_slope
    assert abs(var_resid - schur_var) <= 5.0 * se_var
