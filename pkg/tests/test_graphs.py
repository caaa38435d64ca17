"""Graph-state circuits: builders, nullifiers, squeezer decomposition, budget."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvqss.gaussian import (
    assert_symplectic,
    beamsplitter,
    evolve,
    squeezer,
    vacuum_cm,
    xpxp_to_xxpp,
)
from cvqss.graphs import (
    adjacency_graph_symplectic,
    bloch_messiah,
    budget_solve,
    canonical_graph,
    canonical_line_graph,
    db_to_squeezing,
    line_adjacency,
    line_bloch_squeezings,
    max_offline_squeezing,
    nullifier_variances,
    squeezing_to_db,
    triangle_adjacency,
)

from helpers import random_symplectic

rs_strategy = st.floats(0.0, 2.7, allow_nan=False)
gain_strategy = st.floats(0.0, 3.0, allow_nan=False)


def direct_sum_squeezers(r_values):
    blocks = [squeezer(-r) for r in r_values]
    n = len(blocks)
    out = np.zeros((2 * n, 2 * n))
    for i, block in enumerate(blocks):
        out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = block
    return out


class TestAdjacency:
    def test_line_three_modes(self):
        adj = line_adjacency(0.8)
        expected = np.array([[0, 0.8, 0], [0.8, 0, 0.8], [0, 0.8, 0]])
        np.testing.assert_allclose(adj, expected)

    def test_line_length_parameter(self):
        adj = line_adjacency(1.0, n_modes=5)
        assert adj.shape == (5, 5)
        assert np.count_nonzero(adj) == 8  # 4 edges, symmetric
        assert np.allclose(adj, adj.T)

    def test_triangle_all_edges(self):
        adj = triangle_adjacency(1.3)
        assert adj.shape == (3, 3)
        np.testing.assert_allclose(np.diag(adj), 0.0)
        off = adj[~np.eye(3, dtype=bool)]
        np.testing.assert_allclose(off, 1.3)


class TestGraphSymplectics:
    @given(r=rs_strategy, gain=gain_strategy)
    def test_line_circuit_is_symplectic(self, r, gain):
        assert_symplectic(canonical_line_graph(r, gain), tol=1e-12)

    @given(r=rs_strategy, gain=gain_strategy)
    def test_closed_form_is_symplectic(self, r, gain):
        assert_symplectic(adjacency_graph_symplectic(line_adjacency(gain), r), tol=1e-12)

    @given(r=rs_strategy, gain=gain_strategy)
    def test_closed_form_matches_gate_circuit(self, r, gain):
        gate_by_gate = canonical_line_graph(r, gain)
        closed = adjacency_graph_symplectic(line_adjacency(gain), r)
        np.testing.assert_allclose(closed, gate_by_gate, atol=1e-12)

    @given(r=rs_strategy, gain=gain_strategy)
    def test_triangle_closed_form_matches_gate_circuit(self, r, gain):
        adj = triangle_adjacency(gain)
        np.testing.assert_allclose(
            adjacency_graph_symplectic(adj, r), canonical_graph(adj, r), atol=1e-12
        )

    def test_no_squeezing_no_edges_is_identity(self):
        np.testing.assert_allclose(canonical_line_graph(0.0, 0.0), np.eye(6), atol=1e-15)

    def test_zero_gain_reduces_to_independent_squeezers(self):
        op = canonical_line_graph(1.1, 0.0)
        np.testing.assert_allclose(op, np.kron(np.eye(3), squeezer(-1.1)), atol=1e-15)

    def test_xxpp_block_structure_of_closed_form(self):
        adj = line_adjacency(0.9)
        op = xpxp_to_xxpp(adjacency_graph_symplectic(adj, 0.6))
        scale_x = np.e**0.6
        np.testing.assert_allclose(op[:3, :3], scale_x * np.eye(3), atol=1e-12)
        np.testing.assert_allclose(op[:3, 3:], 0.0, atol=1e-15)
        np.testing.assert_allclose(op[3:, :3], scale_x * adj, atol=1e-12)


class TestNullifiers:
    def test_vacuum_with_no_edges_has_unit_nullifiers(self):
        cm = vacuum_cm(3)
        np.testing.assert_allclose(nullifier_variances(cm, np.zeros((3, 3))), 1.0)

    @given(r=rs_strategy, gain=gain_strategy)
    def test_line_nullifiers_squeeze_exponentially(self, r, gain):
        adj = line_adjacency(gain)
        cm = evolve(vacuum_cm(3), canonical_graph(adj, r))
        np.testing.assert_allclose(
            nullifier_variances(cm, adj), np.exp(-2.0 * r), atol=1e-10
        )

    @given(r=rs_strategy, gain=gain_strategy)
    def test_triangle_nullifiers_squeeze_exponentially(self, r, gain):
        adj = triangle_adjacency(gain)
        cm = evolve(vacuum_cm(3), canonical_graph(adj, r))
        np.testing.assert_allclose(
            nullifier_variances(cm, adj), np.exp(-2.0 * r), atol=1e-10
        )

    def test_wrong_adjacency_leaves_nullifiers_large(self):
        adj = line_adjacency(1.0)
        cm = evolve(vacuum_cm(3), canonical_graph(adj, 1.5))
        mismatched = nullifier_variances(cm, line_adjacency(0.5))
        assert mismatched.max() > 1.0


class TestBlochMessiah:
    def test_single_squeezer_recovers_parameter(self):
        passive, r_values = bloch_messiah(squeezer(-0.7))
        np.testing.assert_allclose(r_values, [0.7], atol=1e-12)
        assert_symplectic(passive, tol=1e-10)
        np.testing.assert_allclose(passive @ passive.T, np.eye(2), atol=1e-10)

    def test_passive_input_needs_no_squeezers(self):
        _, r_values = bloch_messiah(beamsplitter(0.3))
        np.testing.assert_allclose(r_values, 0.0, atol=1e-10)

    @given(seed=st.integers(0, 2**32 - 1), n_modes=st.integers(1, 4))
    @settings(max_examples=25)
    def test_moment_factorisation(self, seed, n_modes):
        op = random_symplectic(np.random.default_rng(seed), n_modes)
        passive, r_values = bloch_messiah(op)
        assert np.all(r_values >= -1e-12)
        assert np.all(np.diff(r_values) <= 1e-12)  # sorted descending
        np.testing.assert_allclose(passive @ passive.T, np.eye(2 * n_modes), atol=1e-10)
        assert_symplectic(passive, tol=1e-9)
        rebuilt = passive @ direct_sum_squeezers(r_values)
        np.testing.assert_allclose(rebuilt @ rebuilt.T, op @ op.T, atol=1e-9)

    @given(r=rs_strategy, gain=gain_strategy)
    @settings(max_examples=30)
    def test_line_source_moment_factorisation(self, r, gain):
        op = canonical_line_graph(r, gain)
        passive, r_values = bloch_messiah(op)
        rebuilt = passive @ direct_sum_squeezers(r_values)
        np.testing.assert_allclose(rebuilt @ rebuilt.T, op @ op.T, atol=1e-9)


class TestOfflineSqueezingFormula:
    def test_closed_form_matches_numeric_on_grid(self):
        for r in np.linspace(0.0, 2.7, 10):
            for gain in np.linspace(0.0, 3.0, 10):
                _, r_pair = line_bloch_squeezings(r, gain)
                numeric = max_offline_squeezing(r, gain)
                assert abs(r_pair - numeric) < 1e-8, (r, gain)

    def test_zero_gain_keeps_input_squeezing(self):
        r_first, r_pair = line_bloch_squeezings(1.3, 0.0)
        assert r_first == 1.3
        assert abs(r_pair - 1.3) < 1e-12

    @given(r=rs_strategy, gain=gain_strategy)
    def test_pair_squeezer_dominates(self, r, gain):
        r_first, r_pair = line_bloch_squeezings(r, gain)
        assert r_pair >= r_first - 1e-12

    def test_full_spectrum_is_one_input_plus_pair(self):
        r, gain = 0.9, 1.4
        _, r_values = bloch_messiah(canonical_line_graph(r, gain))
        _, r_pair = line_bloch_squeezings(r, gain)
        np.testing.assert_allclose(sorted(r_values), sorted([r, r_pair, r_pair]), atol=1e-8)


class TestSqueezingBudget:
    def test_spending_everything_on_graph_squeezing_leaves_no_gain(self):
        assert budget_solve(1.9, 1.9) == 0.0

    def test_round_trip_saturates_the_cap(self):
        r_max = 2.0
        for r in [0.0, 0.5, 1.2, 1.99]:
            gain = budget_solve(r, r_max)
            _, r_pair = line_bloch_squeezings(r, gain)
            assert abs(r_pair - r_max) < 1e-9

    def test_gain_budget_decreases_with_graph_squeezing(self):
        gains = [budget_solve(r, 2.2) for r in np.linspace(0.0, 2.2, 12)]
        assert all(a >= b - 1e-12 for a, b in zip(gains, gains[1:]))

    def test_over_budget_is_rejected(self):
        with pytest.raises(ValueError):
            budget_solve(2.3, 2.2)

    def test_negative_parameters_are_rejected(self):
        with pytest.raises(ValueError):
            budget_solve(-0.1, 1.0)
        with pytest.raises(ValueError):
            budget_solve(0.5, -1.0)


class TestDecibelConversion:
    def test_known_value(self):
        assert abs(db_to_squeezing(15.0) - 1.7269388197455342) < 1e-12

    def test_three_db_is_half_variance(self):
        r = db_to_squeezing(10.0 * np.log10(2.0))
        assert abs(np.exp(-2.0 * r) - 0.5) < 1e-12

    @given(db=st.floats(0.0, 30.0, allow_nan=False))
    def test_round_trip(self, db):
        assert abs(squeezing_to_db(db_to_squeezing(db)) - db) < 1e-9
