"""Network scenario builders: circuit vs closed form, limits, symmetry, physicality."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvqss.gaussian import (
    assert_physical,
    evolve,
    quad_index,
    reorder,
    two_mode_squeezed_cm,
    vacuum_cm,
)
from cvqss.graphs import canonical_line_graph
from cvqss.networks import (
    NetworkParams,
    distance_to_transmission,
    experimental_cm,
    experimental_cm_closed_form,
    hub_out_cm,
    inferred_squeezing,
    player_in_cm,
    qkd_cm,
)

from helpers import random_network_params

REALISTIC = NetworkParams(
    squeezing=1.2,
    gate_gain=0.9,
    distance_a_km=1.0,
    distance_b_km=1.0,
    distance_c_km=1.0,
    eta_escape=0.95,
    eta_fibre=0.99,
    eta_detector=0.95,
    excess_noise=0.01,
    energy_test_transmission=0.975,
)


class TestFibreTransmission:
    def test_zero_distance_is_transparent(self):
        assert distance_to_transmission(0.0) == 1.0

    def test_five_km(self):
        assert abs(distance_to_transmission(5.0) - 0.79433) < 1e-5

    def test_fifty_km_is_ten_percent(self):
        assert abs(distance_to_transmission(50.0) - 0.1) < 1e-12

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            distance_to_transmission(-0.5)

    @given(d=st.floats(0.0, 200.0, allow_nan=False))
    def test_always_a_probability(self, d):
        t = distance_to_transmission(d)
        assert 0.0 < t <= 1.0


class TestIdealScenarios:
    def test_lossless_hub_equals_source_state(self):
        params = NetworkParams(squeezing=1.1, gate_gain=0.8)
        expected = evolve(vacuum_cm(3), canonical_line_graph(1.1, 0.8))
        np.testing.assert_allclose(hub_out_cm(params).cm, expected, atol=1e-12)

    def test_inactive_source_sends_vacuum_through_any_loss(self):
        params = NetworkParams(squeezing=0.0, gate_gain=0.0, distance_a_km=11.0, distance_b_km=4.0)
        np.testing.assert_allclose(hub_out_cm(params).cm, np.eye(6), atol=1e-12)

    def test_hub_and_player_routing_differ_under_loss(self):
        params = NetworkParams(
            squeezing=1.0, gate_gain=1.0, distance_a_km=distance_db_to_km(0.8)
        )
        diff = np.abs(hub_out_cm(params).cm - player_in_cm(params).cm).max()
        assert diff > 1e-3

    def test_hub_and_player_agree_without_loss(self):
        params = NetworkParams(squeezing=1.0, gate_gain=1.0)
        np.testing.assert_allclose(player_in_cm(params).cm, hub_out_cm(params).cm, atol=1e-12)

    def test_hub_and_player_agree_without_gates(self):
        params = NetworkParams(squeezing=1.0, gate_gain=0.0, distance_a_km=3.0, distance_c_km=1.0)
        np.testing.assert_allclose(player_in_cm(params).cm, hub_out_cm(params).cm, atol=1e-12)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=25)
    def test_full_states_are_pure_and_physical(self, seed):
        params = random_network_params(np.random.default_rng(seed))
        for build in (hub_out_cm, player_in_cm):
            scenario = build(params)
            assert_physical(scenario.full_cm)
            assert_physical(scenario.cm)
            assert scenario.full_cm.shape == (12, 12)
            assert scenario.labels == ("A", "B", "C")


def distance_db_to_km(transmission: float) -> float:
    """Arm length whose fibre transmission equals the given value."""
    return -10.0 * np.log10(transmission) / 0.2


class TestExperimentalScenario:
    def test_ideal_limit_reduces_to_hub_out(self):
        params = NetworkParams(
            squeezing=1.3, gate_gain=0.7, distance_a_km=2.0, distance_b_km=1.0, distance_c_km=2.0
        )
        np.testing.assert_allclose(
            experimental_cm(params).cm, hub_out_cm(params).cm, atol=1e-12
        )

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=60)
    def test_circuit_matches_closed_form(self, seed):
        params = random_network_params(np.random.default_rng(seed))
        np.testing.assert_allclose(
            experimental_cm(params).cm, experimental_cm_closed_form(params), atol=1e-10
        )

    def test_outer_player_coupling_is_a_single_momentum_entry(self):
        scenario = experimental_cm(REALISTIC)
        cm = scenario.cm
        a, c = scenario.mode("A"), scenario.mode("C")
        block = cm[2 * a : 2 * a + 2, 2 * c : 2 * c + 2]
        p = REALISTIC
        t_a, _, t_c = p.transmissions()
        expected = (
            p.gate_gain**2
            * np.exp(2.0 * p.squeezing)
            * (p.eta_escape * p.eta_fibre)
            * p.eta_detector
            * np.sqrt(t_a * t_c)
        )
        np.testing.assert_allclose(block, [[0.0, 0.0], [0.0, expected]], atol=1e-12)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=25)
    def test_reduced_and_full_states_physical(self, seed):
        params = random_network_params(np.random.default_rng(seed))
        scenario = experimental_cm(params)
        assert_physical(scenario.cm)
        assert_physical(scenario.full_cm)
        assert scenario.full_cm.shape == (26, 26)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=25)
    def test_swapping_outer_arms_permutes_the_state(self, seed):
        params = random_network_params(np.random.default_rng(seed))
        swapped = experimental_cm(params.swapped_ac()).cm
        permuted = reorder(experimental_cm(params).cm, [2, 1, 0])
        np.testing.assert_allclose(swapped, permuted, atol=1e-12)

    def test_equal_arms_make_outer_players_interchangeable(self):
        cm = experimental_cm(REALISTIC).cm
        np.testing.assert_allclose(cm, reorder(cm, [2, 1, 0]), atol=1e-12)

    @given(
        gain=st.floats(1.0, 3.0, allow_nan=False),
        r_low=st.floats(0.0, 2.6, allow_nan=False),
        step=st.floats(0.01, 0.1, allow_nan=False),
    )
    @settings(max_examples=40)
    def test_momentum_variances_grow_with_squeezing_at_high_gain(self, gain, r_low, step):
        # holds for gain >= 1; below that the gate term can dip first
        def p_variances(r):
            params = NetworkParams(
                squeezing=r,
                gate_gain=gain,
                distance_a_km=1.0,
                distance_b_km=1.0,
                distance_c_km=1.0,
                eta_escape=0.95,
                eta_fibre=0.99,
                eta_detector=0.95,
                excess_noise=0.0,
                energy_test_transmission=0.975,
            )
            cm = experimental_cm(params).cm
            return np.array([cm[quad_index(m, "p"), quad_index(m, "p")] for m in range(3)])

        assert np.all(p_variances(r_low + step) >= p_variances(r_low) - 1e-12)


class TestQkdScenario:
    def test_ideal_limit_is_two_mode_squeezed_vacuum(self):
        np.testing.assert_allclose(
            qkd_cm(NetworkParams(squeezing=1.1)).cm, two_mode_squeezed_cm(1.1), atol=1e-12
        )

    def test_link_crosses_the_arm_twice(self):
        params = NetworkParams(squeezing=1.0, distance_a_km=5.0)
        cm = qkd_cm(params).cm
        t_double = distance_to_transmission(5.0) ** 2
        ideal = two_mode_squeezed_cm(1.0)
        expected_bob_xx = t_double * ideal[2, 2] + (1.0 - t_double)
        assert abs(cm[2, 2] - expected_bob_xx) < 1e-12

    def test_excess_noise_raises_bob_variance(self):
        base = NetworkParams(squeezing=1.0, distance_a_km=2.0)
        noisy = NetworkParams(squeezing=1.0, distance_a_km=2.0, excess_noise=0.05)
        quiet_cm, noisy_cm = qkd_cm(base).cm, qkd_cm(noisy).cm
        assert noisy_cm[2, 2] > quiet_cm[2, 2]
        assert noisy_cm[3, 3] > quiet_cm[3, 3]
        np.testing.assert_allclose(noisy_cm[:2, :2], quiet_cm[:2, :2], atol=1e-12)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=25)
    def test_states_physical(self, seed):
        params = random_network_params(np.random.default_rng(seed))
        scenario = qkd_cm(params)
        assert_physical(scenario.cm)
        assert_physical(scenario.full_cm)
        assert scenario.labels == ("A", "B")
        assert scenario.full_cm.shape == (18, 18)


class TestInferredSqueezing:
    def test_reference_measurement(self):
        r = inferred_squeezing(15.3, 0.975)
        assert abs(r - 2.68) < 0.01
        assert abs(r - 2.6878382539196113) < 1e-12

    def test_lossless_inversion_is_linear_in_db(self):
        for db in [3.0, 10.0, 15.0]:
            assert abs(inferred_squeezing(db, 1.0) - db * np.log(10.0) / 20.0) < 1e-12

    @given(r=st.floats(0.05, 2.5, allow_nan=False), eta=st.floats(0.5, 1.0, allow_nan=False))
    def test_round_trip_through_the_loss_model(self, r, eta):
        v_measured = eta * np.exp(-2.0 * r) + (1.0 - eta)
        db = -10.0 * np.log10(v_measured)
        assert abs(inferred_squeezing(db, eta) - r) < 1e-9

    def test_measurement_below_loss_floor_rejected(self):
        with pytest.raises(ValueError):
            inferred_squeezing(30.0, 0.5)

    def test_bad_efficiency_rejected(self):
        for eta in [0.0, -0.2, 1.3]:
            with pytest.raises(ValueError):
                inferred_squeezing(10.0, eta)
