"""Circuit model: basis states, gates, documents, extent, count formulas."""

import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermiborn import (
    BasisState,
    Circuit,
    CircuitFormatError,
    ControlledPhase,
    InvalidCircuitError,
    Matchgate,
    epsilon_from_count,
    extent,
    normalize_angle,
    parse_circuit,
    serialize_circuit,
    trajectory_count,
)

from conftest import random_circuit

IDENTITY_DOC = json.dumps(
    {
        "num_qubits": 2,
        "initial_state": "10",
        "gates": [
            {
                "type": "matchgate",
                "modes": [0, 1],
                "u": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
            }
        ],
    }
)


def traj_count_reference(eps, delta, p_max, xi):
    """Independent extended-precision evaluation of the count formula."""
    with mp.workdps(50):
        eps, delta, p_max, xi = map(mp.mpf, (repr(eps), repr(delta), repr(p_max), repr(xi)))
        num = 2 * (mp.sqrt(xi) + mp.sqrt(p_max)) ** 2
        den = (mp.sqrt(p_max + eps) - mp.sqrt(p_max)) ** 2
        return int(mp.ceil(num / den * mp.log(2 * mp.e**2 / delta)))


class TestBasisState:
    def test_round_trip(self):
        s = BasisState.from_string("10110")
        assert s.n == 5
        assert s.h == 3
        assert s.to_string() == "10110"
        assert s.indices() == (0, 2, 3)

    def test_leftmost_is_mode_zero(self):
        assert BasisState.from_string("10").bits == 0b01

    def test_rejects_bad_characters(self):
        with pytest.raises(InvalidCircuitError, match="non-binary"):
            BasisState.from_string("10x1")

    def test_rejects_bits_above_mode_count(self):
        with pytest.raises(InvalidCircuitError):
            BasisState(3, 0b1000)

    def test_rejects_length_mismatch(self):
        with pytest.raises(InvalidCircuitError, match="length"):
            BasisState.from_string("101", 4)

    @given(st.integers(1, 60), st.data())
    def test_weight_is_popcount(self, n, data):
        bits = data.draw(st.integers(0, (1 << n) - 1))
        s = BasisState(n, bits)
        assert s.h == bin(bits).count("1")
        assert len(s.indices()) == s.h


class TestAngles:
    def test_three_pi_wraps_to_pi(self):
        assert normalize_angle(3 * math.pi) == pytest.approx(math.pi, abs=1e-12)
        assert normalize_angle(3 * math.pi) > 0

    def test_boundaries(self):
        assert normalize_angle(math.pi) == math.pi
        assert normalize_angle(-math.pi) == math.pi
        assert normalize_angle(0.0) == 0.0

    @given(st.floats(-50.0, 50.0))
    def test_range_and_equivalence(self, theta):
        r = normalize_angle(theta)
        assert -math.pi < r <= math.pi
        assert math.cos(r) == pytest.approx(math.cos(theta), abs=1e-9)
        assert math.sin(r) == pytest.approx(math.sin(theta), abs=1e-9)


class TestGates:
    def test_matchgate_rejects_non_unitary(self):
        with pytest.raises(InvalidCircuitError, match="not unitary"):
            Matchgate(0, np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_matchgate_block_is_read_only(self):
        g = Matchgate(0, np.eye(2))
        with pytest.raises(ValueError):
            g.u[0, 0] = 2.0

    def test_cphase_normalizes_theta(self):
        g = ControlledPhase(0, 2, 3 * math.pi)
        assert g.theta == pytest.approx(math.pi, abs=1e-12)

    def test_cphase_rejects_equal_modes(self):
        with pytest.raises(InvalidCircuitError, match="distinct"):
            ControlledPhase(1, 1, 0.3)

    def test_circuit_caches_k_and_angles(self, rng):
        c = random_circuit(rng, 5, 4, 3)
        assert c.k == 3
        assert c.angles == tuple(
            g.theta for g in c.gates if isinstance(g, ControlledPhase)
        )

    def test_circuit_rejects_out_of_range(self):
        with pytest.raises(InvalidCircuitError, match="out of range"):
            Circuit(2, BasisState.from_string("10"), (Matchgate(1, np.eye(2)),))


class TestDocuments:
    def test_identity_matchgate_document(self):
        c = parse_circuit(IDENTITY_DOC)
        assert c.n == 2
        assert c.k == 0
        assert c.initial.to_string() == "10"

    def test_theta_normalized_at_parse(self):
        doc = json.dumps(
            {
                "num_qubits": 4,
                "initial_state": "1000",
                "gates": [{"type": "cphase", "modes": [0, 3], "theta": 3 * math.pi}],
            }
        )
        c = parse_circuit(doc)
        assert c.angles[0] == pytest.approx(math.pi, abs=1e-12)

    def test_non_nearest_neighbor_rejected(self):
        doc = json.dumps(
            {
                "num_qubits": 3,
                "initial_state": "100",
                "gates": [
                    {
                        "type": "matchgate",
                        "modes": [0, 2],
                        "u": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
                    }
                ],
            }
        )
        with pytest.raises(CircuitFormatError, match="non-nearest-neighbor"):
            parse_circuit(doc)

    @pytest.mark.parametrize(
        "mutate,field",
        [
            (lambda d: d.pop("num_qubits"), "num_qubits"),
            (lambda d: d.update(initial_state="10x0"), "initial_state"),
            (lambda d: d["gates"][0].update(type="swap"), "gates[0].type"),
            (lambda d: d["gates"][0].update(modes=[0, 9]), "gates[0].modes"),
            (lambda d: d["gates"][0].pop("theta"), "gates[0].theta"),
        ],
    )
    def test_schema_errors_name_the_field(self, mutate, field):
        doc = {
            "num_qubits": 4,
            "initial_state": "1000",
            "gates": [{"type": "cphase", "modes": [0, 3], "theta": 0.5}],
        }
        mutate(doc)
        with pytest.raises(CircuitFormatError, match=field.replace("[", r"\[")):
            parse_circuit(json.dumps(doc))

    def test_non_unitary_block_names_field(self):
        doc = {
            "num_qubits": 2,
            "initial_state": "10",
            "gates": [
                {
                    "type": "matchgate",
                    "modes": [0, 1],
                    "u": [[[1, 0], [0.2, 0]], [[0, 0], [1, 0]]],
                }
            ],
        }
        with pytest.raises(CircuitFormatError, match=r"gates\[0\]\.u"):
            parse_circuit(json.dumps(doc))

    def test_round_trip_identical(self, rng):
        for _ in range(10):
            c = random_circuit(rng, 6, 5, 4)
            again = parse_circuit(serialize_circuit(c))
            assert again == c
            assert serialize_circuit(again) == serialize_circuit(c)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_property(self, seed):
        gen = np.random.default_rng(seed)
        c = random_circuit(gen, int(gen.integers(2, 7)), 3, 2)
        assert parse_circuit(serialize_circuit(c)) == c


def cp_chain(thetas, n=4):
    gates = tuple(ControlledPhase(0, 1, t) for t in thetas)
    return Circuit(n, BasisState.from_string("1100"), gates)


class TestExtent:
    def test_zero_angles(self):
        report = extent(cp_chain([0.0, 0.0]))
        assert report.extent == 1.0
        assert report.per_gate_factors == (1.0, 1.0)

    def test_pi_gives_two(self):
        report = extent(cp_chain([math.pi]))
        assert abs(report.per_gate_factors[0] - 2.0) <= 1e-15
        assert abs(report.extent - 2.0) <= 1e-15

    def test_two_pi_gates_give_four(self):
        assert extent(cp_chain([math.pi, math.pi])).extent == pytest.approx(
            4.0, rel=1e-14
        )

    def test_factors_within_bounds(self, rng):
        for _ in range(20):
            c = random_circuit(rng, 5, 3, 4)
            report = extent(c)
            assert all(1.0 <= f <= 2.0 for f in report.per_gate_factors)
            assert report.extent == pytest.approx(
                math.prod(report.per_gate_factors), rel=1e-12
            )

    def test_multiplicative_over_concatenation(self, rng):
        a = random_circuit(rng, 5, 3, 3)
        b = random_circuit(rng, 5, 2, 4)
        joined = Circuit(5, a.initial, a.gates + b.gates)
        assert extent(joined).extent == pytest.approx(
            extent(a).extent * extent(b).extent, rel=1e-12
        )

    def test_sign_invariance_bit_for_bit(self, rng):
        c = random_circuit(rng, 5, 3, 4)
        flipped = Circuit(
            5,
            c.initial,
            tuple(
                ControlledPhase(g.q1, g.q2, -g.theta)
                if isinstance(g, ControlledPhase)
                else g
                for g in c.gates
            ),
        )
        assert extent(c) == extent(flipped)


class TestTrajectoryCount:
    def test_frozen_reference_point(self):
        # Unit extent, eps = delta = 0.1: exact value 16776.139..., ceiling 16777.
        assert trajectory_count(0.1, 0.1, 1.0, 1.0) == 16777
        assert trajectory_count(0.1, 0.1, 1.0, 1.0) == traj_count_reference(
            0.1, 0.1, 1.0, 1.0
        )

    def test_matches_reference_on_sample(self):
        gen = np.random.default_rng(5)
        for _ in range(25):
            eps = float(10 ** gen.uniform(-2.5, 0))
            delta = float(10 ** gen.uniform(-3, -0.1))
            p_max = float(gen.uniform(0.01, 1.0))
            xi = float(2 ** gen.uniform(0, 12))
            assert trajectory_count(eps, delta, p_max, xi) == traj_count_reference(
                eps, delta, p_max, xi
            )

    def test_extent_doubling_increases_count(self):
        t1 = trajectory_count(0.05, 0.05, 1.0, 2.0)
        t2 = trajectory_count(0.05, 0.05, 1.0, 4.0)
        assert t2 > t1

    def test_monotonic_in_epsilon_and_delta(self):
        gen = np.random.default_rng(17)
        for _ in range(50):
            eps = float(gen.uniform(0.01, 0.5))
            delta = float(gen.uniform(0.01, 0.5))
            p = float(gen.uniform(0.05, 1.0))
            xi = float(gen.uniform(1.0, 50.0))
            assert trajectory_count(eps * 1.5, delta, p, xi) <= trajectory_count(
                eps, delta, p, xi
            )
            assert trajectory_count(eps, delta * 1.5, p, xi) <= trajectory_count(
                eps, delta, p, xi
            )
            assert trajectory_count(eps, delta, p, xi * 2) >= trajectory_count(
                eps, delta, p, xi
            )

    @pytest.mark.parametrize(
        "args",
        [
            (0.0, 0.1, 1.0, 1.0),
            (-0.1, 0.1, 1.0, 1.0),
            (0.1, 0.0, 1.0, 1.0),
            (0.1, 1.0, 1.0, 1.0),
            (0.1, 0.1, 0.0, 1.0),
            (0.1, 0.1, 1.5, 1.0),
            (0.1, 0.1, 1.0, 0.5),
        ],
    )
    def test_domain_errors(self, args):
        with pytest.raises(ValueError):
            trajectory_count(*args)


class TestEpsilonFromCount:
    def test_round_trip_never_grows(self):
        gen = np.random.default_rng(9)
        for _ in range(100):
            eps = float(gen.uniform(0.005, 0.5))
            delta = float(gen.uniform(0.001, 0.5))
            p = float(gen.uniform(0.05, 1.0))
            xi = float(gen.uniform(1.0, 100.0))
            t = trajectory_count(eps, delta, p, xi)
            eps_back = epsilon_from_count(t, delta, p, xi)
            assert eps_back <= eps * (1 + 1e-6)

    def test_count_of_inverse_is_tight(self):
        gen = np.random.default_rng(11)
        for _ in range(100):
            t = int(gen.integers(10, 10**7))
            delta = float(gen.uniform(0.001, 0.5))
            p = float(gen.uniform(0.05, 1.0))
            xi = float(gen.uniform(1.0, 100.0))
            eps = epsilon_from_count(t, delta, p, xi)
            t_back = trajectory_count(eps, delta, p, xi)
            assert t - 1 <= t_back <= t

    def test_reproduces_known_epsilon(self):
        t = trajectory_count(0.05, 0.01, 1.0, 2.0)
        assert epsilon_from_count(t, 0.01, 1.0, 2.0) == pytest.approx(0.05, rel=1e-4)

    def test_vanishes_for_large_counts(self):
        assert epsilon_from_count(10**15, 0.1, 1.0, 2.0) < 1e-6

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            epsilon_from_count(0, 0.1, 1.0, 1.0)
        with pytest.raises(ValueError):
            epsilon_from_count(100, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            epsilon_from_count(100, 0.1, 0.0, 1.0)
        with pytest.raises(ValueError):
            epsilon_from_count(100, 0.1, 1.0, 0.9)
