import math

import pytest

from src.circuit import (
    AbstractCircuit,
    Gate,
    compose_experiments,
    peephole_simplify,
    skeleton_circuit,
    split_results,
)
from src.errors import FormatError, NamingError, PlanError
from src.layout import PartitionPlan, QubitLayout, bundled_plan
from src.samples import SampleSet


@pytest.fixture
def plan():
    return bundled_plan("buffer1").relabel(["mol_a", "mol_b"])


def _subcircuits(plan, n_layers=1):
    return [(layout.label, skeleton_circuit(layout, 2, 2, n_layers, seed=1)) for layout in plan.layouts]


def _toy_circuit(gates):
    return AbstractCircuit([0, 1], gates, {"r": 2}, {0: ("r", 0), 1: ("r", 1)})


class TestSkeleton:

    def test_shape(self, plan):
        layout = plan.layouts[0]
        circuit = skeleton_circuit(layout, 2, 1, n_layers=2)
        ops = circuit.count_ops()
        assert ops["x"] == 3
        assert ops["rz"] == 2 * 8
        assert ops["xx_plus_yy"] == 2 * 2 * 3
        assert ops["rzz"] == 2 * 2 * 3
        assert circuit.measured_qubits(layout.label) == list(layout.system_qubits)
        assert set(circuit.qubits) == set(layout.qubits)

    def test_deterministic(self, plan):
        layout = plan.layouts[1]
        assert skeleton_circuit(layout, 2, 2, seed=4) == skeleton_circuit(layout, 2, 2, seed=4)
        assert skeleton_circuit(layout, 2, 2, seed=4) != skeleton_circuit(layout, 2, 2, seed=5)

    def test_odd_width_rejected(self):
        with pytest.raises(PlanError):
            skeleton_circuit(QubitLayout("odd", (0, 1, 2)), 1, 1)


class TestCompose:

    def test_registers_and_measurements(self, plan):
        circuit = compose_experiments(_subcircuits(plan), plan)
        assert list(circuit.registers.items()) == [("mol_a", 8), ("mol_b", 8)]
        assert circuit.measured_qubits("mol_a") == list(plan.layouts[0].system_qubits)
        assert circuit.measured_qubits("mol_b") == list(plan.layouts[1].system_qubits)
        assert circuit.metadata["labels"] == ["mol_a", "mol_b"]

    def test_gate_order_is_layout_then_original(self, plan):
        subs = _subcircuits(plan)
        circuit = compose_experiments(list(reversed(subs)), plan)
        assert list(circuit.gates) == list(subs[0][1].gates) + list(subs[1][1].gates)

    def test_duplicate_label(self, plan):
        subs = _subcircuits(plan)
        with pytest.raises(NamingError):
            compose_experiments([subs[0], subs[0]], plan)

    def test_label_mismatch(self, plan):
        subs = _subcircuits(plan)
        with pytest.raises(PlanError):
            compose_experiments([subs[0], ("other", subs[1][1])], plan)

    def test_circuit_outside_layout(self, plan):
        a, b = plan.layouts
        wrong = skeleton_circuit(QubitLayout("mol_b", a.system_qubits, a.ancilla_qubits), 2, 2)
        with pytest.raises(PlanError):
            compose_experiments([("mol_a", skeleton_circuit(a, 2, 2)), ("mol_b", wrong)], plan)

    def test_invalid_plan(self):
        base = bundled_plan("buffer1")
        a, b = base.layouts
        plan = PartitionPlan(base.coupling, [a, QubitLayout("B", b.system_qubits, (50, 24, 35))], 1)
        subs = [(layout.label, skeleton_circuit(layout, 2, 2)) for layout in plan.layouts]
        with pytest.raises(PlanError):
            compose_experiments(subs, plan)

    def test_dict_round_trip(self, plan):
        circuit = compose_experiments(_subcircuits(plan), plan)
        assert AbstractCircuit.from_dict(circuit.to_dict()) == circuit

    def test_from_dict_malformed(self):
        with pytest.raises(FormatError):
            AbstractCircuit.from_dict({"qubits": [0]})


class TestPeephole:

    def test_removes_near_identity(self):
        circuit = _toy_circuit([Gate("rz", (0,), 1e-10), Gate("rz", (1,), 2 * math.pi), Gate("x", (0,))])
        assert list(peephole_simplify(circuit).gates) == [Gate("x", (0,))]

    def test_merges_adjacent_rotations(self):
        circuit = _toy_circuit([Gate("rz", (0,), 0.3), Gate("rz", (0,), 0.4)])
        (gate,) = peephole_simplify(circuit).gates
        assert gate.name == "rz"
        assert gate.angle == pytest.approx(0.7)

    def test_merge_that_cancels_is_removed(self):
        circuit = _toy_circuit([Gate("rzz", (0, 1), 0.5), Gate("rzz", (0, 1), -0.5), Gate("x", (1,))])
        assert list(peephole_simplify(circuit).gates) == [Gate("x", (1,))]

    def test_blocked_by_gate_on_same_qubit(self):
        gates = [Gate("rz", (0,), 0.3), Gate("x", (0,)), Gate("rz", (0,), 0.4)]
        assert list(peephole_simplify(_toy_circuit(gates)).gates) == gates

    def test_commutes_past_other_qubits(self):
        gates = [Gate("rz", (0,), 0.3), Gate("x", (1,)), Gate("rz", (0,), 0.4)]
        out = list(peephole_simplify(_toy_circuit(gates)).gates)
        assert len(out) == 2
        assert out[0].angle == pytest.approx(0.7)

    def test_operand_order_matters(self):
        gates = [Gate("xx_plus_yy", (0, 1), 0.3), Gate("xx_plus_yy", (1, 0), 0.4)]
        assert len(peephole_simplify(_toy_circuit(gates)).gates) == 2

    def test_idempotent(self, plan):
        circuit = compose_experiments(_subcircuits(plan, n_layers=3), plan)
        once = peephole_simplify(circuit, 1e-2)
        assert peephole_simplify(once, 1e-2) == once

    def test_preserves_registers(self, plan):
        circuit = compose_experiments(_subcircuits(plan), plan)
        simplified = peephole_simplify(circuit)
        assert simplified.registers == circuit.registers
        assert simplified.measurements == circuit.measurements


class TestSplitResults:

    def test_first_register_is_rightmost(self):
        circuit = AbstractCircuit(
            [0, 1, 2, 3, 4],
            [],
            {"a": 2, "b": 3},
            {0: ("a", 0), 1: ("a", 1), 2: ("b", 0), 3: ("b", 1), 4: ("b", 2)},
        )
        parts = split_results(SampleSet({"10001": 3, "01110": 1}), circuit)
        assert parts["a"].counts == {"01": 3, "10": 1}
        assert parts["b"].counts == {"100": 3, "011": 1}
        assert parts["a"].label == "a"

    def test_per_shot_keys(self, plan):
        keys = ["0" * 8 + "1" * 8, "1" * 8 + "0" * 8, "0" * 8 + "1" * 8]
        parts = split_results(keys, plan)
        assert parts["mol_a"].counts == {"00000000": 1, "11111111": 2}
        assert parts["mol_b"].counts == {"00000000": 2, "11111111": 1}

    def test_marginals_sum_to_total(self, plan):
        samples = SampleSet({"01" * 8: 5, "10" * 8: 7, "1" * 16: 1})
        for part in split_results(samples, plan).values():
            assert part.shots == 13

    def test_wrong_width(self, plan):
        with pytest.raises(FormatError):
            split_results(SampleSet({"0101": 1}), plan)
