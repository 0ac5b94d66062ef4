import pytest

from src.coupling_map import CouplingMap, heavy_hex_map
from src.errors import ArgumentError, NamingError, PlacementError, PlanError
from src.layout import (
    PartitionPlan,
    QubitLayout,
    bundled_plan,
    bundled_plan_names,
    load_plan,
    pack_layouts,
    plan_zigzag_layout,
    save_plan,
    validate_partition,
)


def _line_plan(min_buffer, second_start):
    coupling = heavy_hex_map(1, 12)
    a = QubitLayout("a", (0, 1, 2, 3))
    b = QubitLayout("b", tuple(range(second_start, second_start + 4)))
    return PartitionPlan(coupling, [a, b], min_buffer)


class TestQubitLayout:

    def test_repeated_qubit(self):
        with pytest.raises(PlanError):
            QubitLayout("x", (0, 1), (1,))

    def test_missing_label(self):
        with pytest.raises(NamingError):
            QubitLayout("", (0, 1))

    def test_faulty_qubit_rejected_by_plan(self):
        coupling = heavy_hex_map(1, 6, faulty=[2])
        with pytest.raises(PlanError):
            PartitionPlan(coupling, [QubitLayout("x", (1, 2))])

    def test_qubit_outside_map(self):
        with pytest.raises(PlanError):
            PartitionPlan(heavy_hex_map(1, 4), [QubitLayout("x", (3, 4))])


class TestValidatePartition:

    def test_overlap(self):
        coupling = heavy_hex_map(1, 12)
        plan = PartitionPlan(coupling, [QubitLayout("a", (3, 4, 5)), QubitLayout("b", (5, 6, 7))], 0)
        violations = validate_partition(plan)
        assert [v.kind for v in violations if v.kind == "overlap"] == ["overlap"]
        assert violations[0].qubit_a == 5

    def test_adjacent_layouts_need_one_buffer(self):
        violations = validate_partition(_line_plan(1, 4))
        assert len(violations) == 1
        v = violations[0]
        assert (v.kind, v.qubit_a, v.qubit_b, v.distance) == ("distance", 3, 4, 1)

    def test_zero_buffer_accepts_adjacent(self):
        assert validate_partition(_line_plan(0, 4)) == []

    def test_one_idle_qubit(self):
        assert validate_partition(_line_plan(1, 5)) == []
        assert len(validate_partition(_line_plan(2, 5))) == 1


class TestBundledPlans:

    def test_names(self):
        assert bundled_plan_names() == ["buffer1", "buffer2", "buffer3"]

    @pytest.mark.parametrize("name, buffer", [("buffer1", 1), ("buffer2", 2), ("buffer3", 3)])
    def test_valid_at_own_and_minimal_buffer(self, name, buffer):
        plan = bundled_plan(name)
        assert plan.min_buffer == buffer
        assert [layout.width for layout in plan.layouts] == [8, 8]
        assert [len(layout.ancilla_qubits) for layout in plan.layouts] == [3, 3]
        assert validate_partition(plan) == []
        assert validate_partition(PartitionPlan(plan.coupling, plan.layouts, 1)) == []

    @pytest.mark.parametrize("name, buffer", [("buffer1", 1), ("buffer2", 2), ("buffer3", 3)])
    def test_measured_qubits_sit_at_buffer_distance(self, name, buffer):
        plan = bundled_plan(name)
        a, b = plan.layouts
        closest = min(plan.coupling.distance(p, q) for p in a.system_qubits for q in b.system_qubits)
        assert closest == buffer + 1

    def test_buffers_are_tight(self):
        for name, buffer in (("buffer1", 1), ("buffer2", 2), ("buffer3", 3)):
            plan = bundled_plan(name)
            tighter = PartitionPlan(plan.coupling, plan.layouts, buffer + 1)
            assert validate_partition(tighter) != []

    def test_ancillas_are_bridges_next_to_the_chain(self):
        for name in bundled_plan_names():
            plan = bundled_plan(name)
            for layout in plan.layouts:
                for ancilla in layout.ancilla_qubits:
                    assert plan.coupling.is_bridge(ancilla)
                    assert any(plan.coupling.distance(ancilla, q) == 1 for q in layout.system_qubits)

    def test_perturbation_gives_one_violation(self):
        plan = bundled_plan("buffer1")
        a, b = plan.layouts
        # kubit 35 leży w szczelinie, tuż obok kubitu 36 układu B
        moved = QubitLayout(a.label, a.system_qubits, (21, 22, 35))
        violations = validate_partition(PartitionPlan(plan.coupling, [moved, b], 1))
        assert len(violations) == 1
        assert (violations[0].qubit_a, violations[0].qubit_b) == (35, 36)

    def test_chains_are_connected(self):
        for name in bundled_plan_names():
            plan = bundled_plan(name)
            for layout in plan.layouts:
                chain = layout.system_qubits
                assert all(plan.coupling.distance(p, q) == 1 for p, q in zip(chain, chain[1:]))

    def test_unknown_name(self):
        with pytest.raises(ArgumentError):
            bundled_plan("buffer9")


class TestPlanObject:

    def test_duplicate_labels(self):
        coupling = heavy_hex_map(1, 12)
        with pytest.raises(NamingError):
            PartitionPlan(coupling, [QubitLayout("a", (0, 1)), QubitLayout("a", (5, 6))])

    def test_registers_and_relabel(self):
        plan = bundled_plan("buffer2").relabel(["h2o", "nh3"])
        assert plan.labels == ["h2o", "nh3"]
        assert list(plan.registers.items()) == [("h2o", 8), ("nh3", 8)]
        assert plan.total_width == 16
        assert plan.layout("nh3").system_qubits[0] == 37

    def test_file_round_trip(self, tmp_path):
        plan = bundled_plan("buffer3")
        path = tmp_path / "plan.json"
        save_plan(plan, str(path))
        back = load_plan(str(path))
        assert back.coupling == plan.coupling
        assert back.coupling.bridges == plan.coupling.bridges
        assert back.layouts == plan.layouts
        assert back.min_buffer == plan.min_buffer


class TestZigzagPlacement:

    def test_reproduces_bundled_layout(self):
        layout = plan_zigzag_layout(heavy_hex_map(3, 21), 4, 3, anchor=0, label="A")
        assert layout == bundled_plan("buffer1").layouts[0]

    def test_path_graph_without_ancillas(self):
        path = CouplingMap(8, [(q, q + 1) for q in range(7)])
        layout = plan_zigzag_layout(path, 4, 0, anchor=0)
        assert layout.system_qubits == tuple(range(8))
        assert layout.ancilla_qubits == ()

    def test_chain_and_ancillas_on_small_lattice(self):
        coupling = heavy_hex_map(3, 9)
        layout = plan_zigzag_layout(coupling, 4, 3)
        chain = layout.system_qubits
        assert len(chain) == 8 and len(set(layout.qubits)) == 11
        assert all(coupling.distance(p, q) == 1 for p, q in zip(chain, chain[1:]))
        assert not any(coupling.is_bridge(q) for q in chain)
        for ancilla in layout.ancilla_qubits:
            assert coupling.is_bridge(ancilla)
            assert any(coupling.distance(ancilla, q) == 1 for q in chain)
        # środkowy wiersz 12..19 sąsiaduje z mostkami w górę i w dół
        assert layout.system_qubits == tuple(range(12, 20))
        assert layout.ancilla_qubits == (9, 21, 10)

    def test_avoids_faulty_qubit(self):
        coupling = heavy_hex_map(3, 21, faulty=[27])
        layout = plan_zigzag_layout(coupling, 4, 3, anchor=0)
        assert 27 not in layout.qubits

    def test_too_few_qubits(self):
        with pytest.raises(PlacementError):
            plan_zigzag_layout(heavy_hex_map(1, 6), 4, 0)

    def test_line_has_no_bridges(self):
        with pytest.raises(PlacementError):
            plan_zigzag_layout(heavy_hex_map(1, 12), 4, 1)

    def test_more_ancillas_than_adjacent_bridges(self):
        # na dwóch wierszach łańcuch 8 kubitów dotyka najwyżej dwóch mostków
        coupling = heavy_hex_map(2, 21)
        assert len(plan_zigzag_layout(coupling, 4, 2).ancilla_qubits) == 2
        with pytest.raises(PlacementError):
            plan_zigzag_layout(coupling, 4, 3)

    def test_row_neighbour_is_not_an_ancilla(self):
        layout = plan_zigzag_layout(heavy_hex_map(2, 21), 4, 2)
        assert all(q in range(21, 27) for q in layout.ancilla_qubits)


class TestPackLayouts:

    @pytest.mark.parametrize("buffer", [0, 1, 2, 3])
    def test_result_is_valid(self, buffer):
        plan = pack_layouts(heavy_hex_map(3, 21), ["x", "y"], 4, 3, buffer)
        assert validate_partition(plan) == []
        for layout in plan.layouts:
            assert all(plan.coupling.is_bridge(q) for q in layout.ancilla_qubits)

    def test_first_layout_matches_bundled(self):
        plan = pack_layouts(heavy_hex_map(3, 21), ["A", "B"], 4, 3, 1)
        assert plan.layouts[0] == bundled_plan("buffer1").layouts[0]

    def test_no_space_left(self):
        with pytest.raises(PlacementError):
            pack_layouts(heavy_hex_map(3, 21), ["x", "y", "z"], 4, 3, 2)
