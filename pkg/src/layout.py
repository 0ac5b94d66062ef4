"""Układy kubitów pod-eksperymentów i plany podziału procesora"""

import json
import os
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from src.coupling_map import CouplingMap
from src.errors import ArgumentError, FormatError, NamingError, PlacementError, PlanError
from utils.constants import DEFAULT_MIN_BUFFER, DEFAULT_N_ANCILLA
from utils.helpers import get_data_path

# Limit rozwinięć DFS na jedną kotwicę
_MAX_DFS_EXPANSIONS = 200_000


@dataclass(frozen=True)
class QubitLayout:
    """
    Kubity fizyczne jednego pod-eksperymentu.

    Bit logiczny k rejestru pod-eksperymentu jest mierzony na system_qubits[k].
    Kubity pomocnicze nie są mierzone.
    """

    label: str
    system_qubits: Tuple[int, ...]
    ancilla_qubits: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "system_qubits", tuple(int(q) for q in self.system_qubits))
        object.__setattr__(self, "ancilla_qubits", tuple(int(q) for q in self.ancilla_qubits))
        if not self.label:
            raise NamingError("Układ kubitów musi mieć etykietę")
        qubits = self.qubits
        if len(set(qubits)) != len(qubits):
            raise PlanError(f"Układ '{self.label}' używa tego samego kubitu więcej niż raz")

    @property
    def qubits(self) -> Tuple[int, ...]:
        return self.system_qubits + self.ancilla_qubits

    @property
    def width(self) -> int:
        return len(self.system_qubits)

    def check_on(self, coupling: CouplingMap):
        for q in self.qubits:
            if not 0 <= q < coupling.n_qubits:
                raise PlanError(f"Układ '{self.label}': kubit {q} nie istnieje w grafie")
            if coupling.is_faulty(q):
                raise PlanError(f"Układ '{self.label}': kubit {q} jest oznaczony jako uszkodzony")

    def relabel(self, label: str) -> "QubitLayout":
        return QubitLayout(label, self.system_qubits, self.ancilla_qubits)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "system_qubits": list(self.system_qubits),
            "ancilla_qubits": list(self.ancilla_qubits),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QubitLayout":
        return cls(data["label"], data["system_qubits"], data.get("ancilla_qubits", []))


@dataclass(frozen=True)
class Violation:
    kind: str  # "overlap" albo "distance"
    layout_a: str
    layout_b: str
    qubit_a: int
    qubit_b: int
    distance: float

    def __str__(self):
        if self.kind == "overlap":
            return f"kubit {self.qubit_a} współdzielony przez '{self.layout_a}' i '{self.layout_b}'"
        return (
            f"kubity {self.qubit_a} ('{self.layout_a}') i {self.qubit_b} ('{self.layout_b}') "
            f"w odległości {self.distance}"
        )


class PartitionPlan:
    """Rozłączne układy kubitów na jednym grafie z wymaganym buforem bezczynnych kubitów."""

    def __init__(self, coupling: CouplingMap, layouts: Sequence[QubitLayout], min_buffer: int = DEFAULT_MIN_BUFFER):
        if min_buffer < 0:
            raise ArgumentError(f"min_buffer musi być >= 0, podano {min_buffer}")
        labels = [layout.label for layout in layouts]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise NamingError(f"Powtórzone etykiety układów: {', '.join(duplicates)}")
        for layout in layouts:
            layout.check_on(coupling)
        self.coupling = coupling
        self.layouts: Tuple[QubitLayout, ...] = tuple(layouts)
        self.min_buffer = int(min_buffer)

    @property
    def labels(self) -> List[str]:
        return [layout.label for layout in self.layouts]

    @property
    def registers(self) -> "OrderedDict[str, int]":
        return OrderedDict((layout.label, layout.width) for layout in self.layouts)

    @property
    def total_width(self) -> int:
        return sum(layout.width for layout in self.layouts)

    def layout(self, label: str) -> QubitLayout:
        for layout in self.layouts:
            if layout.label == label:
                return layout
        raise NamingError(f"Plan nie zawiera układu '{label}'")

    def relabel(self, labels: Sequence[str]) -> "PartitionPlan":
        if len(labels) != len(self.layouts):
            raise ArgumentError(f"Podano {len(labels)} etykiet dla {len(self.layouts)} układów")
        layouts = [layout.relabel(label) for layout, label in zip(self.layouts, labels)]
        return PartitionPlan(self.coupling, layouts, self.min_buffer)

    def to_dict(self) -> dict:
        return {
            "coupling_map": self.coupling.to_dict(),
            "min_buffer": self.min_buffer,
            "layouts": [layout.to_dict() for layout in self.layouts],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PartitionPlan":
        try:
            coupling = CouplingMap.from_dict(data["coupling_map"])
            layouts = [QubitLayout.from_dict(item) for item in data["layouts"]]
            min_buffer = data.get("min_buffer", DEFAULT_MIN_BUFFER)
        except (KeyError, TypeError) as e:
            raise FormatError(f"Niepoprawny plan podziału: brak lub zły typ pola {e}") from e
        return cls(coupling, layouts, min_buffer)

    def __str__(self):
        parts = ", ".join(f"{layout.label}[{layout.width}+{len(layout.ancilla_qubits)}]" for layout in self.layouts)
        return f"Plan ({self.coupling.name}, bufor {self.min_buffer}): {parts}"


def load_plan(path: str) -> PartitionPlan:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"Plik planu '{path}' nie jest poprawnym JSON: {e}") from e
    return PartitionPlan.from_dict(data)


def save_plan(plan: PartitionPlan, path: str):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(plan.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def bundled_plan_names() -> List[str]:
    folder = get_data_path("plans")
    if not os.path.isdir(folder):
        return []
    names = []
    for filename in sorted(os.listdir(folder)):
        if filename.startswith("layout_") and filename.endswith(".json"):
            names.append(filename[len("layout_"):-len(".json")])
    return names


def bundled_plan(name: str) -> PartitionPlan:
    """Wczytuje dołączony plan, np. 'buffer1' z data/plans/layout_buffer1.json."""
    path = get_data_path("plans", f"layout_{name}.json")
    if not os.path.isfile(path):
        available = ", ".join(bundled_plan_names()) or "brak"
        raise ArgumentError(f"Nieznany plan '{name}' (dostępne: {available})")
    return load_plan(path)


def validate_partition(plan: PartitionPlan) -> List[Violation]:
    """
    Zwraca listę naruszeń planu; pusta lista oznacza plan poprawny.

    Naruszeniem jest kubit współdzielony przez dwa układy oraz każda para
    kubitów z różnych układów w odległości mniejszej niż min_buffer + 1.
    """
    violations = []
    required = plan.min_buffer + 1
    layouts = plan.layouts
    for i in range(len(layouts)):
        for j in range(i + 1, len(layouts)):
            a, b = layouts[i], layouts[j]
            for q in sorted(set(a.qubits) & set(b.qubits)):
                violations.append(Violation("overlap", a.label, b.label, q, q, 0))
            for qa in sorted(a.qubits):
                for qb in sorted(b.qubits):
                    if qa == qb:
                        continue
                    d = plan.coupling.distance(qa, qb)
                    if d < required:
                        violations.append(Violation("distance", a.label, b.label, qa, qb, d))
    return violations


def _simple_paths(coupling: CouplingMap, start: int, length: int, usable: Set[int]):
    """Ścieżki proste o `length` kubitach z `start`, sąsiedzi w kolejności rosnącej."""
    path = [start]
    on_path = {start}
    stack = [iter(coupling.neighbors(start))]
    expansions = 0
    if length == 1:
        yield list(path)
        return
    while stack:
        advanced = False
        for nxt in stack[-1]:
            if nxt in on_path or nxt not in usable:
                continue
            expansions += 1
            if expansions > _MAX_DFS_EXPANSIONS:
                return
            path.append(nxt)
            on_path.add(nxt)
            if len(path) == length:
                yield list(path)
                path.pop()
                on_path.discard(nxt)
                continue
            stack.append(iter(coupling.neighbors(nxt)))
            advanced = True
            break
        if not advanced:
            stack.pop()
            on_path.discard(path.pop())


def _attach_ancillas(
    coupling: CouplingMap, chain: List[int], n_ancilla: int, usable: Set[int]
) -> Optional[List[int]]:
    # każdy kubit łańcucha dostaje co najwyżej jeden sąsiedni mostek
    ancillas = []
    for q in chain:
        if len(ancillas) == n_ancilla:
            break
        for nb in coupling.neighbors(q):
            if coupling.is_bridge(nb) and nb in usable and nb not in ancillas:
                ancillas.append(nb)
                break
    return ancillas if len(ancillas) == n_ancilla else None


def plan_zigzag_layout(
    coupling: CouplingMap,
    norb: int,
    n_ancilla: int = DEFAULT_N_ANCILLA,
    anchor: int = 0,
    label: str = "experiment",
    forbidden: Iterable[int] = (),
) -> QubitLayout:
    """
    Buduje spójny łańcuch 2M kubitów od kotwicy i dołącza kubity pomocnicze.

    Kolejne kubity łańcucha są sąsiadami w grafie, a sam łańcuch omija kubity
    mostkowe. Kubity pomocnicze to różne mostki sąsiadujące z łańcuchem, każdy
    przy innym kubicie łańcucha. Gdy od kotwicy nie da się ułożyć układu,
    próbowane są kolejne kotwice w kolejności (odległość od kotwicy, numer).

    Raises:
        PlacementError: gdy żadna kotwica nie daje poprawnego układu.
    """
    if norb < 1 or n_ancilla < 0:
        raise ArgumentError(f"Niepoprawne rozmiary układu: M={norb}, n_ancilla={n_ancilla}")
    forbidden = set(forbidden)
    usable = {q for q in coupling.usable_qubits() if q not in forbidden}
    chain_usable = {q for q in usable if not coupling.is_bridge(q)}
    n_system = 2 * norb
    if len(chain_usable) < n_system:
        raise PlacementError(
            f"Za mało dostępnych kubitów na łańcuch: {len(chain_usable)} < {n_system} (uszkodzone, zajęte lub mostkowe)"
        )
    free_bridges = len(usable) - len(chain_usable)
    if free_bridges < n_ancilla:
        raise PlacementError(
            f"Za mało wolnych kubitów mostkowych na {n_ancilla} kubitów pomocniczych: {free_bridges}"
        )
    coupling.check_qubit(anchor)

    candidates = sorted(chain_usable, key=lambda q: (coupling.distance(anchor, q), q))
    chain_found = False
    for start in candidates:
        for chain in _simple_paths(coupling, start, n_system, chain_usable):
            chain_found = True
            ancillas = _attach_ancillas(coupling, chain, n_ancilla, usable)
            if ancillas is not None:
                return QubitLayout(label, tuple(chain), tuple(ancillas))

    if not chain_found:
        raise PlacementError(f"Brak spójnego łańcucha {n_system} dostępnych kubitów w grafie {coupling.name}")
    raise PlacementError(
        f"Żaden łańcuch {n_system} kubitów nie sąsiaduje z {n_ancilla} wolnymi kubitami mostkowymi"
    )


def _buffer_zone(coupling: CouplingMap, qubits: Iterable[int], radius: int) -> Set[int]:
    zone = set()
    for q in qubits:
        zone.update(p for p in range(coupling.n_qubits) if coupling.distance(p, q) <= radius)
    return zone


def pack_layouts(
    coupling: CouplingMap,
    labels: Sequence[str],
    norb: int,
    n_ancilla: int = DEFAULT_N_ANCILLA,
    min_buffer: int = DEFAULT_MIN_BUFFER,
) -> PartitionPlan:
    """
    Rozmieszcza układy po kolei, zachłannie.

    Każdy następny układ omija wszystkie kubity w odległości <= min_buffer
    od układów już rozmieszczonych, więc wynik spełnia wymóg bufora.
    """
    if not labels:
        raise ArgumentError("Brak etykiet do rozmieszczenia")
    forbidden: Set[int] = set()
    layouts = []
    for label in labels:
        free = [q for q in coupling.usable_qubits() if q not in forbidden]
        if not free:
            raise PlacementError(f"Brak wolnych kubitów dla układu '{label}'")
        layout = plan_zigzag_layout(coupling, norb, n_ancilla, free[0], label, forbidden)
        layouts.append(layout)
        forbidden |= _buffer_zone(coupling, layout.qubits, min_buffer)
    return PartitionPlan(coupling, layouts, min_buffer)
