"""Graf sprzężeń procesora kwantowego (heavy-hex)"""

import math
import numbers
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx

from src.errors import ArgumentError, FormatError, RangeError


class CouplingMap:
    """
    Nieskierowany graf sprzężeń kubitów fizycznych.

    Kubity mają numery 0..n_qubits-1. Kubity oznaczone jako uszkodzone
    pozostają w grafie (liczą się do odległości), ale nie mogą być
    przydzielone do żadnego układu. Kubity mostkowe łączą sąsiednie wiersze
    siatki i są jedynym miejscem na kubity pomocnicze.
    """

    def __init__(
        self,
        n_qubits: int,
        edges: Iterable[Tuple[int, int]],
        faulty: Iterable[int] = (),
        name: str = "",
        bridges: Iterable[int] = (),
    ):
        if n_qubits < 1:
            raise ArgumentError(f"Graf musi mieć co najmniej 1 kubit, podano {n_qubits}")
        self.n_qubits = int(n_qubits)
        self.name = name

        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_qubits))
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ArgumentError(f"Pętla własna na kubicie {u}")
            for q in (u, v):
                if not 0 <= q < self.n_qubits:
                    raise RangeError(f"Krawędź ({u}, {v}) wychodzi poza kubity 0..{self.n_qubits - 1}")
            graph.add_edge(u, v)
        self.graph = graph

        self.faulty = frozenset(int(q) for q in faulty)
        for q in self.faulty:
            if not 0 <= q < self.n_qubits:
                raise RangeError(f"Uszkodzony kubit {q} poza zakresem 0..{self.n_qubits - 1}")

        self.bridges = frozenset(int(q) for q in bridges)
        for q in self.bridges:
            if not 0 <= q < self.n_qubits:
                raise RangeError(f"Kubit mostkowy {q} poza zakresem 0..{self.n_qubits - 1}")

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return sorted((min(u, v), max(u, v)) for u, v in self.graph.edges)

    def neighbors(self, qubit: int) -> List[int]:
        self.check_qubit(qubit)
        return sorted(self.graph.neighbors(qubit))

    def degree(self, qubit: int) -> int:
        self.check_qubit(qubit)
        return self.graph.degree[qubit]

    @property
    def max_degree(self) -> int:
        return max((d for _, d in self.graph.degree), default=0)

    def is_faulty(self, qubit: int) -> bool:
        return qubit in self.faulty

    def is_bridge(self, qubit: int) -> bool:
        return qubit in self.bridges

    def usable_qubits(self) -> List[int]:
        return [q for q in range(self.n_qubits) if q not in self.faulty]

    def is_connected(self) -> bool:
        return nx.is_connected(self.graph)

    @cached_property
    def _distances(self) -> Dict[int, Dict[int, int]]:
        return dict(nx.all_pairs_shortest_path_length(self.graph))

    def distance(self, u: int, v: int) -> float:
        """Liczba przeskoków między kubitami; math.inf dla rozłącznych składowych."""
        self.check_qubit(u)
        self.check_qubit(v)
        return self._distances[u].get(v, math.inf)

    def with_faults(self, faulty: Iterable[int]) -> "CouplingMap":
        return CouplingMap(self.n_qubits, self.edges, self.faulty | set(faulty), self.name, self.bridges)

    def check_qubit(self, qubit: int):
        if not isinstance(qubit, numbers.Integral) or not 0 <= qubit < self.n_qubits:
            raise RangeError(f"Nieznany kubit {qubit} (graf ma {self.n_qubits} kubitów)")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "edges": [list(e) for e in self.edges],
            "faulty": sorted(self.faulty),
            "bridges": sorted(self.bridges),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CouplingMap":
        try:
            return cls(
                data["n_qubits"],
                [tuple(e) for e in data["edges"]],
                data.get("faulty", []),
                data.get("name", ""),
                data.get("bridges", []),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, (ArgumentError, RangeError)):
                raise
            raise FormatError(f"Niepoprawny opis grafu sprzężeń: {type(e).__name__}: {e}") from e

    def __eq__(self, other):
        if not isinstance(other, CouplingMap):
            return NotImplemented
        return (self.n_qubits, self.edges, self.faulty, self.bridges) == (
            other.n_qubits,
            other.edges,
            other.faulty,
            other.bridges,
        )

    def __str__(self):
        label = self.name or "graf"
        return f"{label}: {self.n_qubits} kubitów, {self.graph.number_of_edges()} krawędzi"


def heavy_hex_map(rows: int, cols: int, faulty: Optional[Iterable[int]] = None) -> CouplingMap:
    """
    Siatka heavy-hex: `rows` poziomych łańcuchów po `cols` kubitów.

    Łańcuchy r i r+1 łączą kubity mostkowe w kolumnach c % 4 == 0 (r parzyste)
    albo c % 4 == 2 (r nieparzyste). Numeracja: łańcuch wiersza, potem mostki
    do następnego wiersza, kolumnami rosnąco.
    """
    if rows < 1 or cols < 2:
        raise ArgumentError(f"heavy-hex wymaga rows >= 1 i cols >= 2, podano ({rows}, {cols})")
    if rows >= 3 and cols < 3:
        raise ArgumentError(f"Przy {rows} wierszach potrzeba cols >= 3, inaczej graf jest rozłączny")

    edges = []
    next_id = 0
    row_start = []
    bridges_of_row = []
    for r in range(rows):
        row_start.append(next_id)
        edges.extend((next_id + c, next_id + c + 1) for c in range(cols - 1))
        next_id += cols
        if r < rows - 1:
            offset = 0 if r % 2 == 0 else 2
            columns = list(range(offset, cols, 4))
            bridges_of_row.append([(next_id + i, c) for i, c in enumerate(columns)])
            next_id += len(columns)
    for r, bridges in enumerate(bridges_of_row):
        for bridge, c in bridges:
            edges.append((row_start[r] + c, bridge))
            edges.append((bridge, row_start[r + 1] + c))
    bridge_ids = [bridge for bridges in bridges_of_row for bridge, _ in bridges]
    return CouplingMap(next_id, edges, faulty or (), name=f"heavy_hex_{rows}x{cols}", bridges=bridge_ids)


def graph_distance(coupling: CouplingMap, u: int, v: int) -> float:
    return coupling.distance(u, v)
