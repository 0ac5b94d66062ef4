"""Abstrakcyjne obwody: składanie pod-eksperymentów, upraszczanie i rozdział wyników"""

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from src.errors import ArgumentError, FormatError, NamingError, PlanError
from src.layout import PartitionPlan, QubitLayout, validate_partition
from src.samples import SampleSet
from utils.constants import DEFAULT_ANGLE_TOL
from utils.helpers import derive_seed, make_rng


@dataclass(frozen=True)
class Gate:
    """Bramka nieprzezroczysta: nazwa, kubity i opcjonalny kąt obrotu w radianach."""

    name: str
    qubits: Tuple[int, ...]
    angle: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise ArgumentError(f"Bramka {self.name} działa dwa razy na ten sam kubit: {self.qubits}")

    @property
    def is_rotation(self) -> bool:
        return self.angle is not None

    def to_dict(self) -> dict:
        data = {"name": self.name, "qubits": list(self.qubits)}
        if self.angle is not None:
            data["angle"] = self.angle
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Gate":
        angle = data.get("angle")
        return cls(data["name"], tuple(data["qubits"]), None if angle is None else float(angle))


class AbstractCircuit:
    """
    Ciąg bramek z rejestrami klasycznymi.

    measurements: kubit fizyczny -> (etykieta rejestru, indeks bitu).
    Każdy bit każdego rejestru jest mierzony dokładnie raz.
    """

    def __init__(
        self,
        qubits: Iterable[int],
        gates: Sequence[Gate],
        registers: Mapping[str, int],
        measurements: Mapping[int, Tuple[str, int]],
        metadata: Optional[dict] = None,
    ):
        self.qubits: Tuple[int, ...] = tuple(sorted(set(int(q) for q in qubits)))
        qubit_set = set(self.qubits)
        for gate in gates:
            missing = [q for q in gate.qubits if q not in qubit_set]
            if missing:
                raise PlanError(f"Bramka {gate.name} używa kubitów spoza obwodu: {missing}")
        self.gates: Tuple[Gate, ...] = tuple(gates)
        self.registers: "OrderedDict[str, int]" = OrderedDict((str(k), int(v)) for k, v in registers.items())

        seen = {}
        for qubit, (label, bit) in measurements.items():
            if qubit not in qubit_set:
                raise PlanError(f"Pomiar kubitu {qubit} spoza obwodu")
            if label not in self.registers or not 0 <= bit < self.registers[label]:
                raise PlanError(f"Pomiar kubitu {qubit} do nieistniejącego bitu {label}[{bit}]")
            if (label, bit) in seen:
                raise PlanError(f"Bit {label}[{bit}] mierzony z kubitów {seen[(label, bit)]} i {qubit}")
            seen[(label, bit)] = qubit
        for label, size in self.registers.items():
            measured = sum(1 for (reg, _) in seen if reg == label)
            if measured != size:
                raise PlanError(f"Rejestr '{label}' ma {size} bitów, a zmierzono {measured}")
        self.measurements: Dict[int, Tuple[str, int]] = {
            int(q): (label, int(bit)) for q, (label, bit) in sorted(measurements.items())
        }
        self.metadata = dict(metadata or {})

    @property
    def measured_width(self) -> int:
        return sum(self.registers.values())

    def measured_qubits(self, label: str) -> List[int]:
        """Kubity rejestru w kolejności bitów."""
        if label not in self.registers:
            raise NamingError(f"Obwód nie ma rejestru '{label}'")
        by_bit = {bit: q for q, (reg, bit) in self.measurements.items() if reg == label}
        return [by_bit[k] for k in range(self.registers[label])]

    def count_ops(self) -> Dict[str, int]:
        ops: Dict[str, int] = {}
        for gate in self.gates:
            ops[gate.name] = ops.get(gate.name, 0) + 1
        return dict(sorted(ops.items()))

    def with_gates(self, gates: Sequence[Gate]) -> "AbstractCircuit":
        return AbstractCircuit(self.qubits, gates, self.registers, self.measurements, self.metadata)

    def __eq__(self, other):
        if not isinstance(other, AbstractCircuit):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return (
            f"AbstractCircuit(qubits={len(self.qubits)}, gates={len(self.gates)}, "
            f"registers={dict(self.registers)})"
        )

    def to_dict(self) -> dict:
        return {
            "qubits": list(self.qubits),
            "gates": [gate.to_dict() for gate in self.gates],
            "registers": [[label, size] for label, size in self.registers.items()],
            "measurements": [[q, label, bit] for q, (label, bit) in self.measurements.items()],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AbstractCircuit":
        try:
            return cls(
                data["qubits"],
                [Gate.from_dict(g) for g in data["gates"]],
                OrderedDict((label, size) for label, size in data["registers"]),
                {q: (label, bit) for q, label, bit in data["measurements"]},
                data.get("metadata"),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, (ArgumentError, PlanError)):
                raise
            raise FormatError(f"Niepoprawny opis obwodu: {type(e).__name__}: {e}") from e


def skeleton_circuit(
    layout: QubitLayout, n_alpha: int, n_beta: int, n_layers: int = 1, seed: int = 0
) -> AbstractCircuit:
    """
    Szkielet obwodu o kształcie ansatzu na kubitach układu.

    Przygotowanie stanu odniesienia bramkami x, potem n_layers warstw:
    obroty rz, xx_plus_yy wzdłuż łańcuchów alfa i beta, rzz przez kubity
    pomocnicze. Kąty losowane deterministycznie z ziarna.
    """
    width = layout.width
    if width % 2:
        raise PlanError(f"Układ '{layout.label}' ma nieparzystą liczbę kubitów systemowych ({width})")
    norb = width // 2
    if not (0 <= n_alpha <= norb and 0 <= n_beta <= norb):
        raise ArgumentError(f"Liczby elektronów ({n_alpha}, {n_beta}) przekraczają M={norb}")
    rng = make_rng(derive_seed(seed, "skeleton", layout.label))
    system = layout.system_qubits
    alpha, beta = system[:norb], system[norb:]

    gates = [Gate("x", (alpha[k],)) for k in range(n_alpha)]
    gates += [Gate("x", (beta[k],)) for k in range(n_beta)]
    for _ in range(n_layers):
        gates += [Gate("rz", (q,), float(rng.uniform(-math.pi, math.pi))) for q in system]
        for chain in (alpha, beta):
            for k in range(norb - 1):
                gates.append(Gate("xx_plus_yy", (chain[k], chain[k + 1]), float(rng.uniform(-math.pi, math.pi))))
        for j, ancilla in enumerate(layout.ancilla_qubits):
            gates.append(Gate("rzz", (alpha[j % norb], ancilla), float(rng.uniform(-math.pi, math.pi))))
            gates.append(Gate("rzz", (ancilla, beta[j % norb]), float(rng.uniform(-math.pi, math.pi))))

    measurements = {q: (layout.label, k) for k, q in enumerate(system)}
    return AbstractCircuit(layout.qubits, gates, {layout.label: width}, measurements, {"labels": [layout.label]})


def compose_experiments(
    subcircuits: Union[Mapping[str, AbstractCircuit], Sequence[Tuple[str, AbstractCircuit]]],
    plan: PartitionPlan,
) -> AbstractCircuit:
    """
    Składa obwody pod-eksperymentów w jeden obwód na planie podziału.

    Bramki trafiają w kolejności układów planu, a w obrębie układu w
    oryginalnej kolejności. Każda etykieta dostaje własny rejestr, do którego
    mierzone są kubity systemowe jej układu.

    Raises:
        NamingError: powtórzona etykieta.
        PlanError: obwód niezgodny z układem albo plan z naruszeniami.
    """
    items = list(subcircuits.items()) if isinstance(subcircuits, Mapping) else list(subcircuits)
    labels = [label for label, _ in items]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise NamingError(f"Powtórzone etykiety pod-eksperymentów: {', '.join(duplicates)}")
    by_label = dict(items)
    if set(by_label) != set(plan.labels):
        raise PlanError(
            f"Etykiety obwodów {sorted(by_label)} nie odpowiadają układom planu {sorted(plan.labels)}"
        )
    violations = validate_partition(plan)
    if violations:
        raise PlanError("Plan podziału jest niepoprawny: " + "; ".join(str(v) for v in violations))

    qubits: List[int] = []
    gates: List[Gate] = []
    registers: "OrderedDict[str, int]" = OrderedDict()
    measurements: Dict[int, Tuple[str, int]] = {}
    for layout in plan.layouts:
        circuit = by_label[layout.label]
        outside = sorted(set(circuit.qubits) - set(layout.qubits))
        if outside:
            raise PlanError(f"Obwód '{layout.label}' używa kubitów spoza swojego układu: {outside}")
        if circuit.measured_width != layout.width or len(circuit.registers) != 1:
            raise PlanError(
                f"Obwód '{layout.label}' musi mierzyć jeden rejestr {layout.width} bitów, "
                f"ma {dict(circuit.registers)}"
            )
        (own_register,) = circuit.registers
        if circuit.measured_qubits(own_register) != list(layout.system_qubits):
            raise PlanError(f"Pomiary obwodu '{layout.label}' nie odpowiadają kubitom systemowym układu")
        qubits.extend(layout.qubits)
        gates.extend(circuit.gates)
        registers[layout.label] = layout.width
        for k, q in enumerate(layout.system_qubits):
            measurements[q] = (layout.label, k)

    return AbstractCircuit(qubits, gates, registers, measurements, {"labels": plan.labels})


def _near_identity(angle: float, tol: float) -> bool:
    return abs((angle + math.pi) % (2 * math.pi) - math.pi) <= tol


def _peephole_pass(gates: Sequence[Gate], angle_tol: float) -> Tuple[List[Optional[Gate]], bool]:
    out: List[Optional[Gate]] = []
    last_on: Dict[int, int] = {}
    changed = False
    for gate in gates:
        if gate.is_rotation and _near_identity(gate.angle, angle_tol):
            changed = True
            continue
        if gate.is_rotation:
            previous = {last_on.get(q) for q in gate.qubits}
            if len(previous) == 1:
                (i,) = previous
                if i is not None:
                    prior = out[i]
                    if prior.is_rotation and prior.name == gate.name and prior.qubits == gate.qubits:
                        out[i] = Gate(gate.name, gate.qubits, prior.angle + gate.angle)
                        changed = True
                        continue
        out.append(gate)
        for q in gate.qubits:
            last_on[q] = len(out) - 1
    return out, changed


def peephole_simplify(circuit: AbstractCircuit, angle_tol: float = DEFAULT_ANGLE_TOL) -> AbstractCircuit:
    """
    Usuwa obroty bliskie identyczności i scala kolejne obroty tego samego typu.

    Obrót łączy się z wcześniejszym, gdy tamten ma tę samą nazwę i te same
    kubity oraz jest ostatnią bramką na każdym z nich. Przebiegi powtarzane
    są do punktu stałego. Bramki bez kąta zostają nietknięte.
    """
    gates = list(circuit.gates)
    changed = True
    while changed:
        gates, changed = _peephole_pass(gates, angle_tol)
    return circuit.with_gates(gates)


def split_results(
    samples: Union[SampleSet, Iterable[str]],
    source,
) -> "OrderedDict[str, SampleSet]":
    """
    Rozdziela złożone bitstringi na rejestry pod-eksperymentów.

    `source` to obwód albo plan z uporządkowanym `registers`. Pierwszy rejestr
    zajmuje najmłodsze bity, czyli ostatnie znaki klucza.

    Raises:
        FormatError: szerokość klucza różna od sumy szerokości rejestrów.
    """
    registers = list(source.registers.items())
    total = sum(width for _, width in registers)
    counts = samples.counts if isinstance(samples, SampleSet) else SampleSet.from_shots(samples).counts

    split: "OrderedDict[str, Dict[str, int]]" = OrderedDict((label, {}) for label, _ in registers)
    for key, count in counts.items():
        if len(key) != total:
            raise FormatError(f"Klucz '{key}' ma {len(key)} bitów, rejestry mają razem {total}")
        end = len(key)
        for label, width in registers:
            part = key[end - width:end]
            end -= width
            split[label][part] = split[label].get(part, 0) + count
    return OrderedDict((label, SampleSet(part_counts, label)) for label, part_counts in split.items())
