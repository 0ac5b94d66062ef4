"""Symulacja pomiarów: losowanie bitstringów z funkcji falowej, szum odczytu i przesłuchy"""

from dataclasses import asdict, dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.circuit import split_results
from src.determinant import Determinant
from src.errors import ArgumentError, EmptyInputError, NormalizationError, PlanError, RangeError
from src.layout import PartitionPlan, validate_partition
from src.samples import SampleSet
from utils.constants import (
    DEFAULT_P_READOUT,
    DEFAULT_P_XTALK,
    DEFAULT_XTALK_DECAY,
    DEFAULT_XTALK_MAX_HOPS,
)
from utils.helpers import derive_seed, make_rng

Wavefunction = Mapping[Determinant, float]


@dataclass(frozen=True)
class NoiseModel:
    """
    Szum odczytu i przesłuchów.

    Para zmierzonych kubitów z różnych pod-eksperymentów w odległości
    d <= xtalk_max_hops zamienia oba bity z prawdopodobieństwem
    p_xtalk * xtalk_decay**(d-1).
    """

    p_readout: float = DEFAULT_P_READOUT
    p_xtalk: float = DEFAULT_P_XTALK
    xtalk_decay: float = DEFAULT_XTALK_DECAY
    xtalk_max_hops: int = DEFAULT_XTALK_MAX_HOPS

    def __post_init__(self):
        if not 0.0 <= self.p_readout <= 1.0:
            raise ArgumentError(f"p_readout musi leżeć w [0, 1], podano {self.p_readout}")
        if not 0.0 <= self.p_xtalk <= 1.0:
            raise ArgumentError(f"p_xtalk musi leżeć w [0, 1], podano {self.p_xtalk}")
        if not 0.0 < self.xtalk_decay <= 1.0:
            raise ArgumentError(f"xtalk_decay musi leżeć w (0, 1], podano {self.xtalk_decay}")
        if self.xtalk_max_hops < 1:
            raise ArgumentError(f"xtalk_max_hops musi być >= 1, podano {self.xtalk_max_hops}")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(0.0, 0.0, DEFAULT_XTALK_DECAY, DEFAULT_XTALK_MAX_HOPS)

    def pair_probability(self, distance: float) -> float:
        if distance < 1 or distance > self.xtalk_max_hops:
            return 0.0
        return self.p_xtalk * self.xtalk_decay ** (distance - 1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "NoiseModel":
        known = {"p_readout", "p_xtalk", "xtalk_decay", "xtalk_max_hops"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ArgumentError(f"Nieznane pola modelu szumu: {', '.join(unknown)}")
        return cls(**dict(data))


@dataclass(frozen=True)
class CrosstalkPair:
    register_a: str
    bit_a: int
    register_b: str
    bit_b: int
    distance: float
    probability: float


def register_seed(seed: int, label: str) -> int:
    """Ziarno strumienia rejestru, wspólne dla ścieżki szeregowej i równoległej."""
    return derive_seed(seed, "register", label)


def _wavefunction_table(wavefunction: Wavefunction, norb: int) -> Tuple[np.ndarray, np.ndarray]:
    if not wavefunction:
        raise EmptyInputError("Funkcja falowa nie ma żadnych wyznaczników")
    dets = sorted(wavefunction)
    coeffs = np.array([float(wavefunction[d]) for d in dets])
    probs = coeffs**2
    norm = probs.sum()
    if abs(norm - 1.0) > 1e-8:
        raise NormalizationError(f"Funkcja falowa nie jest unormowana: suma |c|^2 = {norm:.12f}")
    shifts = np.arange(norb)
    table = np.zeros((len(dets), 2 * norb), dtype=bool)
    for i, det in enumerate(dets):
        if not det.is_valid(norb):
            raise RangeError(f"Wyznacznik {det} ma bity poza zakresem [0, {norb})")
        table[i, :norb] = (det.alpha_occ >> shifts) & 1
        table[i, norb:] = (det.beta_occ >> shifts) & 1
    return table, probs / norm


def _draw_bits(wavefunction: Wavefunction, norb: int, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Macierz (shots, 2M): kolumna k to bit logiczny k."""
    table, probs = _wavefunction_table(wavefunction, norb)
    return table[rng.choice(len(probs), size=shots, p=probs)]


def _apply_readout(bits: np.ndarray, p_readout: float, rng: np.random.Generator):
    if p_readout > 0:
        bits ^= rng.random(bits.shape) < p_readout


def _bits_to_samples(bits: np.ndarray, label: str) -> SampleSet:
    if bits.shape[0] == 0:
        return SampleSet({}, label)
    rows, counts = np.unique(bits, axis=0, return_counts=True)
    # najwyższy bit logiczny jako pierwszy znak
    keys = ["".join("1" if b else "0" for b in row[::-1]) for row in rows]
    return SampleSet(dict(zip(keys, (int(c) for c in counts))), label)


def _check_shots(shots: int):
    if shots < 1:
        raise ArgumentError(f"Liczba strzałów musi być >= 1, podano {shots}")


def sample_counts(
    wavefunction: Wavefunction,
    norb: int,
    shots: int,
    noise: Optional[NoiseModel] = None,
    seed: int = 0,
    label: str = "",
) -> SampleSet:
    """
    Losuje `shots` niezależnych pomiarów z rozkładu |c_x|^2 i dodaje szum odczytu.

    Raises:
        NormalizationError: suma |c|^2 różni się od 1 o więcej niż 1e-8.
    """
    _check_shots(shots)
    noise = noise or NoiseModel.noiseless()
    rng = make_rng(seed)
    bits = _draw_bits(wavefunction, norb, shots, rng)
    _apply_readout(bits, noise.p_readout, rng)
    return _bits_to_samples(bits, label)


def _register_offsets(plan: PartitionPlan) -> Dict[str, int]:
    offsets, offset = {}, 0
    for label, width in plan.registers.items():
        offsets[label] = offset
        offset += width
    return offsets


def crosstalk_pairs(plan: PartitionPlan, noise: NoiseModel) -> List[CrosstalkPair]:
    """Pary zmierzonych bitów z różnych rejestrów w zasięgu przesłuchu, w ustalonej kolejności."""
    pairs = []
    layouts = plan.layouts
    for i in range(len(layouts)):
        for j in range(i + 1, len(layouts)):
            a, b = layouts[i], layouts[j]
            for bit_a, qa in enumerate(a.system_qubits):
                for bit_b, qb in enumerate(b.system_qubits):
                    d = plan.coupling.distance(qa, qb)
                    if 1 <= d <= noise.xtalk_max_hops:
                        pairs.append(
                            CrosstalkPair(a.label, bit_a, b.label, bit_b, d, noise.pair_probability(d))
                        )
    return pairs


def expected_crosstalk_flips(plan: PartitionPlan, noise: NoiseModel) -> float:
    """Oczekiwana liczba zamienionych par na jeden strzał."""
    return float(sum(pair.probability for pair in crosstalk_pairs(plan, noise)))


def _apply_crosstalk_bits(bits: np.ndarray, plan: PartitionPlan, noise: NoiseModel, rng: np.random.Generator):
    offsets = _register_offsets(plan)
    for pair in crosstalk_pairs(plan, noise):
        if pair.probability <= 0:
            continue
        flips = rng.random(bits.shape[0]) < pair.probability
        bits[flips, offsets[pair.register_a] + pair.bit_a] ^= True
        bits[flips, offsets[pair.register_b] + pair.bit_b] ^= True


def apply_crosstalk(joint_bits: str, plan: PartitionPlan, noise: NoiseModel, rng: np.random.Generator) -> str:
    """
    Przesłuchy na jednym złożonym bitstringu.

    Raises:
        PlanError: szerokość bitstringu różna od liczby zmierzonych kubitów planu.
    """
    width = plan.total_width
    if len(joint_bits) != width:
        raise PlanError(f"Bitstring ma {len(joint_bits)} bitów, plan mierzy {width} kubitów")
    bits = np.array([[c == "1" for c in reversed(joint_bits)]], dtype=bool)
    _apply_crosstalk_bits(bits, plan, noise, rng)
    return "".join("1" if b else "0" for b in bits[0][::-1])


def _labeled(wavefns) -> List[Tuple[str, Wavefunction]]:
    return list(wavefns.items()) if isinstance(wavefns, Mapping) else list(wavefns)


def sample_parallel_joint(
    wavefns: Union[Mapping[str, Wavefunction], Sequence[Tuple[str, Wavefunction]]],
    plan: PartitionPlan,
    shots: int,
    noise: Optional[NoiseModel] = None,
    seed: int = 0,
) -> SampleSet:
    """
    Złożone pomiary równoległego zadania.

    Kolejność na strzał: losowanie każdego rejestru z jego strumienia,
    przesłuchy na złożonym bitstringu, szum odczytu z tego samego strumienia
    rejestru. Pierwszy rejestr planu zajmuje najmłodsze bity klucza.

    Raises:
        PlanError: układy planu nachodzą na siebie albo etykiety się nie zgadzają.
    """
    _check_shots(shots)
    noise = noise or NoiseModel.noiseless()
    items = dict(_labeled(wavefns))
    if sorted(items) != sorted(plan.labels):
        raise PlanError(f"Funkcje falowe {sorted(items)} nie odpowiadają układom planu {plan.labels}")
    overlaps = [v for v in validate_partition(plan) if v.kind == "overlap"]
    if overlaps:
        raise PlanError("Układy planu nachodzą na siebie: " + "; ".join(str(v) for v in overlaps))

    rngs, blocks = [], []
    for layout in plan.layouts:
        if layout.width % 2:
            raise PlanError(f"Układ '{layout.label}' ma nieparzystą liczbę kubitów systemowych")
        rng = make_rng(register_seed(seed, layout.label))
        blocks.append(_draw_bits(items[layout.label], layout.width // 2, shots, rng))
        rngs.append(rng)
    bits = np.hstack(blocks)

    if noise.p_xtalk > 0:
        _apply_crosstalk_bits(bits, plan, noise, make_rng(derive_seed(seed, "crosstalk")))

    offset = 0
    for layout, rng in zip(plan.layouts, rngs):
        block = bits[:, offset:offset + layout.width]
        _apply_readout(block, noise.p_readout, rng)
        offset += layout.width
    return _bits_to_samples(bits, "+".join(plan.labels))


def sample_parallel(
    wavefns: Union[Mapping[str, Wavefunction], Sequence[Tuple[str, Wavefunction]]],
    plan: PartitionPlan,
    shots: int,
    noise: Optional[NoiseModel] = None,
    seed: int = 0,
) -> List[SampleSet]:
    """Próbki równoległego zadania rozdzielone na rejestry, w kolejności układów planu."""
    joint = sample_parallel_joint(wavefns, plan, shots, noise, seed)
    return list(split_results(joint, plan).values())
