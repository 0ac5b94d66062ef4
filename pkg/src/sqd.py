"""Samospójna pętla SQD z odtwarzaniem konfiguracji i krok ext-SQD"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from src.determinant import (
    Determinant,
    decode_bitstring,
    encode_determinant,
    hamming_weights,
    hartree_fock_det,
    occupation_numbers,
    project_hamiltonian,
    single_excitations,
)
from src.eigensolver import EigenResult, lowest_eigenpair
from src.errors import ArgumentError, ConfigError, EmptyInputError, LengthError
from src.hamiltonian import FermionHamiltonian
from src.samples import SampleSet
from utils import console
from utils.constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_CARRYOVER_THRESHOLD,
    DEFAULT_ENERGY_TOL,
    DEFAULT_EXTSQD_CI_THRESHOLD,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_N_BATCHES,
    DEFAULT_OCCUPANCY_TOL,
    RECOVERY_EPSILON,
)
from utils.helpers import derive_seed, make_rng

# Obsadzenia spin-orbitali: blok alfa (M wartości), potem blok beta
OccupancyVector = np.ndarray


@dataclass(frozen=True)
class SqdConfig:
    n_batches: int = DEFAULT_N_BATCHES
    batch_size: int = DEFAULT_BATCH_SIZE
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    energy_tol: float = DEFAULT_ENERGY_TOL
    occupancy_tol: float = DEFAULT_OCCUPANCY_TOL
    carryover_threshold: float = DEFAULT_CARRYOVER_THRESHOLD
    extsqd_ci_threshold: float = DEFAULT_EXTSQD_CI_THRESHOLD
    seed: int = 0
    workers: int = 1
    verbose: bool = False

    def __post_init__(self):
        if self.n_batches < 1:
            raise ConfigError(f"n_batches musi być >= 1, podano {self.n_batches}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size musi być >= 1, podano {self.batch_size}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations musi być >= 1, podano {self.max_iterations}")
        if self.workers < 1:
            raise ConfigError(f"workers musi być >= 1, podano {self.workers}")
        for name in ("energy_tol", "occupancy_tol", "carryover_threshold", "extsqd_ci_threshold"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} musi być > 0, podano {getattr(self, name)}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SqdConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Nieznane pola konfiguracji SQD: {', '.join(unknown)}")
        return cls(**dict(data))


@dataclass
class SqdIteration:
    iteration: int
    batch_energies: List[float]
    min_energy: float
    occupancies: List[float]
    batch_dimensions: List[int]
    carryover_size: int
    recovered_shots: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SqdTrace:
    norb: int
    n_alpha: int
    n_beta: int
    iterations: List[SqdIteration] = field(default_factory=list)
    basis: List[Determinant] = field(default_factory=list)
    vector: Optional[np.ndarray] = None
    convergence_reason: str = ""
    discarded: int = 0
    total_shots: int = 0
    e_ext: Optional[float] = None
    ext_dimension: Optional[int] = None

    @property
    def e_first(self) -> float:
        return self.iterations[0].min_energy

    @property
    def e_last(self) -> float:
        return self.iterations[-1].min_energy

    @property
    def discarded_fraction(self) -> float:
        return self.discarded / self.total_shots if self.total_shots else 0.0

    def to_dict(self) -> dict:
        return {
            "norb": self.norb,
            "n_alpha": self.n_alpha,
            "n_beta": self.n_beta,
            "convergence_reason": self.convergence_reason,
            "e_first": self.e_first,
            "e_last": self.e_last,
            "e_ext": self.e_ext,
            "ext_dimension": self.ext_dimension,
            "discarded": self.discarded,
            "total_shots": self.total_shots,
            "discarded_fraction": self.discarded_fraction,
            "iterations": [it.to_dict() for it in self.iterations],
            "basis": [encode_determinant(d, self.norb) for d in self.basis],
            "vector": [] if self.vector is None else [float(c) for c in self.vector],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def postselect(samples: SampleSet, norb: int, n_alpha: int, n_beta: int) -> Tuple[SampleSet, int]:
    """Zostawia tylko bitstringi o wagach Hamminga (n_alpha, n_beta)."""
    physical = {
        key: count
        for key, count in samples.counts.items()
        if hamming_weights(key, norb) == (n_alpha, n_beta)
    }
    kept = SampleSet(physical, samples.label)
    return kept, samples.shots - kept.shots


def estimate_occupancies(physical: SampleSet, norb: int) -> OccupancyVector:
    """Średnie obsadzenie każdego spin-orbitalu ważone licznościami."""
    if physical.shots == 0:
        raise EmptyInputError("Brak fizycznych próbek do oszacowania obsadzeń")
    if physical.width != 2 * norb:
        raise LengthError(f"Próbki mają {physical.width} bitów, oczekiwano {2 * norb}")
    keys = list(physical.counts)
    # kolumna k to bit logiczny k, czyli znak 2M-1-k
    bits = np.array([[c == "1" for c in reversed(key)] for key in keys], dtype=float)
    weights = np.array([physical.counts[key] for key in keys], dtype=float)
    return weights @ bits / weights.sum()


def _repair_sector(bits: List[bool], occ: np.ndarray, target: int, rng: np.random.Generator):
    weight = sum(bits)
    if weight == target:
        return
    if weight > target:
        candidates = [p for p, b in enumerate(bits) if b]
        w = np.array([1.0 - occ[p] for p in candidates]) + RECOVERY_EPSILON
        n_flip = weight - target
    else:
        candidates = [p for p, b in enumerate(bits) if not b]
        w = np.array([occ[p] for p in candidates]) + RECOVERY_EPSILON
        n_flip = target - weight
    w = np.clip(w, RECOVERY_EPSILON, None)
    chosen = rng.choice(len(candidates), size=n_flip, replace=False, p=w / w.sum())
    for i in chosen:
        bits[candidates[i]] = not bits[candidates[i]]


def recover_configuration(
    bits: str,
    occ: OccupancyVector,
    norb: int,
    n_alpha: int,
    n_beta: int,
    rng: np.random.Generator,
) -> str:
    """
    Naprawia wagę Hamminga każdego sektora spinowego.

    Przy nadmiarze gaszone są ustawione bity z wagami (1 - n_p) + eps,
    przy niedoborze zapalane są puste bity z wagami n_p + eps, losowo bez
    zwracania. Fizyczny bitstring wraca bez zmian.
    """
    if len(bits) != 2 * norb:
        raise LengthError(f"Bitstring '{bits}' ma długość {len(bits)}, oczekiwano {2 * norb}")
    logical = [c == "1" for c in reversed(bits)]
    alpha, beta = logical[:norb], logical[norb:]
    occ = np.asarray(occ, dtype=float)
    _repair_sector(alpha, occ[:norb], n_alpha, rng)
    _repair_sector(beta, occ[norb:], n_beta, rng)
    return "".join("1" if b else "0" for b in reversed(alpha + beta))


def recover_samples(
    samples: SampleSet, occ: OccupancyVector, norb: int, n_alpha: int, n_beta: int, rng: np.random.Generator
) -> Tuple[SampleSet, int]:
    """X_R: fizyczne próbki bez zmian plus naprawione niefizyczne (liczność przechodzi na wynik)."""
    recovered: Dict[str, int] = {}
    n_recovered = 0
    for key, count in samples.counts.items():
        if hamming_weights(key, norb) != (n_alpha, n_beta):
            key = recover_configuration(key, occ, norb, n_alpha, n_beta, rng)
            n_recovered += count
        recovered[key] = recovered.get(key, 0) + count
    return SampleSet(recovered, samples.label), n_recovered


def make_batches(
    recovered: SampleSet,
    cfg: SqdConfig,
    carryover: Iterable[Determinant],
    rng: np.random.Generator,
) -> List[List[Determinant]]:
    """
    K partii wyznaczników: batch_size losowań ze zwracaniem z rozkładu
    empirycznego, bez powtórzeń, z dołączonym zbiorem przeniesionym.
    """
    if recovered.shots == 0:
        raise EmptyInputError("Brak próbek do podziału na partie")
    norb = recovered.width // 2
    keys = list(recovered.counts)
    dets = [decode_bitstring(key, norb) for key in keys]
    probs = np.array([recovered.counts[key] for key in keys], dtype=float)
    probs /= probs.sum()
    carry = set(carryover)

    child_seeds = rng.integers(0, 2**63 - 1, size=cfg.n_batches, dtype=np.int64)
    batches = []
    for child_seed in child_seeds:
        child = make_rng(int(child_seed))
        drawn = np.unique(child.choice(len(keys), size=cfg.batch_size, p=probs))
        batches.append(sorted({dets[i] for i in drawn} | carry))
    return batches


def _solve_batch(ham: FermionHamiltonian, batch: Sequence[Determinant]) -> EigenResult:
    matrix = project_hamiltonian(ham, batch)
    hf = hartree_fock_det(ham.norb, ham.n_alpha, ham.n_beta)
    guess = matrix.index_of(hf) if hf in matrix else None
    return lowest_eigenpair(matrix, guess_index=guess)


def _solve_batches(ham: FermionHamiltonian, batches: List[List[Determinant]], workers: int) -> List[EigenResult]:
    if workers == 1 or len(batches) == 1:
        return [_solve_batch(ham, batch) for batch in batches]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda batch: _solve_batch(ham, batch), batches))


def _batch_occupancies(batch: Sequence[Determinant], vector: np.ndarray, norb: int) -> np.ndarray:
    return (vector**2) @ occupation_numbers(batch, norb)


def sqd_run(ham: FermionHamiltonian, samples: SampleSet, cfg: SqdConfig = SqdConfig()) -> SqdTrace:
    """
    Pętla SQD: postselekcja, odtwarzanie konfiguracji, partie, diagonalizacja.

    Obsadzenia z próbek fizycznych zasilają pierwszą iterację, dalej są
    średnią po K partiach z ich wektorów własnych. Stop, gdy zmiana
    najniższej energii < energy_tol albo zmiana obsadzeń < occupancy_tol
    (od drugiej iteracji), albo po max_iterations. Iteracja, której najlepsza
    partia powtarza poprzednią, a nie zawiera wszystkich odtworzonych
    konfiguracji, nie kończy pętli.

    Raises:
        EmptyInputError: nie przetrwała żadna fizyczna próbka.
    """
    norb = ham.norb
    if samples.width != 2 * norb:
        raise LengthError(f"Próbki mają {samples.width} bitów, hamiltonian wymaga {2 * norb}")
    physical, discarded = postselect(samples, norb, ham.n_alpha, ham.n_beta)
    if physical.shots == 0:
        raise EmptyInputError(f"Żadna z {samples.shots} próbek nie ma poprawnych wag Hamminga")

    trace = SqdTrace(norb, ham.n_alpha, ham.n_beta, discarded=discarded, total_shots=samples.shots)
    occ = estimate_occupancies(physical, norb)
    carryover: Set[Determinant] = set()
    previous_energy = None
    previous_basis: Set[Determinant] = set()

    for t in range(1, cfg.max_iterations + 1):
        recovered, n_recovered = recover_samples(
            samples, occ, norb, ham.n_alpha, ham.n_beta, make_rng(derive_seed(cfg.seed, "recover", t))
        )
        batches = make_batches(recovered, cfg, carryover, make_rng(derive_seed(cfg.seed, "batch", t)))
        results = _solve_batches(ham, batches, cfg.workers)

        energies = [r.energy for r in results]
        best = int(np.argmin(energies))
        best_basis = set(batches[best])
        # ta sama podprzestrzeń bez części odtworzonych konfiguracji to zastój, nie zbieżność
        missing = sum(1 for key in recovered.counts if decode_bitstring(key, norb) not in best_basis)
        stalled = best_basis == previous_basis and missing > 0
        new_occ = np.mean([_batch_occupancies(b, r.vector, norb) for b, r in zip(batches, results)], axis=0)
        carryover = {
            det for det, c in zip(batches[best], results[best].vector) if abs(c) > cfg.carryover_threshold
        }
        trace.iterations.append(
            SqdIteration(
                iteration=t,
                batch_energies=energies,
                min_energy=energies[best],
                occupancies=[float(x) for x in new_occ],
                batch_dimensions=[len(b) for b in batches],
                carryover_size=len(carryover),
                recovered_shots=n_recovered,
            )
        )
        trace.basis = list(batches[best])
        trace.vector = results[best].vector
        if cfg.verbose:
            console.info(
                f"SQD iteracja {t}: E_min = {energies[best]:.10f} Ha, "
                f"wymiary partii {min(len(b) for b in batches)}..{max(len(b) for b in batches)}, "
                f"przeniesione {len(carryover)}"
            )

        if t >= 2 and stalled:
            if cfg.verbose:
                console.warning(f"SQD iteracja {t}: partia bez zmian, brakuje {missing} odtworzonych konfiguracji")
        elif t >= 2:
            if abs(energies[best] - previous_energy) < cfg.energy_tol:
                trace.convergence_reason = "energy"
            elif np.max(np.abs(new_occ - occ)) < cfg.occupancy_tol:
                trace.convergence_reason = "occupancy"
        if not trace.convergence_reason and t == cfg.max_iterations:
            trace.convergence_reason = "max_iter"
        previous_energy = energies[best]
        previous_basis = best_basis
        occ = new_occ
        if trace.convergence_reason:
            break
    return trace


def extsqd_expand(
    ham: FermionHamiltonian,
    batch_basis: Sequence[Determinant],
    coefficients: Sequence[float],
    cfg: SqdConfig = SqdConfig(),
) -> Tuple[float, int]:
    """
    Jeden krok ext-SQD: baza partii plus pojedyncze wzbudzenia jej
    dominujących wyznaczników (|c| > extsqd_ci_threshold).

    Returns:
        (energia w rozszerzonej bazie, wymiar rozszerzonej bazy)
    """
    if not batch_basis:
        raise ArgumentError("Pusta baza partii dla ext-SQD")
    if len(coefficients) != len(batch_basis):
        raise ArgumentError(
            f"Liczba współczynników ({len(coefficients)}) różna od rozmiaru bazy ({len(batch_basis)})"
        )
    expanded = set(batch_basis)
    for det, c in zip(batch_basis, coefficients):
        if abs(c) > cfg.extsqd_ci_threshold:
            expanded.update(single_excitations(det, ham.norb))
    basis = sorted(expanded)
    hf = hartree_fock_det(ham.norb, ham.n_alpha, ham.n_beta)
    matrix = project_hamiltonian(ham, basis)
    result = lowest_eigenpair(matrix, guess_index=matrix.index_of(hf) if hf in matrix else None)
    return result.energy, len(basis)


def sqd_pipeline(ham: FermionHamiltonian, samples: SampleSet, cfg: SqdConfig = SqdConfig()) -> SqdTrace:
    """sqd_run, a następnie ext-SQD na partii o najniższej energii z ostatniej iteracji."""
    trace = sqd_run(ham, samples, cfg)
    trace.e_ext, trace.ext_dimension = extsqd_expand(ham, trace.basis, trace.vector, cfg)
    if cfg.verbose:
        console.info(f"ext-SQD: E_ext = {trace.e_ext:.10f} Ha, wymiar {trace.ext_dimension}")
    return trace
