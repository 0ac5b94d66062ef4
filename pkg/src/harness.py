"""Eksperyment w układzie bloków losowych (RBD): tryb równoległy i szeregowy"""

import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections import OrderedDict
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Mapping

from tqdm import tqdm

from src.coupling_map import heavy_hex_map
from src.determinant import Determinant
from src.eigensolver import fci_ground_state
from src.errors import ConfigError, FormatError, PlanError
from src.hamiltonian import FermionHamiltonian, load_fcidump, make_hubbard_chain
from src.layout import PartitionPlan, bundled_plan, load_plan, pack_layouts
from src.sampler import NoiseModel, register_seed, sample_counts, sample_parallel
from src.samples import SampleSet
from src.sqd import SqdConfig, sqd_pipeline
from src.statistics import to_kcal_per_mol
from utils.constants import DEFAULT_MIN_BUFFER, DEFAULT_N_ANCILLA, DEFAULT_SHOTS
from utils.helpers import derive_seed, make_rng

MODALITIES = ("parallel", "serial")


@dataclass
class RbdSpec:
    molecules: "OrderedDict[str, FermionHamiltonian]"
    layouts: "OrderedDict[str, PartitionPlan]"
    noise: NoiseModel = field(default_factory=NoiseModel)
    sqd: SqdConfig = field(default_factory=SqdConfig)
    shots: int = DEFAULT_SHOTS
    replicates: int = 10
    seed: int = 0
    share_seeds: bool = True

    def __post_init__(self):
        if not self.molecules:
            raise ConfigError("Specyfikacja RBD nie zawiera żadnej cząsteczki")
        if not self.layouts:
            raise ConfigError("Specyfikacja RBD nie zawiera żadnego układu")
        if self.replicates < 1:
            raise ConfigError(f"replicates musi być >= 1, podano {self.replicates}")
        if self.shots < 1:
            raise ConfigError(f"shots musi być >= 1, podano {self.shots}")
        labels = list(self.molecules)
        for layout_id, plan in list(self.layouts.items()):
            if len(plan.layouts) != len(labels):
                raise PlanError(
                    f"Plan '{layout_id}' ma {len(plan.layouts)} układów, a cząsteczek jest {len(labels)}"
                )
            plan = plan.relabel(labels)
            for layout in plan.layouts:
                norb = self.molecules[layout.label].norb
                if layout.width != 2 * norb:
                    raise PlanError(
                        f"Plan '{layout_id}': układ '{layout.label}' mierzy {layout.width} kubitów, "
                        f"cząsteczka wymaga {2 * norb}"
                    )
            self.layouts[layout_id] = plan

    def to_dict(self) -> dict:
        return {
            "experiment": {
                "replicates": self.replicates,
                "seed": self.seed,
                "shots": self.shots,
                "share_seeds": self.share_seeds,
            },
            "noise": self.noise.to_dict(),
            "sqd": self.sqd.to_dict(),
            "molecules": {
                label: {"norb": h.norb, "n_alpha": h.n_alpha, "n_beta": h.n_beta}
                for label, h in self.molecules.items()
            },
            "layouts": {layout_id: plan.to_dict() for layout_id, plan in self.layouts.items()},
        }


def _resolve(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def _molecule_from_entry(label: str, entry: Mapping, base_dir: str) -> FermionHamiltonian:
    if "fcidump" in entry:
        return load_fcidump(_resolve(base_dir, entry["fcidump"]))
    if "hubbard" in entry:
        h = entry["hubbard"]
        try:
            return make_hubbard_chain(
                int(h["L"]), float(h["U"]), float(h.get("t", 1.0)), int(h["n_alpha"]), int(h["n_beta"])
            )
        except KeyError as e:
            raise ConfigError(f"Cząsteczka '{label}': w opisie hubbard brakuje pola {e}") from e
    raise ConfigError(f"Cząsteczka '{label}' musi mieć pole 'fcidump' albo 'hubbard'")


def _plan_from_entry(layout_id: str, entry: Mapping, base_dir: str, norb: int, n_molecules: int) -> PartitionPlan:
    if "plan" in entry:
        return load_plan(_resolve(base_dir, entry["plan"]))
    if "bundled" in entry:
        return bundled_plan(entry["bundled"])
    if "heavy_hex" in entry:
        g = entry["heavy_hex"]
        coupling = heavy_hex_map(int(g["rows"]), int(g["cols"]), g.get("faulty"))
        labels = [f"exp{i}" for i in range(n_molecules)]
        return pack_layouts(
            coupling,
            labels,
            norb,
            int(g.get("n_ancilla", DEFAULT_N_ANCILLA)),
            int(g.get("min_buffer", DEFAULT_MIN_BUFFER)),
        )
    raise ConfigError(f"Układ '{layout_id}' musi mieć pole 'plan', 'bundled' albo 'heavy_hex'")


def load_rbd_spec(path: str) -> RbdSpec:
    """
    Wczytuje specyfikację eksperymentu z pliku JSON albo TOML.

    Sekcje: experiment, noise, sqd, molecules.<etykieta>, layouts.<id>.
    Ścieżki względne liczone są od katalogu pliku.
    """
    try:
        if path.endswith(".toml"):
            with open(path, "rb") as f:
                data = tomllib.load(f)
        elif path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        else:
            raise FormatError(f"Nieobsługiwany format specyfikacji: {path} (oczekiwano .toml lub .json)")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"Nie udało się odczytać specyfikacji '{path}': {e}") from e

    base_dir = os.path.dirname(os.path.abspath(path))
    experiment = dict(data.get("experiment", {}))
    unknown = sorted(set(experiment) - {"replicates", "seed", "shots", "share_seeds", "workers"})
    if unknown:
        raise ConfigError(f"Nieznane pola sekcji experiment: {', '.join(unknown)}")

    molecules = OrderedDict(
        (label, _molecule_from_entry(label, entry, base_dir)) for label, entry in data.get("molecules", {}).items()
    )
    if not molecules:
        raise ConfigError("Specyfikacja RBD nie zawiera żadnej cząsteczki")
    norb = next(iter(molecules.values())).norb
    layouts = OrderedDict(
        (layout_id, _plan_from_entry(layout_id, entry, base_dir, norb, len(molecules)))
        for layout_id, entry in data.get("layouts", {}).items()
    )

    sqd_data = dict(data.get("sqd", {}))
    if "workers" in experiment:
        sqd_data["workers"] = int(experiment["workers"])
    return RbdSpec(
        molecules=molecules,
        layouts=layouts,
        noise=NoiseModel.from_dict(data.get("noise", {})) if "noise" in data else NoiseModel(),
        sqd=SqdConfig.from_dict(sqd_data),
        shots=int(experiment.get("shots", DEFAULT_SHOTS)),
        replicates=int(experiment.get("replicates", 10)),
        seed=int(experiment.get("seed", 0)),
        share_seeds=bool(experiment.get("share_seeds", True)),
    )


@dataclass
class ReplicateRecord:
    replicate: int
    layout: str
    modality: str
    molecule: str
    order_position: int
    modality_position: int
    e_first: float
    e_last: float
    e_ext: float
    reference: float
    dev_first: float
    dev_last: float
    dev_ext: float
    discarded_fraction: float

    def to_dict(self) -> dict:
        return asdict(self)


def _record(replicate, layout_id, modality, label, order_pos, mod_pos, trace, reference) -> ReplicateRecord:
    return ReplicateRecord(
        replicate=replicate,
        layout=layout_id,
        modality=modality,
        molecule=label,
        order_position=order_pos,
        modality_position=mod_pos,
        e_first=trace.e_first,
        e_last=trace.e_last,
        e_ext=trace.e_ext,
        reference=reference,
        dev_first=to_kcal_per_mol(abs(trace.e_first - reference)),
        dev_last=to_kcal_per_mol(abs(trace.e_last - reference)),
        dev_ext=to_kcal_per_mol(abs(trace.e_ext - reference)),
        discarded_fraction=trace.discarded_fraction,
    )


def _sample_run(
    spec: RbdSpec,
    plan: PartitionPlan,
    modality: str,
    wavefunctions: Dict[str, Dict[Determinant, float]],
    run_seed: int,
) -> Dict[str, SampleSet]:
    if modality == "parallel":
        sets = sample_parallel(list(wavefunctions.items()), plan, spec.shots, spec.noise, run_seed)
        return {s.label: s for s in sets}
    # szeregowo: ta sama geometria, bez przesłuchów
    serial_noise = replace(spec.noise, p_xtalk=0.0)
    return {
        label: sample_counts(
            wavefunctions[label],
            spec.molecules[label].norb,
            spec.shots,
            serial_noise,
            register_seed(run_seed, label),
            label,
        )
        for label in plan.labels
    }


def run_rbd(spec: RbdSpec, progress: bool = True) -> List[ReplicateRecord]:
    """
    Przebiega wszystkie powtórzenia eksperymentu.

    W każdym powtórzeniu kolejność układów jest losowo permutowana, a w
    obrębie układu losowana jest kolejność trybów. Każde uruchomienie
    ma własne ziarno wyprowadzone z ziarna głównego; przy share_seeds
    tryby tego samego układu dzielą strumienie, więc przy zerowych
    przesłuchach dają identyczne wyniki.
    """
    references: Dict[str, float] = {}
    wavefunctions: Dict[str, Dict[Determinant, float]] = {}
    for label, ham in spec.molecules.items():
        energy, wavefunction = fci_ground_state(ham)
        references[label] = energy
        wavefunctions[label] = wavefunction

    layout_ids = list(spec.layouts)
    total = spec.replicates * len(layout_ids) * len(MODALITIES)
    records: List[ReplicateRecord] = []
    with tqdm(total=total, desc="RBD", disable=not progress) as bar:
        for replicate in range(spec.replicates):
            order_rng = make_rng(derive_seed(spec.seed, "rbd", replicate, "layouts"))
            order = [layout_ids[i] for i in order_rng.permutation(len(layout_ids))]
            for order_pos, layout_id in enumerate(order):
                plan = spec.layouts[layout_id]
                modality_rng = make_rng(derive_seed(spec.seed, "rbd", replicate, layout_id, "modality"))
                modalities = [MODALITIES[i] for i in modality_rng.permutation(len(MODALITIES))]
                for mod_pos, modality in enumerate(modalities):
                    component = "shared" if spec.share_seeds else modality
                    run_seed = derive_seed(spec.seed, replicate, layout_id, component)
                    samples = _sample_run(spec, plan, modality, wavefunctions, run_seed)
                    for label in plan.labels:
                        cfg = replace(spec.sqd, seed=derive_seed(run_seed, "sqd", label), verbose=False)
                        trace = sqd_pipeline(spec.molecules[label], samples[label], cfg)
                        records.append(
                            _record(replicate, layout_id, modality, label, order_pos, mod_pos, trace, references[label])
                        )
                    bar.update(1)
    return records


def rbd_position_counts(records: List[ReplicateRecord]) -> Dict[str, List[int]]:
    """Ile razy każdy układ wystąpił na każdej pozycji kolejności (jeden raz na powtórzenie)."""
    layouts = sorted({r.layout for r in records})
    counts = {layout: [0] * len(layouts) for layout in layouts}
    seen = set()
    for r in records:
        if (r.replicate, r.layout) in seen:
            continue
        seen.add((r.replicate, r.layout))
        counts[r.layout][r.order_position] += 1
    return counts
