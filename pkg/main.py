#!/usr/bin/env python3
"""Główny plik uruchamiający narzędzie SQD z wieloprogramowaniem (CLI)."""

import argparse
import json
import os
import sys
from collections import OrderedDict
from dataclasses import replace

from src.circuit import AbstractCircuit, compose_experiments, peephole_simplify, skeleton_circuit, split_results
from src.coupling_map import heavy_hex_map
from src.determinant import encode_determinant
from src.eigensolver import fci_ground_state
from src.errors import ArgumentError, PlanError, SqdToolError, exit_code_for
from src.hamiltonian import FermionHamiltonian, load_fcidump, make_hubbard_chain, random_hamiltonian
from src.harness import load_rbd_spec, rbd_position_counts, run_rbd
from src.layout import (
    PartitionPlan,
    bundled_plan,
    bundled_plan_names,
    load_plan,
    pack_layouts,
    save_plan,
    validate_partition,
)
from src.sampler import NoiseModel, expected_crosstalk_flips, sample_counts, sample_parallel_joint
from src.samples import SampleSet
from src.sqd import SqdConfig, sqd_pipeline, sqd_run
from src.statistics import read_records, write_records, write_summaries
from utils import console, results_store
from utils.constants import (
    DEFAULT_ANGLE_TOL,
    DEFAULT_MIN_BUFFER,
    DEFAULT_N_ANCILLA,
    DEFAULT_P_READOUT,
    DEFAULT_SHOTS,
)

# flaga CLI -> pole SqdConfig
_SQD_FLAGS = {
    "batches": "n_batches",
    "batch_size": "batch_size",
    "max_iters": "max_iterations",
    "energy_tol": "energy_tol",
    "occ_tol": "occupancy_tol",
    "carryover": "carryover_threshold",
    "ci_threshold": "extsqd_ci_threshold",
    "workers": "workers",
}


def _emit(text: str, out: str = None):
    """JSON na stdout albo do pliku --out (nigdy przez console)."""
    if out:
        folder = os.path.dirname(os.path.abspath(out))
        os.makedirs(folder, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
            if not text.endswith("\n"):
                f.write("\n")
        console.success(f"Zapisano {out}")
    else:
        print(text)


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True)


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _sqd_config(args, base: SqdConfig = None) -> SqdConfig:
    base = base or SqdConfig()
    overrides = {
        field: getattr(args, flag)
        for flag, field in _SQD_FLAGS.items()
        if getattr(args, flag, None) is not None
    }
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    overrides["verbose"] = console.is_verbose()
    return replace(base, **overrides)


def _hamiltonian(args) -> FermionHamiltonian:
    if getattr(args, "random", None):
        norb, n_alpha, n_beta = args.random
        return random_hamiltonian(norb, n_alpha, n_beta, seed=args.seed or 0)
    if getattr(args, "hubbard", None):
        sites, n_alpha, n_beta = args.hubbard
        return make_hubbard_chain(sites, args.hubbard_u, args.hubbard_t, n_alpha, n_beta)
    if not args.fcidump:
        raise ArgumentError("Podaj plik FCIDUMP albo --random / --hubbard")
    return load_fcidump(args.fcidump)


def _plan_arg(args) -> PartitionPlan:
    if getattr(args, "bundled", None):
        return bundled_plan(args.bundled)
    if not getattr(args, "plan", None):
        raise ArgumentError("Podaj plan podziału: --plan PLIK albo --bundled NAZWA")
    return load_plan(args.plan)


# --- Podkomendy ---


def cmd_parse(args) -> int:
    ham = load_fcidump(args.fcidump)
    console.info(f"Wczytano {ham}")
    _emit(_dump(ham.to_dict()), args.out)
    return 0


def cmd_fci(args) -> int:
    ham = _hamiltonian(args)
    energy, wavefunction = fci_ground_state(ham)
    console.header("FCI")
    console.success(f"E_FCI = {energy:.12f} Ha (wymiar {len(wavefunction)})")
    if args.out:
        data = {
            "energy": energy,
            "norb": ham.norb,
            "n_alpha": ham.n_alpha,
            "n_beta": ham.n_beta,
            "wavefunction": {encode_determinant(d, ham.norb): c for d, c in wavefunction.items()},
        }
        _emit(_dump(data), args.out)
    else:
        print(f"{energy:.12f}")
    return 0


def cmd_sample(args) -> int:
    noise = NoiseModel.noiseless() if args.noiseless else NoiseModel(
        p_readout=args.p_readout, p_xtalk=args.p_xtalk
    )
    hams = [load_fcidump(path) for path in args.fcidump]
    labels = args.labels or [_stem(path) for path in args.fcidump]
    if len(labels) != len(hams):
        raise PlanError(f"Podano {len(labels)} etykiet dla {len(hams)} plików FCIDUMP")
    wavefunctions = []
    for label, ham in zip(labels, hams):
        _, wavefunction = fci_ground_state(ham)
        wavefunctions.append((label, wavefunction))

    if args.plan or args.bundled:
        plan = _plan_arg(args).relabel(labels)
        console.info(f"{plan}; oczekiwane przesłuchy na strzał: {expected_crosstalk_flips(plan, noise):.4f}")
        samples = sample_parallel_joint(wavefunctions, plan, args.shots, noise, args.seed)
    else:
        if len(hams) != 1:
            raise PlanError("Kilka funkcji falowych wymaga planu podziału (--plan albo --bundled)")
        label, wavefunction = wavefunctions[0]
        samples = sample_counts(wavefunction, hams[0].norb, args.shots, noise, args.seed, label)
    console.success(f"{samples.shots} strzałów, {len(samples)} różnych bitstringów")
    _emit(samples.to_json(), args.out)
    return 0


def _run_sqd(args, pipeline) -> int:
    ham = load_fcidump(args.fcidump)
    samples = SampleSet.load(args.samples)
    cfg = _sqd_config(args)
    console.header("SQD" if pipeline is sqd_run else "SQD + ext-SQD")
    trace = pipeline(ham, samples, cfg)
    console.success(
        f"E_first = {trace.e_first:.10f} Ha, E_last = {trace.e_last:.10f} Ha "
        f"({trace.convergence_reason}, odrzucono {trace.discarded_fraction:.1%})"
    )
    if trace.e_ext is not None:
        console.success(f"E_ext = {trace.e_ext:.10f} Ha (wymiar {trace.ext_dimension})")
    _emit(trace.to_json(), args.out)
    return 0


def cmd_sqd(args) -> int:
    return _run_sqd(args, sqd_run)


def cmd_extsqd(args) -> int:
    return _run_sqd(args, sqd_pipeline)


def cmd_plan(args) -> int:
    if args.build:
        coupling = heavy_hex_map(args.rows, args.cols, args.faulty)
        labels = args.labels or [f"exp{i}" for i in range(args.count)]
        buffer = DEFAULT_MIN_BUFFER if args.buffer is None else args.buffer
        plan = pack_layouts(coupling, labels, args.norb, args.n_ancilla, buffer)
        console.success(str(plan))
        if args.out:
            save_plan(plan, args.out)
            console.success(f"Zapisano {args.out}")
        else:
            print(_dump(plan.to_dict()))
        return 0

    if args.list:
        for name in bundled_plan_names():
            print(name)
        return 0

    plan = _plan_arg(args)
    if args.buffer is not None and args.buffer != plan.min_buffer:
        plan = PartitionPlan(plan.coupling, plan.layouts, args.buffer)
    violations = validate_partition(plan)
    console.header(str(plan))
    if not violations:
        console.success("Plan poprawny")
        return 0
    for violation in violations:
        console.error(str(violation))
    console.error(f"Naruszeń: {len(violations)}")
    return PlanError.exit_code


def cmd_compose(args) -> int:
    plan = _plan_arg(args)
    subcircuits = [
        (layout.label, skeleton_circuit(layout, args.n_alpha, args.n_beta, args.layers, args.seed))
        for layout in plan.layouts
    ]
    circuit = compose_experiments(subcircuits, plan)
    before = len(circuit.gates)
    if not args.no_peephole:
        circuit = peephole_simplify(circuit, args.angle_tol)
    console.info(f"Bramki: {before} -> {len(circuit.gates)}; rejestry: {dict(circuit.registers)}")
    _emit(_dump(circuit.to_dict()), args.out)
    return 0


def cmd_split(args) -> int:
    samples = SampleSet.load(args.samples)
    if args.circuit:
        with open(args.circuit, "r", encoding="utf-8") as f:
            source = AbstractCircuit.from_dict(json.load(f))
    else:
        source = _plan_arg(args)
    parts = split_results(samples, source)
    if not args.out:
        print(_dump({label: part.to_dict() for label, part in parts.items()}))
        return 0
    os.makedirs(args.out, exist_ok=True)
    for label, part in parts.items():
        path = os.path.join(args.out, f"{label}.json")
        part.save(path)
        console.success(f"{label}: {part.shots} strzałów -> {path}")
    return 0


def cmd_rbd(args) -> int:
    spec = load_rbd_spec(args.spec)
    overrides = {}
    for flag in ("replicates", "seed", "shots"):
        if getattr(args, flag) is not None:
            overrides[flag] = getattr(args, flag)
    overrides["sqd"] = replace(
        _sqd_config(args, spec.sqd), seed=spec.sqd.seed, verbose=False
    )
    if args.buffer is not None:
        overrides["layouts"] = OrderedDict(
            (layout_id, PartitionPlan(plan.coupling, plan.layouts, args.buffer))
            for layout_id, plan in spec.layouts.items()
        )
    spec = replace(spec, **overrides)

    console.header(
        f"RBD: {spec.replicates} powtórzeń, {len(spec.layouts)} układów, {len(spec.molecules)} cząsteczek"
    )
    records = run_rbd(spec, progress=console.is_verbose())
    for layout, counts in rbd_position_counts(records).items():
        console.info(f"  {layout}: pozycje w kolejności {counts}")

    out_dir = args.out or os.path.join("results", _stem(args.spec))
    written = write_records(records, out_dir) + write_summaries(records, out_dir)
    for path in written:
        console.success(f"Zapisano {path}")
    if args.store:
        run_id = results_store.save_run(
            records,
            name=args.name or _stem(args.spec),
            spec_path=os.path.abspath(args.spec),
            master_seed=spec.seed,
            replicates=spec.replicates,
            shots=spec.shots,
            config={"noise": spec.noise.to_dict(), "sqd": spec.sqd.to_dict()},
        )
        console.success(f"Przebieg zapisany w bazie wyników (id {run_id})")
    return 0


def cmd_report(args) -> int:
    records = read_records(args.records)
    out_dir = args.out or os.path.dirname(os.path.abspath(args.records))
    for path in write_summaries(records, out_dir):
        console.success(f"Zapisano {path}")
    return 0


def cmd_history(args) -> int:
    if args.clear:
        results_store.clear_results()
        console.success("Baza wyników wyczyszczona")
        return 0
    if args.delete is not None:
        if results_store.delete_run(args.delete):
            console.success(f"Usunięto przebieg {args.delete}")
        else:
            console.warning(f"Brak przebiegu {args.delete}")
        return 0
    if args.show is not None:
        records = results_store.get_run_records(args.show)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            write_summaries(records, args.out)
            console.success(f"Podsumowania przebiegu {args.show} zapisane w {args.out}")
        else:
            print(_dump({"run": results_store.get_run(args.show), "records": records}))
        return 0
    runs = results_store.list_runs(limit=args.limit)
    if not runs:
        console.info("Brak zapisanych przebiegów")
    for run in runs:
        print(
            f"{run['id']:>4}  {run['created_at']}  {run['name'] or '-':<20} "
            f"R={run['replicates']} shots={run['shots']} rekordów={run['n_records']}"
        )
    return 0


# --- Parser ---


def _add_seed(p, default=0):
    p.add_argument("--seed", type=int, default=default, help="ziarno główne")


def _add_out(p, help_text="plik wyjściowy (domyślnie stdout)"):
    p.add_argument("--out", type=str, default=None, help=help_text)


def _add_plan_source(p, required=True):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--plan", type=str, help="plik JSON planu podziału")
    group.add_argument("--bundled", type=str, help="nazwa dołączonego planu, np. buffer1")


def _add_sqd_flags(p, with_defaults: bool):
    # przy rbd brak wartości oznacza "weź z pliku specyfikacji"
    def d(value):
        return value if with_defaults else None

    defaults = SqdConfig()
    p.add_argument("--batches", type=int, default=d(defaults.n_batches), help="liczba partii K")
    p.add_argument("--batch-size", type=int, default=d(defaults.batch_size), help="losowań na partię")
    p.add_argument("--max-iters", type=int, default=d(defaults.max_iterations), help="maks. iteracji SQD")
    p.add_argument("--energy-tol", type=float, default=d(defaults.energy_tol))
    p.add_argument("--occ-tol", type=float, default=d(defaults.occupancy_tol))
    p.add_argument("--carryover", type=float, default=d(defaults.carryover_threshold))
    p.add_argument("--ci-threshold", type=float, default=d(defaults.extsqd_ci_threshold))
    p.add_argument("--workers", type=int, default=d(defaults.workers), help="wątki diagonalizacji partii")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqd-multiprog",
        description="SQD / ext-SQD z symulowanym wieloprogramowaniem na grafach heavy-hex",
    )
    parser.add_argument("--quiet", action="store_true", help="wycisza komunikaty informacyjne")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="FCIDUMP -> kanoniczny JSON")
    p.add_argument("fcidump")
    _add_out(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("fci", help="energia odniesienia (pełna diagonalizacja)")
    p.add_argument("fcidump", nargs="?")
    p.add_argument("--random", type=int, nargs=3, metavar=("NORB", "N_ALPHA", "N_BETA"))
    p.add_argument("--hubbard", type=int, nargs=3, metavar=("L", "N_ALPHA", "N_BETA"))
    p.add_argument("--hubbard-u", type=float, default=4.0)
    p.add_argument("--hubbard-t", type=float, default=1.0)
    _add_seed(p)
    _add_out(p, "plik JSON z energią i funkcją falową")
    p.set_defaults(func=cmd_fci)

    p = sub.add_parser("sample", help="próbki pomiarów ze stanu FCI")
    p.add_argument("fcidump", nargs="+")
    p.add_argument("--labels", nargs="+")
    p.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    p.add_argument("--p-readout", type=float, default=DEFAULT_P_READOUT)
    p.add_argument("--p-xtalk", type=float, default=NoiseModel().p_xtalk)
    p.add_argument("--noiseless", action="store_true")
    _add_plan_source(p, required=False)
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=cmd_sample)

    for name, func, text in (
        ("sqd", cmd_sqd, "pętla SQD na próbkach"),
        ("extsqd", cmd_extsqd, "pętla SQD + krok ext-SQD"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("fcidump")
        p.add_argument("samples", help="plik JSON z SampleSet")
        _add_sqd_flags(p, with_defaults=True)
        _add_seed(p)
        _add_out(p)
        p.set_defaults(func=func)

    p = sub.add_parser("plan", help="budowa albo walidacja planu podziału")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--build", action="store_true", help="rozmieść układy na grafie heavy-hex")
    mode.add_argument("--validate", action="store_true", help="sprawdź plan")
    mode.add_argument("--list", action="store_true", help="wypisz dołączone plany")
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--cols", type=int, default=21)
    p.add_argument("--faulty", type=int, nargs="*", default=None)
    p.add_argument("--norb", type=int, default=4)
    p.add_argument("--count", type=int, default=2, help="liczba układów")
    p.add_argument("--labels", nargs="+")
    p.add_argument("--n-ancilla", type=int, default=DEFAULT_N_ANCILLA)
    p.add_argument("--buffer", type=int, default=None, help=f"bufor kubitów (domyślnie {DEFAULT_MIN_BUFFER})")
    _add_plan_source(p, required=False)
    _add_out(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("compose", help="złożenie obwodów szkieletowych na planie")
    _add_plan_source(p)
    p.add_argument("--n-alpha", type=int, required=True)
    p.add_argument("--n-beta", type=int, required=True)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--angle-tol", type=float, default=DEFAULT_ANGLE_TOL)
    p.add_argument("--no-peephole", action="store_true")
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("split", help="rozdzielenie złożonych próbek na rejestry")
    p.add_argument("samples")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--circuit", type=str)
    source.add_argument("--plan", type=str)
    source.add_argument("--bundled", type=str)
    _add_out(p, "katalog na pliki <etykieta>.json")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("rbd", help="pełny eksperyment RBD ze specyfikacji JSON/TOML")
    p.add_argument("spec")
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--buffer", type=int, default=None, help="wymagany bufor kubitów we wszystkich planach")
    _add_sqd_flags(p, with_defaults=False)
    p.add_argument("--store", action="store_true", help="zapisz przebieg w bazie wyników")
    p.add_argument("--name", type=str, default=None)
    _add_out(p, "katalog wyników (domyślnie results/<spec>)")
    p.set_defaults(func=cmd_rbd)

    p = sub.add_parser("report", help="rekordy -> podsumowania CSV/JSON")
    p.add_argument("records", help="records.json albo records.csv")
    _add_out(p, "katalog wyjściowy (domyślnie katalog rekordów)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("history", help="przebiegi zapisane w bazie wyników")
    p.add_argument("--limit", type=int, default=50)
    p.add_argument("--show", type=int, default=None)
    p.add_argument("--delete", type=int, default=None)
    p.add_argument("--clear", action="store_true")
    _add_out(p, "katalog na podsumowania przebiegu --show")
    p.set_defaults(func=cmd_history)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    console.set_verbose(not args.quiet)
    try:
        return args.func(args)
    except SqdToolError as e:
        console.error(str(e))
        return exit_code_for(e)
    except OSError as e:
        console.error(f"Błąd pliku: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
