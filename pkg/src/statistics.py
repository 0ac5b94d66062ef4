"""Statystyki odchyleń energii: podsumowania, porównanie równoległe/szeregowe, tabele pudełkowe"""

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import ArgumentError, FormatError
from utils.constants import HARTREE_TO_KCAL_PER_MOL

CHECKPOINTS = ("first", "last", "ext")
GROUP_KEYS = ["layout", "modality", "molecule", "checkpoint"]


def to_kcal_per_mol(delta: float) -> float:
    return delta * HARTREE_TO_KCAL_PER_MOL


@dataclass
class StatsSummary:
    """
    Statystyki jednej grupy wartości.

    Kwantyle liczone interpolacją liniową między statystykami pozycyjnymi
    (reguła typu 7). Wąsy to granice Q1 - 1.5 IQR i Q3 + 1.5 IQR przycięte
    do zakresu danych; wartości poza wąsami są odstające. Dla n = 1
    odchylenie standardowe wynosi 0.
    """

    key: Dict[str, str]
    n: int
    mean: float
    std: float
    median: float
    q1: float
    q3: float
    iqr: float
    whisker_low: float
    whisker_high: float
    outliers: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        data = dict(self.key)
        data.update({k: v for k, v in asdict(self).items() if k != "key"})
        return data


def summarize(values: Iterable[float], key: Optional[Mapping[str, str]] = None) -> StatsSummary:
    data = np.asarray(list(values), dtype=float)
    if data.size == 0:
        raise ArgumentError(f"Pusta grupa {dict(key or {})}")
    q1, median, q3 = np.quantile(data, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    whisker_low = max(q1 - 1.5 * iqr, float(data.min()))
    whisker_high = min(q3 + 1.5 * iqr, float(data.max()))
    outliers = sorted(float(x) for x in data if x < whisker_low or x > whisker_high)
    return StatsSummary(
        key=dict(key or {}),
        n=int(data.size),
        mean=float(data.mean()),
        std=float(data.std(ddof=1)) if data.size > 1 else 0.0,
        median=float(median),
        q1=float(q1),
        q3=float(q3),
        iqr=float(iqr),
        whisker_low=float(whisker_low),
        whisker_high=float(whisker_high),
        outliers=outliers,
    )


def records_frame(records: Sequence) -> pd.DataFrame:
    """Rekordy (obiekty z to_dict albo słowniki) jako DataFrame."""
    rows = [r.to_dict() if hasattr(r, "to_dict") else dict(r) for r in records]
    if not rows:
        raise ArgumentError("Brak rekordów")
    return pd.DataFrame(rows)


def _long_deviations(records: Sequence) -> pd.DataFrame:
    frame = records_frame(records)
    missing = [c for c in ["layout", "modality", "molecule"] + [f"dev_{c}" for c in CHECKPOINTS] if c not in frame]
    if missing:
        raise FormatError(f"Rekordom brakuje kolumn: {', '.join(missing)}")
    long = frame.melt(
        id_vars=["layout", "modality", "molecule"],
        value_vars=[f"dev_{c}" for c in CHECKPOINTS],
        var_name="checkpoint",
        value_name="deviation",
    )
    long["checkpoint"] = long["checkpoint"].str.removeprefix("dev_")
    return long


def summarize_records(records: Sequence) -> List[StatsSummary]:
    """Podsumowanie odchyleń (kcal/mol) w grupach (układ, tryb, cząsteczka, punkt kontrolny)."""
    long = _long_deviations(records)
    summaries = []
    for group, frame in long.groupby(GROUP_KEYS, sort=True):
        key = dict(zip(GROUP_KEYS, (str(g) for g in group)))
        summaries.append(summarize(frame["deviation"], key))
    return summaries


def parallel_serial_gaps(records: Sequence) -> List[dict]:
    """Średnie odchylenie trybu równoległego i szeregowego oraz ich różnica."""
    long = _long_deviations(records)
    means = long.pivot_table(
        index=["layout", "molecule", "checkpoint"], columns="modality", values="deviation", aggfunc="mean"
    )
    rows = []
    for (layout, molecule, checkpoint), row in means.sort_index().iterrows():
        parallel = float(row.get("parallel", np.nan))
        serial = float(row.get("serial", np.nan))
        rows.append(
            {
                "layout": layout,
                "molecule": molecule,
                "checkpoint": checkpoint,
                "mean_parallel": parallel,
                "mean_serial": serial,
                "gap": parallel - serial,
            }
        )
    return rows


def box_plot_table(records: Sequence, checkpoint: str = "ext") -> List[dict]:
    if checkpoint not in CHECKPOINTS:
        raise ArgumentError(f"Nieznany punkt kontrolny '{checkpoint}' (dostępne: {', '.join(CHECKPOINTS)})")
    rows = []
    for s in summarize_records(records):
        if s.key["checkpoint"] != checkpoint:
            continue
        rows.append(
            {
                **s.key,
                "median": s.median,
                "q1": s.q1,
                "q3": s.q3,
                "whisker_low": s.whisker_low,
                "whisker_high": s.whisker_high,
                "outliers": s.outliers,
            }
        )
    return rows


def _csv_ready(rows: List[dict]) -> pd.DataFrame:
    frame = pd.DataFrame(rows)
    for column in frame.columns:
        if frame[column].map(lambda v: isinstance(v, list)).any():
            frame[column] = frame[column].map(lambda v: ";".join(repr(float(x)) for x in v))
    return frame


def write_table(rows: List[dict], csv_path: Optional[str] = None, json_path: Optional[str] = None):
    """Zapis wierszy do CSV i/lub JSON z deterministycznym formatowaniem."""
    if csv_path:
        _csv_ready(rows).to_csv(csv_path, index=False, float_format="%.17g", lineterminator="\n")
    if json_path:
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(rows, f, indent=2, sort_keys=True)
            f.write("\n")


def write_records(records: Sequence, out_dir: str) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "records.csv")
    json_path = os.path.join(out_dir, "records.json")
    write_table([r.to_dict() for r in records], csv_path, json_path)
    return [csv_path, json_path]


def write_summaries(records: Sequence, out_dir: str) -> List[str]:
    """Podsumowania, różnice równoległe/szeregowe i tabele pudełkowe dla wszystkich punktów kontrolnych."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    summary_rows = [s.to_dict() for s in summarize_records(records)]
    paths = (os.path.join(out_dir, "summary.csv"), os.path.join(out_dir, "summary.json"))
    write_table(summary_rows, *paths)
    written.extend(paths)
    paths = (os.path.join(out_dir, "gaps.csv"), os.path.join(out_dir, "gaps.json"))
    write_table(parallel_serial_gaps(records), *paths)
    written.extend(paths)
    for checkpoint in CHECKPOINTS:
        path = os.path.join(out_dir, f"boxplot_{checkpoint}.csv")
        write_table(box_plot_table(records, checkpoint), csv_path=path)
        written.append(path)
    return written


def read_records(path: str) -> List[dict]:
    """Wczytuje rekordy zapisane przez write_records (JSON albo CSV)."""
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as f:
            try:
                rows = json.load(f)
            except json.JSONDecodeError as e:
                raise FormatError(f"Plik rekordów '{path}' nie jest poprawnym JSON: {e}") from e
        if not isinstance(rows, list):
            raise FormatError(f"Plik rekordów '{path}' musi zawierać listę")
        return rows
    if path.endswith(".csv"):
        return pd.read_csv(path, float_precision="round_trip").to_dict(orient="records")
    raise FormatError(f"Nieobsługiwany format pliku rekordów: {path} (oczekiwano .json lub .csv)")
