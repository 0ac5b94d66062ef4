"""Zbiór zmierzonych bitstringów z licznościami"""

import json
import numbers
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from src.errors import FormatError, LengthError


class SampleSet:
    """
    Liczności pomiarów: bitstring -> liczba strzałów.

    Wszystkie klucze mają tę samą długość i składają się z '0' i '1'.
    Suma liczności jest zawsze równa `shots`.
    """

    def __init__(self, counts: Mapping[str, int], label: str = "", shots: Optional[int] = None):
        cleaned: Dict[str, int] = {}
        width = None
        for key, count in counts.items():
            if not isinstance(key, str) or not key or set(key) - {"0", "1"}:
                raise FormatError(f"Niepoprawny bitstring {key!r}")
            if width is None:
                width = len(key)
            elif len(key) != width:
                raise LengthError(f"Bitstringi o różnych długościach: {width} i {len(key)} ({key})")
            if not isinstance(count, numbers.Integral) or count < 0:
                raise FormatError(f"Liczność dla '{key}' musi być nieujemną liczbą całkowitą, jest {count}")
            if count:
                cleaned[key] = cleaned.get(key, 0) + int(count)
        self.counts: Dict[str, int] = dict(sorted(cleaned.items()))
        self.label = label
        self._width = width or 0
        total = sum(self.counts.values())
        if shots is not None and shots != total:
            raise FormatError(f"Pole shots={shots} nie zgadza się z sumą liczności {total}")
        self.shots = total

    @property
    def width(self) -> int:
        return self._width

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts.items())

    def __contains__(self, key: str) -> bool:
        return key in self.counts

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return self.label == other.label and self.counts == other.counts

    def __repr__(self):
        return f"SampleSet(label={self.label!r}, shots={self.shots}, unique={len(self)})"

    def probabilities(self) -> Dict[str, float]:
        if not self.shots:
            return {}
        return {key: count / self.shots for key, count in self.counts.items()}

    def most_common(self, n: int = 10) -> List[Tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]

    def merge(self, other: "SampleSet") -> "SampleSet":
        if self.counts and other.counts and self.width != other.width:
            raise LengthError(f"Nie można połączyć zbiorów o szerokościach {self.width} i {other.width}")
        merged = dict(self.counts)
        for key, count in other.counts.items():
            merged[key] = merged.get(key, 0) + count
        return SampleSet(merged, self.label)

    @classmethod
    def from_shots(cls, keys: Iterable[str], label: str = "") -> "SampleSet":
        counts: Dict[str, int] = {}
        for key in keys:
            counts[key] = counts.get(key, 0) + 1
        return cls(counts, label)

    def to_dict(self) -> dict:
        return {"label": self.label, "shots": self.shots, "counts": dict(self.counts)}

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSet":
        try:
            return cls(data["counts"], data.get("label", ""), data.get("shots"))
        except (KeyError, AttributeError, TypeError) as e:
            raise FormatError(f"Niepoprawny dokument próbek: {type(e).__name__}: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SampleSet":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"Dokument próbek nie jest poprawnym JSON: {e}") from e
        if not isinstance(data, dict):
            raise FormatError("Dokument próbek musi być obiektem JSON")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "SampleSet":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(f.read())

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json())
            f.write("\n")
