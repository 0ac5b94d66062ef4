"""Klasa hamiltonian fermionowy oraz wczytywanie/zapis plików FCIDUMP"""

# Konwencja chemiczna (pq|rs), indeksy w plikach od 1, wewnętrznie od 0.
# ORBSYM/ISYM są wczytywane, ale ignorowane (brak symetrii punktowej).

import re
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.errors import (
    ArgumentError,
    ConflictError,
    InconsistencyError,
    ParseError,
    RangeError,
)
from utils.constants import FCIDUMP_CONFLICT_TOL
from utils.helpers import make_rng


def _g_permutations(p: int, q: int, r: int, s: int) -> List[Tuple[int, int, int, int]]:
    """Osiem permutacji indeksów równoważnych dla rzeczywistych całek (pq|rs)."""
    return [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ]


class FermionHamiltonian:
    """Całki jedno- i dwuelektronowe aktywnej przestrzeni (Hartree)"""

    def __init__(
        self,
        norb: int,  # Liczba orbitali przestrzennych M
        n_alpha: int,  # Liczba elektronów alfa
        n_beta: int,  # Liczba elektronów beta
        h: np.ndarray,  # Całki jednoelektronowe M x M
        g: np.ndarray,  # Całki dwuelektronowe (pq|rs), M x M x M x M
        e_core: float = 0.0,  # Energia rdzenia (stała)
    ):
        h = np.array(h, dtype=float)
        g = np.array(g, dtype=float)
        if norb < 1:
            raise ArgumentError(f"Liczba orbitali musi być dodatnia, podano {norb}")
        if h.shape != (norb, norb):
            raise ArgumentError(f"Macierz h ma kształt {h.shape}, oczekiwano {(norb, norb)}")
        if g.shape != (norb,) * 4:
            raise ArgumentError(f"Tensor g ma kształt {g.shape}, oczekiwano {(norb,) * 4}")
        if not (0 <= n_alpha <= norb and 0 <= n_beta <= norb):
            raise InconsistencyError(
                f"Liczby elektronów ({n_alpha}, {n_beta}) poza zakresem [0, {norb}]"
            )
        if not np.allclose(h, h.T, rtol=0.0, atol=1e-12):
            raise ArgumentError("Macierz h nie jest symetryczna")
        for axes in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(g, g.transpose(axes), rtol=0.0, atol=1e-12):
                raise ArgumentError("Tensor g nie ma 8-krotnej symetrii permutacyjnej")

        h.setflags(write=False)
        g.setflags(write=False)
        self.norb = int(norb)
        self.n_alpha = int(n_alpha)
        self.n_beta = int(n_beta)
        self.h = h
        self.g = g
        self.e_core = float(e_core)

    @property
    def n_electrons(self) -> int:
        return self.n_alpha + self.n_beta

    @property
    def ms2(self) -> int:
        return self.n_alpha - self.n_beta

    def canonical_two_body(self) -> Iterator[Tuple[float, int, int, int, int]]:
        """Jeden reprezentant na klasę symetrii: p>=q, r>=s, pq>=rs (indeksy od 0)."""
        m = self.norb
        for p in range(m):
            for q in range(p + 1):
                pq = p * (p + 1) // 2 + q
                for r in range(m):
                    for s in range(r + 1):
                        rs = r * (r + 1) // 2 + s
                        if rs > pq:
                            continue
                        value = float(self.g[p, q, r, s])
                        if value != 0.0:
                            yield value, p, q, r, s

    def __eq__(self, other):
        if not isinstance(other, FermionHamiltonian):
            return NotImplemented
        return (
            self.norb == other.norb
            and self.n_alpha == other.n_alpha
            and self.n_beta == other.n_beta
            and self.e_core == other.e_core
            and np.array_equal(self.h, other.h)
            and np.array_equal(self.g, other.g)
        )

    def __str__(self):
        return (
            f"Hamiltonian M={self.norb} (n_alpha={self.n_alpha}, n_beta={self.n_beta}), "
            f"E_core={self.e_core:.10f} Ha"
        )

    def to_dict(self) -> Dict:
        """Konwertuje hamiltonian do słownika w celu serializacji do JSON."""
        return {
            "norb": self.norb,
            "n_alpha": self.n_alpha,
            "n_beta": self.n_beta,
            "e_core": self.e_core,
            "h": self.h.tolist(),
            "g": [list(entry) for entry in self.canonical_two_body()],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FermionHamiltonian":
        norb = int(data["norb"])
        g = np.zeros((norb,) * 4)
        for value, p, q, r, s in data.get("g", []):
            for idx in _g_permutations(int(p), int(q), int(r), int(s)):
                g[idx] = float(value)
        return cls(
            norb,
            int(data["n_alpha"]),
            int(data["n_beta"]),
            np.array(data["h"], dtype=float),
            g,
            float(data.get("e_core", 0.0)),
        )


# --- FCIDUMP ---

_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_header(lines: List[str]) -> Tuple[Dict[str, Tuple[List[str], int]], int]:
    """
    Wczytuje nagłówek w stylu namelist (&FCI ... &END lub /).

    Returns:
        (klucz -> (lista wartości, numer linii), indeks pierwszej linii po nagłówku)
    """
    start = 0
    while start < len(lines) and not lines[start].strip():
        start += 1
    if start == len(lines) or not lines[start].lstrip().upper().startswith("&FCI"):
        raise ParseError("Brak nagłówka &FCI", start + 1)

    values: Dict[str, Tuple[List[str], int]] = {}
    last_key: Optional[str] = None
    for idx in range(start, len(lines)):
        text = lines[idx].strip()
        if idx == start:
            text = text[4:]
        finished = False
        end_match = re.search(r"&END|/", text, flags=re.IGNORECASE)
        if end_match:
            text = text[: end_match.start()]
            finished = True

        parts = _KEY_RE.split(text)
        # parts[0] to kontynuacja wartości poprzedniego klucza (np. długie ORBSYM)
        leading = parts[0].strip().strip(",")
        if leading:
            if last_key is None:
                raise ParseError(f"Nieoczekiwany tekst w nagłówku: '{leading}'", idx + 1)
            values[last_key][0].extend(v.strip() for v in leading.split(",") if v.strip())
        for key, value in zip(parts[1::2], parts[2::2]):
            key = key.upper()
            values[key] = ([v.strip() for v in value.split(",") if v.strip()], idx + 1)
            last_key = key

        if finished:
            return values, idx + 1

    raise ParseError("Nagłówek nie jest zakończony (&END lub /)", len(lines))


def _header_int(
    values: Dict[str, Tuple[List[str], int]], key: str, default: Optional[int] = None
) -> int:
    if key not in values:
        if default is None:
            raise ParseError(f"Brak klucza {key} w nagłówku", 1)
        return default
    items, line_no = values[key]
    if len(items) != 1 or not re.fullmatch(r"[+-]?\d+", items[0]):
        raise ParseError(f"Niepoprawna wartość klucza {key}: {items}", line_no)
    return int(items[0])


def parse_fcidump(text: str) -> FermionHamiltonian:
    """
    Wczytuje hamiltonian z tekstu FCIDUMP.

    Linie `wartość p q r s` (indeksy od 1): p q r s > 0 to całki dwuelektronowe,
    `p q 0 0` jednoelektronowe, `0 0 0 0` energia rdzenia. Każda linia wypełnia
    wszystkie sloty równoważne ze względu na symetrię.
    """
    lines = text.splitlines()
    header, body_start = _parse_header(lines)
    norb = _header_int(header, "NORB")
    nelec = _header_int(header, "NELEC")
    ms2 = _header_int(header, "MS2", 0)
    if norb < 1:
        raise ParseError(f"NORB musi być dodatnie, podano {norb}", 1)
    if (nelec + ms2) % 2 != 0:
        raise InconsistencyError(f"NELEC={nelec} i MS2={ms2} mają różną parzystość", 1)
    n_alpha = (nelec + ms2) // 2
    n_beta = (nelec - ms2) // 2
    if not (0 <= n_alpha <= norb and 0 <= n_beta <= norb):
        raise InconsistencyError(
            f"NELEC={nelec}, MS2={ms2} nie mieszczą się w NORB={norb} orbitalach", 1
        )

    h = np.zeros((norb, norb))
    g = np.zeros((norb,) * 4)
    h_set = np.zeros((norb, norb), dtype=bool)
    g_set = np.zeros((norb,) * 4, dtype=bool)
    e_core: Optional[float] = None

    def _store(table, mask, slots, value, line_no):
        for slot in slots:
            if mask[slot] and abs(table[slot] - value) > FCIDUMP_CONFLICT_TOL:
                raise ConflictError(
                    f"Sprzeczne wartości całki {tuple(i + 1 for i in slot)}: "
                    f"{table[slot]!r} i {value!r}",
                    line_no,
                )
        for slot in slots:
            table[slot] = value
            mask[slot] = True

    for idx in range(body_start, len(lines)):
        line_no = idx + 1
        fields = lines[idx].split()
        if not fields:
            continue
        if len(fields) != 5:
            raise ParseError(f"Oczekiwano 5 pól, znaleziono {len(fields)}", line_no)
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            p, q, r, s = (int(f) for f in fields[1:])
        except ValueError:
            raise ParseError(f"Niepoprawna linia całki: '{lines[idx].strip()}'", line_no)

        for index in (p, q, r, s):
            if index < 0 or index > norb:
                raise RangeError(f"Indeks {index} poza zakresem [0, {norb}]", line_no)

        if p == q == r == s == 0:
            if e_core is not None and abs(e_core - value) > FCIDUMP_CONFLICT_TOL:
                raise ConflictError(
                    f"Sprzeczne energie rdzenia {e_core!r} i {value!r}", line_no
                )
            e_core = value
        elif r == 0 and s == 0:
            if p == 0 or q == 0:
                raise RangeError(
                    f"Całka jednoelektronowa z indeksem 0: ({p}, {q})", line_no
                )
            i, j = p - 1, q - 1
            _store(h, h_set, [(i, j), (j, i)], value, line_no)
        else:
            if 0 in (p, q, r, s):
                raise RangeError(
                    f"Całka dwuelektronowa z indeksem 0: ({p}, {q}, {r}, {s})", line_no
                )
            slots = sorted(set(_g_permutations(p - 1, q - 1, r - 1, s - 1)))
            _store(g, g_set, slots, value, line_no)

    return FermionHamiltonian(
        norb, n_alpha, n_beta, h, g, e_core if e_core is not None else 0.0
    )


def _format_value(value: float) -> str:
    # 17 cyfr znaczących gwarantuje bitowo identyczny odczyt
    return f"{value:24.16e}"


def write_fcidump(ham: FermionHamiltonian) -> str:
    """Zapisuje hamiltonian w formacie FCIDUMP (jeden reprezentant na klasę symetrii)."""
    out = [
        f" &FCI NORB={ham.norb},NELEC={ham.n_electrons},MS2={ham.ms2},",
        "  ORBSYM=" + "1," * ham.norb,
        "  ISYM=1,",
        " &END",
    ]
    for value, p, q, r, s in ham.canonical_two_body():
        out.append(f"{_format_value(value)} {p + 1:4d} {q + 1:4d} {r + 1:4d} {s + 1:4d}")
    for p in range(ham.norb):
        for q in range(p + 1):
            value = float(ham.h[p, q])
            if value != 0.0:
                out.append(f"{_format_value(value)} {p + 1:4d} {q + 1:4d}    0    0")
    out.append(f"{_format_value(ham.e_core)}    0    0    0    0")
    return "\n".join(out) + "\n"


def load_fcidump(path: str) -> FermionHamiltonian:
    with open(path, "r", encoding="utf-8") as f:
        return parse_fcidump(f.read())


def save_fcidump(ham: FermionHamiltonian, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_fcidump(ham))


# --- Hamiltoniany testowe ---


def make_hubbard_chain(
    L: int, U: float, t: float, n_alpha: int, n_beta: int
) -> FermionHamiltonian:
    """Otwarty łańcuch Hubbarda: h[i][i+1] = -t, (ii|ii) = U."""
    if L < 2:
        raise ArgumentError(f"Łańcuch Hubbarda wymaga co najmniej 2 węzłów, podano {L}")
    if not (0 <= n_alpha <= L and 0 <= n_beta <= L):
        raise ArgumentError(f"Liczby elektronów ({n_alpha}, {n_beta}) poza zakresem [0, {L}]")
    h = np.zeros((L, L))
    g = np.zeros((L,) * 4)
    for i in range(L - 1):
        h[i, i + 1] = h[i + 1, i] = -t
    for i in range(L):
        g[i, i, i, i] = U
    return FermionHamiltonian(L, n_alpha, n_beta, h, g, 0.0)


def random_hamiltonian(
    norb: int, n_alpha: int, n_beta: int, seed: int = 0, scale: float = 1.0
) -> FermionHamiltonian:
    """
    Losowy rzeczywisty hamiltonian z pełną symetrią całek.

    g[p,q,r,s] = sum_k L_k[p,q] * L_k[r,s] dla losowych symetrycznych L_k,
    dzięki czemu tensor ma 8-krotną symetrię i dodatnią "macierz Coulomba".
    """
    rng = make_rng(seed)
    a = rng.normal(scale=scale, size=(norb, norb))
    h = 0.5 * (a + a.T)
    g = np.zeros((norb,) * 4)
    for _ in range(norb):
        b = rng.normal(scale=np.sqrt(scale), size=(norb, norb))
        chol = 0.5 * (b + b.T)
        g += np.einsum("pq,rs->pqrs", chol, chol)
    e_core = float(rng.normal(scale=scale))
    return FermionHamiltonian(norb, n_alpha, n_beta, h, g, e_core)
