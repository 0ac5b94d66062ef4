"""Wyznaczniki Slatera, reguły Slatera-Condona i rzutowanie hamiltonianu"""

# Kodowanie: bit logiczny k (k < M) to orbital alfa k, bit M+k to orbital beta k.
# Tekst bitstringu drukuje najwyższy bit (2M-1) jako pierwszy znak z lewej.
# Znak fermionowy: spin-orbitale uporządkowane alfa_0 < ... < alfa_{M-1} < beta_0 < ...,
# operator anihilacji a_p daje (-1)^(liczba zajętych spin-orbitali o indeksie < p).

import itertools
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from src.errors import ArgumentError, LengthError, RangeError
from src.hamiltonian import FermionHamiltonian
from utils.constants import SPARSE_STORAGE_THRESHOLD
from utils.helpers import bit_positions, popcount

# liczba wierszy składanych naraz w project_hamiltonian
_ROW_BLOCK = 2048


@dataclass(frozen=True, order=True)
class Determinant:
    """Obsadzenia orbitali alfa i beta zapisane jako maski bitowe."""

    alpha_occ: int
    beta_occ: int

    def is_valid(self, norb: int) -> bool:
        limit = 1 << norb
        return 0 <= self.alpha_occ < limit and 0 <= self.beta_occ < limit

    def is_physical(self, n_alpha: int, n_beta: int) -> bool:
        return popcount(self.alpha_occ) == n_alpha and popcount(self.beta_occ) == n_beta

    @property
    def alpha_list(self) -> List[int]:
        return bit_positions(self.alpha_occ)

    @property
    def beta_list(self) -> List[int]:
        return bit_positions(self.beta_occ)

    def to_int(self, norb: int) -> int:
        return self.alpha_occ | (self.beta_occ << norb)

    @classmethod
    def from_lists(cls, alpha: Sequence[int], beta: Sequence[int]) -> "Determinant":
        return cls(sum(1 << p for p in set(alpha)), sum(1 << p for p in set(beta)))

    def __str__(self):
        return f"α={self.alpha_list} β={self.beta_list}"


# --- Kodowanie bitstringów ---


def encode_determinant(det: Determinant, norb: int) -> str:
    if not det.is_valid(norb):
        raise RangeError(f"Wyznacznik {det} ma bity poza zakresem [0, {norb})")
    return format(det.to_int(norb), f"0{2 * norb}b")


def decode_bitstring(bits: str, norb: int) -> Determinant:
    if len(bits) != 2 * norb:
        raise LengthError(f"Bitstring '{bits}' ma długość {len(bits)}, oczekiwano {2 * norb}")
    value = int(bits, 2)
    mask = (1 << norb) - 1
    return Determinant(value & mask, value >> norb)


def hamming_weights(bits: str, norb: int) -> Tuple[int, int]:
    """Wagi Hamminga (alfa, beta): alfa to dolna połowa, czyli prawa część tekstu."""
    if len(bits) != 2 * norb:
        raise LengthError(f"Bitstring '{bits}' ma długość {len(bits)}, oczekiwano {2 * norb}")
    return bits[norb:].count("1"), bits[:norb].count("1")


def hartree_fock_det(norb: int, n_alpha: int, n_beta: int) -> Determinant:
    if not (0 <= n_alpha <= norb and 0 <= n_beta <= norb):
        raise ArgumentError(f"Liczby elektronów ({n_alpha}, {n_beta}) przekraczają M={norb}")
    return Determinant((1 << n_alpha) - 1, (1 << n_beta) - 1)


def enumerate_determinants(norb: int, n_alpha: int, n_beta: int) -> List[Determinant]:
    """Pełna baza fizycznych wyznaczników w porządku leksykograficznym (alfa, beta)."""
    alphas = sorted(sum(1 << p for p in c) for c in itertools.combinations(range(norb), n_alpha))
    betas = sorted(sum(1 << p for p in c) for c in itertools.combinations(range(norb), n_beta))
    return [Determinant(a, b) for a in alphas for b in betas]


def excitation_degree(d1: Determinant, d2: Determinant) -> int:
    return (popcount(d1.alpha_occ ^ d2.alpha_occ) + popcount(d1.beta_occ ^ d2.beta_occ)) // 2


def single_excitations(det: Determinant, norb: int) -> List[Determinant]:
    """Wszystkie pojedyncze wzbudzenia zachowujące spin (bez samego wyznacznika)."""
    out = []
    for p in det.alpha_list:
        for a in range(norb):
            if not (det.alpha_occ >> a) & 1:
                out.append(Determinant(det.alpha_occ ^ (1 << p) ^ (1 << a), det.beta_occ))
    for p in det.beta_list:
        for a in range(norb):
            if not (det.beta_occ >> a) & 1:
                out.append(Determinant(det.alpha_occ, det.beta_occ ^ (1 << p) ^ (1 << a)))
    return out


def occupation_numbers(dets: Sequence[Determinant], norb: int) -> np.ndarray:
    """Macierz obsadzeń (n_det, 2M): blok alfa, potem blok beta."""
    shifts = np.arange(norb)
    alpha = np.array([d.alpha_occ for d in dets], dtype=np.int64)
    beta = np.array([d.beta_occ for d in dets], dtype=np.int64)
    return np.hstack(
        [(alpha[:, None] >> shifts) & 1, (beta[:, None] >> shifts) & 1]
    ).astype(float)


# --- Elementy macierzowe ---


def _annihilate(state: int, p: int) -> Tuple[int, int]:
    return (-1) ** popcount(state & ((1 << p) - 1)), state ^ (1 << p)


def _create(state: int, p: int) -> Tuple[int, int]:
    return (-1) ** popcount(state & ((1 << p) - 1)), state | (1 << p)


def _excite(state: int, hole: int, particle: int) -> Tuple[int, int]:
    """a+_particle a_hole na wyznaczniku: (znak, nowy stan)."""
    s1, state = _annihilate(state, hole)
    s2, state = _create(state, particle)
    return s1 * s2, state


def _string_excitation(bra: int, ket: int) -> Tuple[List[int], List[int]]:
    """Dziury (zajęte w ket, puste w bra) i cząstki (odwrotnie), rosnąco."""
    return bit_positions(ket & ~bra), bit_positions(bra & ~ket)


def _single_string_data(bra: int, ket: int) -> Tuple[int, int, int]:
    (hole,), (particle,) = _string_excitation(bra, ket)
    sign, _ = _excite(ket, hole, particle)
    return sign, hole, particle


def _double_string_value(g: np.ndarray, bra: int, ket: int) -> float:
    (p, q), (a, b) = _string_excitation(bra, ket)
    s1, mid = _excite(ket, p, a)
    s2, _ = _excite(mid, q, b)
    return s1 * s2 * (g[p, a, q, b] - g[p, b, q, a])


def _single_string_value(ham: FermionHamiltonian, bra: int, ket: int) -> Tuple[float, int, int, int]:
    """Część elementu pojedynczego wzbudzenia zależna tylko od jednego sektora spinowego."""
    sign, p, a = _single_string_data(bra, ket)
    occ = bit_positions(ket)
    value = ham.h[p, a] + sum(ham.g[p, a, k, k] - ham.g[p, k, k, a] for k in occ)
    return sign * value, sign, p, a


def slater_condon_element(ham: FermionHamiltonian, d1: Determinant, d2: Determinant) -> float:
    """
    Element <d1|H|d2> według reguł Slatera-Condona.

    Raises:
        ArgumentError: gdy wyznaczniki mają różne liczby elektronów.
    """
    m = ham.norb
    if not (d1.is_valid(m) and d2.is_valid(m)):
        raise RangeError(f"Wyznaczniki {d1}, {d2} mają bity poza zakresem [0, {m})")
    if popcount(d1.alpha_occ) != popcount(d2.alpha_occ) or popcount(d1.beta_occ) != popcount(
        d2.beta_occ
    ):
        raise ArgumentError(f"Wyznaczniki {d1} i {d2} mają różne liczby elektronów")

    deg_a = popcount(d1.alpha_occ ^ d2.alpha_occ) // 2
    deg_b = popcount(d1.beta_occ ^ d2.beta_occ) // 2
    if deg_a + deg_b > 2:
        return 0.0

    h, g = ham.h, ham.g
    if deg_a == 0 and deg_b == 0:
        alpha, beta = d1.alpha_list, d1.beta_list
        energy = ham.e_core
        energy += sum(h[k, k] for k in alpha) + sum(h[k, k] for k in beta)
        for occ in (alpha, beta):
            for k in occ:
                for l in occ:
                    energy += 0.5 * (g[k, k, l, l] - g[k, l, l, k])
        for k in alpha:
            for l in beta:
                energy += g[k, k, l, l]
        return float(energy)

    if deg_a == 1 and deg_b == 0:
        value, sign, p, a = _single_string_value(ham, d1.alpha_occ, d2.alpha_occ)
        return float(value + sign * sum(g[p, a, k, k] for k in d2.beta_list))
    if deg_a == 0 and deg_b == 1:
        value, sign, p, a = _single_string_value(ham, d1.beta_occ, d2.beta_occ)
        return float(value + sign * sum(g[p, a, k, k] for k in d2.alpha_list))
    if deg_a == 2:
        return float(_double_string_value(g, d1.alpha_occ, d2.alpha_occ))
    if deg_b == 2:
        return float(_double_string_value(g, d1.beta_occ, d2.beta_occ))

    # Wzbudzenie alfa + beta: znaki sektorów mnożą się, bo 2*n_alpha jest parzyste
    sign_a, p, a = _single_string_data(d1.alpha_occ, d2.alpha_occ)
    sign_b, q, b = _single_string_data(d1.beta_occ, d2.beta_occ)
    return float(sign_a * sign_b * g[p, a, q, b])


def diagonal_energies(ham: FermionHamiltonian, dets: Sequence[Determinant]) -> np.ndarray:
    """Elementy diagonalne <d|H|d> dla wielu wyznaczników naraz."""
    m = ham.norb
    occ = occupation_numbers(dets, m)
    occ_a, occ_b = occ[:, :m], occ[:, m:]
    coulomb = np.einsum("ppqq->pq", ham.g)
    exchange = np.einsum("pqqp->pq", ham.g)
    hd = np.diag(ham.h)
    same = coulomb - exchange
    return (
        ham.e_core
        + occ_a @ hd
        + occ_b @ hd
        + 0.5 * np.einsum("ip,pq,iq->i", occ_a, same, occ_a)
        + 0.5 * np.einsum("ip,pq,iq->i", occ_b, same, occ_b)
        + np.einsum("ip,pq,iq->i", occ_a, coulomb, occ_b)
    )


class SubspaceMatrix:
    """Hamiltonian rzutowany na podprzestrzeń rozpiętą przez listę wyznaczników."""

    def __init__(
        self,
        basis: Sequence[Determinant],
        entries: Union[np.ndarray, sp.csr_matrix],
    ):
        self.basis: Tuple[Determinant, ...] = tuple(basis)
        self.entries = entries
        self._index = {det: i for i, det in enumerate(self.basis)}

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.entries)

    def index_of(self, det: Determinant) -> int:
        return self._index[det]

    def __contains__(self, det: Determinant) -> bool:
        return det in self._index

    def to_dense(self) -> np.ndarray:
        return self.entries.toarray() if self.is_sparse else np.array(self.entries)

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.entries.diagonal()).ravel()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.entries @ x

    def element(self, i: int, j: int) -> float:
        return float(self.entries[i, j])


def _string_tables(ham: FermionHamiltonian, strings: np.ndarray, other_occ_dim: int):
    """
    Tablice par łańcuchów jednego sektora spinowego.

    Returns:
        degree: stopień wzbudzenia par (n x n)
        single: część "jednosektorowa" elementów pojedynczych wzbudzeń
        coulomb: wektor sign*(pa|kk) do kontrakcji z obsadzeniem drugiego sektora
        sign, hole, particle: dane pojedynczych wzbudzeń (dla wzbudzeń alfa+beta)
        double: elementy podwójnych wzbudzeń w jednym sektorze
    """
    n = len(strings)
    xor = strings[:, None] ^ strings[None, :]
    degree = (np.bitwise_count(xor.astype(np.uint64)) // 2).astype(np.int8)

    single = np.zeros((n, n))
    coulomb = np.zeros((n, n, other_occ_dim))
    sign = np.zeros((n, n))
    hole = np.zeros((n, n), dtype=np.int64)
    particle = np.zeros((n, n), dtype=np.int64)
    double = np.zeros((n, n))

    for x, y in zip(*np.nonzero(degree == 1)):
        bra, ket = int(strings[x]), int(strings[y])
        value, s, p, a = _single_string_value(ham, bra, ket)
        single[x, y] = value
        coulomb[x, y] = s * np.diagonal(ham.g[p, a])
        sign[x, y], hole[x, y], particle[x, y] = s, p, a
    for x, y in zip(*np.nonzero(degree == 2)):
        double[x, y] = _double_string_value(ham.g, int(strings[x]), int(strings[y]))
    return degree, single, coulomb, sign, hole, particle, double


def project_hamiltonian(ham: FermionHamiltonian, dets: Sequence[Determinant]) -> SubspaceMatrix:
    """
    Rzutuje hamiltonian na podprzestrzeń wyznaczników (H_S = P_S H P_S).

    Elementy liczone są przez tablice par unikalnych łańcuchów alfa i beta,
    więc koszt zależy głównie od liczby unikalnych łańcuchów, a nie par wyznaczników.
    Przechowywane są tylko elementy o stopniu wzbudzenia <= 2.
    """
    dets = list(dets)
    if not dets:
        raise ArgumentError("Baza podprzestrzeni jest pusta")
    if len(set(dets)) != len(dets):
        raise ArgumentError("Baza podprzestrzeni zawiera powtórzone wyznaczniki")
    m = ham.norb
    n_a, n_b = popcount(dets[0].alpha_occ), popcount(dets[0].beta_occ)
    for det in dets:
        if not det.is_valid(m):
            raise RangeError(f"Wyznacznik {det} ma bity poza zakresem [0, {m})")
        if not det.is_physical(n_a, n_b):
            raise ArgumentError(f"Wyznacznik {det} ma inne liczby elektronów niż {dets[0]}")

    n = len(dets)
    alpha_ints = np.array([d.alpha_occ for d in dets], dtype=np.int64)
    beta_ints = np.array([d.beta_occ for d in dets], dtype=np.int64)
    a_str, ia = np.unique(alpha_ints, return_inverse=True)
    b_str, ib = np.unique(beta_ints, return_inverse=True)
    shifts = np.arange(m)
    occ_a = ((a_str[:, None] >> shifts) & 1).astype(float)
    occ_b = ((b_str[:, None] >> shifts) & 1).astype(float)

    deg_a, single_a, coul_a, sign_a, hole_a, part_a, double_a = _string_tables(ham, a_str, m)
    deg_b, single_b, coul_b, sign_b, hole_b, part_b, double_b = _string_tables(ham, b_str, m)

    rows_all, cols_all, vals_all = [np.arange(n)], [np.arange(n)], [diagonal_energies(ham, dets)]

    for start in range(0, n, _ROW_BLOCK):
        block = np.arange(start, min(start + _ROW_BLOCK, n))
        da = deg_a[ia[block][:, None], ia[None, :]]
        db = deg_b[ib[block][:, None], ib[None, :]]

        # pojedyncze alfa przy tym samym łańcuchu beta
        r, c = np.nonzero((da == 1) & (db == 0))
        r = block[r]
        x, y = ia[r], ia[c]
        vals = single_a[x, y] + np.einsum("ik,ik->i", coul_a[x, y], occ_b[ib[c]])
        rows_all.append(r), cols_all.append(c), vals_all.append(vals)
        # pojedyncze beta przy tym samym łańcuchu alfa
        r, c = np.nonzero((da == 0) & (db == 1))
        r = block[r]
        x, y = ib[r], ib[c]
        vals = single_b[x, y] + np.einsum("ik,ik->i", coul_b[x, y], occ_a[ia[c]])
        rows_all.append(r), cols_all.append(c), vals_all.append(vals)
        # podwójne w jednym sektorze
        r, c = np.nonzero((da == 2) & (db == 0))
        r = block[r]
        rows_all.append(r), cols_all.append(c), vals_all.append(double_a[ia[r], ia[c]])
        r, c = np.nonzero((da == 0) & (db == 2))
        r = block[r]
        rows_all.append(r), cols_all.append(c), vals_all.append(double_b[ib[r], ib[c]])
        # podwójne alfa + beta
        r, c = np.nonzero((da == 1) & (db == 1))
        r = block[r]
        xa, ya, xb, yb = ia[r], ia[c], ib[r], ib[c]
        vals = (
            sign_a[xa, ya]
            * sign_b[xb, yb]
            * ham.g[hole_a[xa, ya], part_a[xa, ya], hole_b[xb, yb], part_b[xb, yb]]
        )
        rows_all.append(r), cols_all.append(c), vals_all.append(vals)

    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    vals = np.concatenate(vals_all)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if n < SPARSE_STORAGE_THRESHOLD:
        return SubspaceMatrix(dets, matrix.toarray())
    return SubspaceMatrix(dets, matrix)
