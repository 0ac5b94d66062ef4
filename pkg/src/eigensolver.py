"""Najniższa para własna: diagonalizacja pełna i iteracja Davidsona"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from src.determinant import (
    Determinant,
    SubspaceMatrix,
    enumerate_determinants,
    project_hamiltonian,
)
from src.errors import ArgumentError, CapacityError, ConvergenceError
from src.hamiltonian import FermionHamiltonian
from utils.constants import (
    DAVIDSON_MAX_ITER,
    DAVIDSON_MAX_SPACE,
    DAVIDSON_RESTART_DIM,
    DEFAULT_RESIDUAL_TOL,
    DENSE_THRESHOLD,
    FCI_MAX_DIMENSION,
)
from utils.helpers import make_rng

MatrixLike = Union[SubspaceMatrix, np.ndarray, sp.spmatrix]


@dataclass(frozen=True)
class EigenResult:
    energy: float
    vector: np.ndarray
    iterations: int
    residual_norm: float
    method: str


def _fix_sign(vector: np.ndarray) -> np.ndarray:
    """Pierwszy niezerowy współczynnik ma być dodatni."""
    nonzero = np.flatnonzero(np.abs(vector) > 1e-12)
    if nonzero.size and vector[nonzero[0]] < 0:
        return -vector
    return vector


def _as_operator(matrix: MatrixLike):
    entries = matrix.entries if isinstance(matrix, SubspaceMatrix) else matrix
    if not sp.issparse(entries):
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ArgumentError(f"Macierz musi być kwadratowa, otrzymano kształt {entries.shape}")
    if entries.shape[0] < 1:
        raise ArgumentError("Macierz ma wymiar 0")
    return entries


def _diagonal(entries) -> np.ndarray:
    return np.asarray(entries.diagonal(), dtype=float).ravel()


def _dense_solve(entries) -> EigenResult:
    dense = entries.toarray() if sp.issparse(entries) else entries
    values, vectors = scipy.linalg.eigh(dense, subset_by_index=[0, 0])
    vector = _fix_sign(vectors[:, 0] / np.linalg.norm(vectors[:, 0]))
    energy = float(values[0])
    residual = float(np.linalg.norm(dense @ vector - energy * vector))
    return EigenResult(energy, vector, 1, residual, "dense")


def _orthonormalize(t: np.ndarray, basis: np.ndarray) -> Tuple[np.ndarray, float]:
    # dwa przebiegi Grama-Schmidta
    for _ in range(2):
        if basis.shape[1]:
            t = t - basis @ (basis.T @ t)
    norm = float(np.linalg.norm(t))
    return (t / norm if norm > 0 else t), norm


def _davidson(
    entries,
    guess_index: int,
    tol: float,
    max_iter: int,
    restart_dim: int,
    max_space: int,
) -> EigenResult:
    n = entries.shape[0]
    diag = _diagonal(entries)
    rng = make_rng(0)

    basis = np.zeros((n, 0))
    projected = np.zeros((n, 0))
    t = np.zeros(n)
    t[guess_index] = 1.0
    best_residual = math.inf

    for iteration in range(1, max_iter + 1):
        t, norm = _orthonormalize(t, basis)
        if norm < 1e-10:
            # kierunek liniowo zależny: wektor losowy z deterministycznego strumienia
            t, norm = _orthonormalize(rng.standard_normal(n), basis)
            if norm < 1e-10:
                break
        basis = np.column_stack([basis, t])
        projected = np.column_stack([projected, entries @ t])

        small = basis.T @ projected
        small = 0.5 * (small + small.T)
        theta, ritz = np.linalg.eigh(small)
        x = basis @ ritz[:, 0]
        ax = projected @ ritz[:, 0]
        residual = ax - theta[0] * x
        residual_norm = float(np.linalg.norm(residual))
        best_residual = min(best_residual, residual_norm)

        if residual_norm <= tol or basis.shape[1] == n:
            x = _fix_sign(x / np.linalg.norm(x))
            return EigenResult(float(theta[0]), x, iteration, residual_norm, "davidson")

        if basis.shape[1] >= max_space:
            keep = min(restart_dim, basis.shape[1])
            basis = basis @ ritz[:, :keep]
            projected = projected @ ritz[:, :keep]

        denom = theta[0] - diag
        denom[np.abs(denom) < 1e-8] = 1e-8
        t = residual / denom

    raise ConvergenceError(
        f"Davidson nie osiągnął tolerancji {tol:.1e} w {max_iter} iteracjach", best_residual
    )


def lowest_eigenpair(
    matrix: MatrixLike,
    tol: float = DEFAULT_RESIDUAL_TOL,
    guess_index: Optional[int] = None,
    dense_threshold: int = DENSE_THRESHOLD,
    max_iter: int = DAVIDSON_MAX_ITER,
) -> EigenResult:
    """
    Najniższa wartość własna i unormowany wektor własny macierzy symetrycznej.

    Do wymiaru dense_threshold włącznie stosowana jest pełna diagonalizacja,
    powyżej iteracja Davidsona z prekondycjonerem diagonalnym. Wektorem
    startowym jest wektor jednostkowy guess_index (domyślnie najmniejszy
    element diagonali).

    Raises:
        ConvergenceError: brak zbieżności po max_iter iteracjach.
    """
    entries = _as_operator(matrix)
    n = entries.shape[0]
    if n <= dense_threshold:
        return _dense_solve(entries)
    if guess_index is None:
        guess_index = int(np.argmin(_diagonal(entries)))
    if not 0 <= guess_index < n:
        raise ArgumentError(f"Indeks startowy {guess_index} poza zakresem [0, {n})")
    return _davidson(
        entries, guess_index, tol, max_iter, DAVIDSON_RESTART_DIM, DAVIDSON_MAX_SPACE
    )


def fci_dimension(ham: FermionHamiltonian) -> int:
    return math.comb(ham.norb, ham.n_alpha) * math.comb(ham.norb, ham.n_beta)


def fci_ground_state(
    ham: FermionHamiltonian, max_dimension: int = FCI_MAX_DIMENSION
) -> Tuple[float, Dict[Determinant, float]]:
    """Dokładny stan podstawowy w pełnej bazie sektora (n_alpha, n_beta)."""
    dimension = fci_dimension(ham)
    if dimension > max_dimension:
        raise CapacityError(
            f"Baza FCI ma {dimension} wyznaczników, limit wynosi {max_dimension}"
        )
    basis = enumerate_determinants(ham.norb, ham.n_alpha, ham.n_beta)
    result = lowest_eigenpair(project_hamiltonian(ham, basis))
    return result.energy, {det: float(c) for det, c in zip(basis, result.vector)}
