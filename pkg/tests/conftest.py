import os
import sys

import numpy as np
import pytest

# Add the project root to the path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.hamiltonian import make_hubbard_chain, random_hamiltonian  # noqa: E402

DIMER_FCIDUMP = """ &FCI NORB=2,NELEC=2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
 4.0 1 1 1 1
 4.0 2 2 2 2
 -1.0 1 2 0 0
 0.0 0 0 0 0
"""


def _sign_below(state: int, mode: int) -> int:
    return -1 if bin(state & ((1 << mode) - 1)).count("1") % 2 else 1


def _annihilate(state, mode):
    if not (state >> mode) & 1:
        return None, 0
    return state ^ (1 << mode), _sign_below(state, mode)


def _create(state, mode):
    if (state >> mode) & 1:
        return None, 0
    return state | (1 << mode), _sign_below(state, mode)


def _apply_string(state, ops):
    """ops: lista (tryb, czy_kreacja) stosowana od prawej do lewej."""
    sign = 1
    for mode, dagger in reversed(ops):
        state, s = (_create if dagger else _annihilate)(state, mode)
        if state is None:
            return None, 0
        sign *= s
    return state, sign


def fock_apply(ham, state: int) -> dict:
    """H|state> w pełnej przestrzeni Focka; tryb k < M to alfa k, tryb M+k to beta k."""
    m = ham.norb
    out = {state: ham.e_core}

    def add(target, value):
        out[target] = out.get(target, 0.0) + value

    spins = (0, m)
    for off in spins:
        for p in range(m):
            for q in range(m):
                if ham.h[p, q] == 0.0:
                    continue
                target, sign = _apply_string(state, [(p + off, True), (q + off, False)])
                if target is not None:
                    add(target, sign * ham.h[p, q])
    for p, q, r, s in np.argwhere(np.abs(ham.g) > 0):
        value = 0.5 * ham.g[p, q, r, s]
        for o1 in spins:
            for o2 in spins:
                ops = [(p + o1, True), (r + o2, True), (s + o2, False), (q + o1, False)]
                target, sign = _apply_string(state, ops)
                if target is not None:
                    add(target, sign * value)
    return out


@pytest.fixture
def dimer():
    return make_hubbard_chain(2, 4.0, 1.0, 1, 1)


@pytest.fixture
def dimer_text():
    return DIMER_FCIDUMP


@pytest.fixture
def chain4():
    return make_hubbard_chain(4, 4.0, 1.0, 2, 2)


@pytest.fixture
def random_ham4():
    return random_hamiltonian(4, 2, 2, seed=7, scale=0.5)


@pytest.fixture
def fock_oracle():
    return fock_apply


@pytest.fixture
def results_db(tmp_path, monkeypatch):
    path = tmp_path / "results.db"
    monkeypatch.setenv("SQD_RESULTS_DB", str(path))
    return path
