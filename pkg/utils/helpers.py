'''Funkcje pomocnicze'''

import hashlib
import os
import sys

import numpy as np


# Liczba ustawionych bitów
def popcount(value: int) -> int:
    return int(value).bit_count()


# Lista pozycji ustawionych bitów (rosnąco)
def bit_positions(value: int) -> list:
    out = []
    k = 0
    while value:
        if value & 1:
            out.append(k)
        value >>= 1
        k += 1
    return out


# Stabilne ziarno strumienia: BLAKE2b-64 po częściach połączonych znakiem '|'
def derive_seed(*parts) -> int:
    text = "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


# Generator PCG64 - ten sam algorytm na każdej platformie
def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def get_data_path(*parts: str) -> str:
    """
    Zwraca ścieżkę do pliku w folderze 'data', który leży obok pliku .exe
    lub w głównym folderze projektu.
    """
    if getattr(sys, "frozen", False):
        application_path = os.path.dirname(sys.executable)
    else:
        script_path = os.path.abspath(__file__)
        application_path = os.path.dirname(os.path.dirname(script_path))

    return os.path.join(application_path, "data", *parts)
