#!/usr/bin/env python3
"""
Skrypt czyszczący lokalną bazę wyników eksperymentów RBD.
Usuwa wszystkie przebiegi i rekordy oraz resetuje numerację id od 1.
"""

import os
import sys

# Add the project root to the path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from utils import console
from utils.results_store import clear_results, init_db


def main():
    console.info("Czyszczenie bazy wyników...")

    # Clear all runs and records and reset sequences
    clear_results()

    # Reinitialize the database structure
    init_db()

    console.success("Baza wyników wyczyszczona, nowe przebiegi zaczną się od id 1.")


if __name__ == "__main__":
    main()
