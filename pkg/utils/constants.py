#utils/constants.py

'''Stałe fizyczne i domyślne ustawienia numeryczne'''

# Przelicznik Hartree -> kcal/mol
HARTREE_TO_KCAL_PER_MOL = 627.5094740631

# --- PRÓBKOWANIE ---
DEFAULT_SHOTS = 200_000
DEFAULT_P_READOUT = 0.01
DEFAULT_P_XTALK = 0.01
DEFAULT_XTALK_DECAY = 0.25
DEFAULT_XTALK_MAX_HOPS = 3

# --- SQD ---
DEFAULT_N_BATCHES = 10
DEFAULT_BATCH_SIZE = 3000
DEFAULT_MAX_ITERATIONS = 5
DEFAULT_ENERGY_TOL = 1e-8
DEFAULT_OCCUPANCY_TOL = 1e-5
DEFAULT_CARRYOVER_THRESHOLD = 1e-4
DEFAULT_EXTSQD_CI_THRESHOLD = 1e-5
# Dodatek do wag przy losowaniu bitów do odwrócenia
RECOVERY_EPSILON = 1e-12

# --- DIAGONALIZACJA ---
DENSE_THRESHOLD = 2000
SPARSE_STORAGE_THRESHOLD = 64
DAVIDSON_RESTART_DIM = 20
DAVIDSON_MAX_SPACE = 40
DAVIDSON_MAX_ITER = 200
DEFAULT_RESIDUAL_TOL = 1e-8
FCI_MAX_DIMENSION = 10**6

# --- UKŁADY KUBITÓW ---
DEFAULT_ANGLE_TOL = 1e-8
DEFAULT_MIN_BUFFER = 1
DEFAULT_N_ANCILLA = 3

# Tolerancja przy porównywaniu zduplikowanych całek w FCIDUMP
FCIDUMP_CONFLICT_TOL = 1e-12
