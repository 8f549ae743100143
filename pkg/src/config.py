"""
Configurazione centrale del sistema
Percorsi, problemi supportati e soglie numeriche
"""
from pathlib import Path

# Paths
BASE_DIR = Path(__file__).parent.parent
RESULTS_DIR = BASE_DIR / "results"
SNAPSHOTS_DIR = RESULTS_DIR / "snapshots"

# Crea directory se non esistono
for dir_path in [RESULTS_DIR, SNAPSHOTS_DIR]:
    dir_path.mkdir(parents=True, exist_ok=True)

# Problemi supportati: tipo di operatore e condizione iniziale di default
SUPPORTED_PROBLEMS = {
    "heat_uniform": {"kind": "heat", "default_ic": "s1"},
    "heat_nonuniform": {"kind": "heat", "default_ic": "s1"},
    "wave_cd": {"kind": "wave_cd", "default_ic": "ns"},
    "wave_bd2": {"kind": "wave_bd2", "default_ic": "ns"},
    "wave_bd4": {"kind": "wave_bd4", "default_ic": "ns"},
}

INITIAL_CONDITIONS = ("s1", "s2", "ns")

# Soglie numeriche
ZERO_PIVOT_FACTOR = 1e-14  # |pivot| < 1e-14 * max|S_k| => simbolo singolare
IMAG_RESIDUE_LIMIT = 1e-10  # parte immaginaria relativa tollerata dopo 𝒫⁻¹
BREAKDOWN_FACTOR = 1e-14  # sottodiagonale di Hessenberg trascurabile

# Finestra per la velocità d'onda: i due impulsi di u0^ns si separano a t=1/8,
# il fronte raggiunge x=1 a t=3/8
WAVE_SPEED_T_MIN = 1.0 / 8.0
WAVE_SPEED_T_MAX = 3.0 / 8.0

# Schema CSV dei risultati (ordine fisso)
RESULT_COLUMNS = [
    "problem", "n", "ell", "p", "strategy", "delta", "seed", "neumann_order",
    "ic", "tol", "iterations", "converged", "true_residual",
    "time_total_s", "time_precond_s", "time_matvec_s",
]

# Conteggi di iterazioni pubblicati, usati come riferimento dagli sweep
# (criterio d'arresto diverso dal nostro: vedi DESIGN.md)
_NEUMANN_DELTAS = (0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)


def _neumann_panel(*counts):
    """(k_i1, k_i2, k_i3) per δ da 0.9 a 0.1 -> {(δ, i): k}"""
    return {
        (delta, order): k
        for delta, row in zip(_NEUMANN_DELTAS, counts)
        for order, k in enumerate(row, start=1)
    }


PUBLISHED_ITERATIONS = {
    "heat_uniform": {"iterations": 2},
    # (n, ell) -> {(delta, i): iterazioni}
    "heat_nonuniform": {
        (320, 768): _neumann_panel(
            (6, 4, 3), (6, 4, 2), (4, 4, 2), (4, 4, 2), (4, 4, 2), (4, 4, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2)),
        (512, 768): _neumann_panel(
            (6, 5, 3), (6, 5, 2), (4, 4, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2)),
        (768, 768): _neumann_panel(
            (6, 4, 3), (6, 4, 2), (6, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2)),
        (512, 1024): _neumann_panel(
            (6, 5, 3), (6, 4, 3), (4, 4, 3), (4, 4, 3), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2)),
        (768, 1024): _neumann_panel(
            (6, 4, 3), (6, 4, 3), (4, 3, 3), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2)),
        (1024, 1024): _neumann_panel(
            (6, 4, 3), (4, 4, 3), (4, 4, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2), (4, 3, 2)),
    },
    # (n, ell) -> iterazioni, dato ns; con s2 sempre 2
    "wave_bd2": {
        (32, 32): 5, (64, 32): 5, (96, 32): 5,
        (32, 64): 6, (64, 64): 6, (96, 64): 6,
        (32, 96): 6, (64, 96): 8, (96, 96): 6,
        **{(n, ell): 8 for ell in (768, 1024, 1440) for n in (320, 512, 768)},
    },
    # 9216 = n·ell: nessuna convergenza prima della dimensione del sistema
    "wave_bd4": {
        (32, 32): 60, (64, 32): 100, (96, 32): 180,
        (32, 64): 80, (64, 64): 120, (96, 64): 200,
        (32, 96): 140, (64, 96): 180, (96, 96): 9216,
    },
    "smooth_s2": {"iterations": 2},
}
