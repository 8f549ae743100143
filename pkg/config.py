"""
Configurazione runtime del solutore all-at-once
Valori letti da variabili d'ambiente o file .env
"""
import os
from pathlib import Path

# Carica variabili d'ambiente da file .env se presente
try:
    from dotenv import load_dotenv
    env_path = Path(__file__).parent / '.env'
    if env_path.exists():
        load_dotenv(env_path)
except ImportError:
    # python-dotenv non installato, usa solo variabili d'ambiente di sistema
    pass

# Parallelismo
# Numero di worker del pool (p). 1 = esecuzione seriale
WORKERS = int(os.getenv("AAO_WORKERS", "1"))
# Strategia per (U ⊗ I_n): "rowsplit" (DFT densa per righe) oppure "fft" (transpose + FFT)
STRATEGY = os.getenv("AAO_STRATEGY", "rowsplit")

# GMRES
TOL = float(os.getenv("AAO_TOL", "1e-5"))  # Tolleranza usata in tutte le tabelle
MAXIT = int(os.getenv("AAO_MAXIT", "500"))  # Limita i casi BD4 e CD non convergenti

# Benchmark
TIMING_REPEATS = int(os.getenv("AAO_TIMING_REPEATS", "3"))  # Mediana di 3 esecuzioni
SNAPSHOT_CHUNKS = int(os.getenv("AAO_SNAPSHOT_CHUNKS", "16"))  # Profili salvati: uno ogni ceil(ell/16)
SEED = int(os.getenv("AAO_SEED", "0"))

# Logging
LOG_LEVEL = os.getenv("AAO_LOG_LEVEL", "WARNING")
