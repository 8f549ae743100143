"""
GMRES completo con precondizionamento sinistro
Operatore e precondizionatore sono callable matrix-free v -> w
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from config import MAXIT, TOL
from src.config import BREAKDOWN_FACTOR
from src.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

LinearMap = Callable[[np.ndarray], np.ndarray]


@dataclass
class SolveReport:
    """Esito di una risoluzione GMRES (residui precondizionati relativi, tempi in ms)"""

    iterations: int
    residual_history: List[float]
    converged: bool
    wall_ms_total: float = 0.0
    wall_ms_precond: float = 0.0
    wall_ms_matvec: float = 0.0
    workers: int = 1
    breakdown: bool = False
    true_residual: float = float("nan")

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    def as_row(self) -> Dict[str, object]:
        """Colonne del CSV dei risultati prodotte dal solutore"""
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "true_residual": self.true_residual,
            "time_total_s": self.wall_ms_total / 1000.0,
            "time_precond_s": self.wall_ms_precond / 1000.0,
            "time_matvec_s": self.wall_ms_matvec / 1000.0,
        }


class _Timed:
    """Callable che accumula il tempo speso nelle chiamate"""

    def __init__(self, fn: LinearMap):
        self.fn = fn
        self.seconds = 0.0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        start = time.perf_counter()
        out = self.fn(v)
        self.seconds += time.perf_counter() - start
        return out


def gmres(
    A: LinearMap,
    Pinv: LinearMap,
    b: np.ndarray,
    tol: float = TOL,
    maxit: int = MAXIT,
    workers: int = 1,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Risolve Pinv·A x = Pinv·b con GMRES completo, x0 = 0.

    Ortogonalizzazione di Gram-Schmidt modificato, rotazioni di Givens sulla
    Hessenberg. Il criterio è ‖Pinv(b - Ax)‖ / ‖Pinv b‖ <= tol.

    Args:
        A: prodotto per l'operatore monolitico
        Pinv: applicazione del precondizionatore
        b: termine noto
        tol: tolleranza relativa (> 0)
        maxit: massimo numero di iterazioni (>= 1)
        workers: numero di worker usati da A e Pinv, solo per il resoconto

    Returns:
        (x, SolveReport). La non convergenza è un esito, non un'eccezione.
    """
    if tol <= 0:
        raise ValueError(f"tol deve essere positiva (tol={tol})")
    if maxit < 1:
        raise ValueError(f"maxit deve essere >= 1 (maxit={maxit})")
    b = np.asarray(b, dtype=float)
    size = b.shape[0]
    start = time.perf_counter()
    matvec = _Timed(A)
    precond = _Timed(Pinv)

    def report(iterations, history, converged, breakdown=False) -> SolveReport:
        return SolveReport(
            iterations=iterations,
            residual_history=history,
            converged=converged,
            wall_ms_total=(time.perf_counter() - start) * 1000.0,
            wall_ms_precond=precond.seconds * 1000.0,
            wall_ms_matvec=matvec.seconds * 1000.0,
            workers=workers,
            breakdown=breakdown,
        )

    if not np.any(b):
        return np.zeros(size), report(0, [0.0], True)

    r0 = precond(b)
    if r0.shape != b.shape:
        raise DimensionMismatchError(f"Il precondizionatore restituisce {r0.shape} invece di {b.shape}")
    beta = float(np.linalg.norm(r0))
    if beta == 0.0:
        return np.zeros(size), report(0, [0.0], True)

    max_dim = min(maxit, size)
    H = np.zeros((max_dim + 1, max_dim))
    g = np.zeros(max_dim + 1)
    g[0] = beta
    cs = np.zeros(max_dim)
    sn = np.zeros(max_dim)
    basis = [r0 / beta]
    history = [1.0]
    converged = False
    breakdown = False
    steps = 0

    for j in range(max_dim):
        w = precond(matvec(basis[j]))
        if w.shape != b.shape:
            raise DimensionMismatchError(f"L'operatore restituisce {w.shape} invece di {b.shape}")
        for i in range(j + 1):
            H[i, j] = np.dot(w, basis[i])
            w = w - H[i, j] * basis[i]
        h_next = float(np.linalg.norm(w))
        H[j + 1, j] = h_next

        for i in range(j):
            upper = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = upper
        radius = float(np.hypot(H[j, j], H[j + 1, j]))
        if radius == 0.0:
            breakdown = True
            break
        cs[j] = H[j, j] / radius
        sn[j] = H[j + 1, j] / radius
        H[j, j] = radius
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]

        steps = j + 1
        residual = abs(g[j + 1]) / beta
        history.append(float(residual))
        logger.debug("GMRES iterazione %d: residuo precondizionato %.3e", steps, residual)

        if residual <= tol:
            converged = True
            break
        if h_next < BREAKDOWN_FACTOR * beta:
            breakdown = True
            break
        basis.append(w / h_next)

    x = np.zeros(size)
    if steps > 0:
        y = solve_triangular(H[:steps, :steps], g[:steps])
        for i in range(steps):
            x += y[i] * basis[i]

    if not converged:
        logger.warning(
            "GMRES non convergente dopo %d iterazioni (residuo %.3e, tol %.1e)",
            steps, history[-1], tol,
        )
    return x, report(steps, history, converged, breakdown)


def residual_true(A: LinearMap, x: np.ndarray, b: np.ndarray) -> float:
    """‖b - Ax‖₂ / ‖b‖₂ senza precondizionatore (‖b - Ax‖₂ se b = 0)"""
    r = np.linalg.norm(b - A(x))
    nb = np.linalg.norm(b)
    return float(r / nb) if nb > 0 else float(r)
