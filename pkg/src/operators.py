"""
Operatori monolitici (all-at-once) matrix-free
Calore (passi uniformi e non uniformi) e onda (CD, BD2, BD4), con i termini noti
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from src.exceptions import DimensionMismatchError
from src.fem1d import TriDiagMatrix, tridiag_apply
from src.parallel import ParallelEngine
from src.timegrid import TimeGrid

logger = logging.getLogger(__name__)

RHS_KINDS = ("heat", "wave_cd", "wave_bd2", "wave_bd4")


@dataclass(frozen=True)
class BlockStencil:
    """
    Bande di blocchi (offset, blocco) e correzioni (riga, colonna, blocco).

    Offset positivo = banda sotto la diagonale; negativo = sopra (serve solo a CD).
    Una riga che compare nelle correzioni è sostituita interamente dai suoi blocchi
    di correzione (righe di avvio di BD4).
    """

    blocks: Tuple[Tuple[int, TriDiagMatrix], ...]
    corrections: Tuple[Tuple[int, int, TriDiagMatrix], ...] = ()

    def __post_init__(self):
        offsets = [offset for offset, _ in self.blocks]
        if len(set(offsets)) != len(offsets):
            raise ValueError(f"Offset duplicati nello stencil: {offsets}")
        if 0 not in offsets:
            raise ValueError("Lo stencil deve contenere il blocco diagonale (offset 0)")
        sizes = {block.n for _, block in self.blocks} | {block.n for _, _, block in self.corrections}
        if len(sizes) != 1:
            raise DimensionMismatchError(f"Blocchi con n diversi: {sorted(sizes)}")

    @property
    def n(self) -> int:
        return self.blocks[0][1].n

    def band(self, offset: int) -> TriDiagMatrix:
        for off, block in self.blocks:
            if off == offset:
                return block
        raise KeyError(offset)

    def toeplitz_part(self) -> "BlockStencil":
        """Solo le bande, senza correzioni: lo stencil del circolante associato"""
        return BlockStencil(blocks=self.blocks)

    def correction_rows(self) -> Dict[int, List[Tuple[int, TriDiagMatrix]]]:
        rows: Dict[int, List[Tuple[int, TriDiagMatrix]]] = {}
        for row, col, block in self.corrections:
            rows.setdefault(row, []).append((col, block))
        return rows


@dataclass(frozen=True)
class BlockToeplitzOperator:
    """
    Operatore a blocchi su vettori di lunghezza n·ell (blocchi time-major).

    per_step_diag sostituisce il blocco diagonale passo per passo (sistema ℬ).
    periodic=True chiude le bande in modo circolante (𝒫, ℛ_*, 𝒬).
    """

    n: int
    ell: int
    stencil: BlockStencil
    per_step_diag: Optional[Tuple[TriDiagMatrix, ...]] = None
    periodic: bool = False
    kind: str = ""
    _diag_stack: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if self.stencil.n != self.n:
            raise DimensionMismatchError(f"Stencil con n={self.stencil.n}, operatore con n={self.n}")
        if self.ell < 1:
            raise ValueError(f"ell deve essere positivo (ell={self.ell})")
        for row, col, _ in self.stencil.corrections:
            if not (0 <= row < self.ell and 0 <= col < self.ell):
                raise ValueError(f"Correzione fuori dai limiti: ({row}, {col}) con ell={self.ell}")
        if self.per_step_diag is not None:
            if len(self.per_step_diag) != self.ell:
                raise DimensionMismatchError(
                    f"per_step_diag ha {len(self.per_step_diag)} blocchi invece di {self.ell}"
                )
            stack = (
                np.stack([b.sub for b in self.per_step_diag]),
                np.stack([b.diag for b in self.per_step_diag]),
                np.stack([b.sup for b in self.per_step_diag]),
            )
            object.__setattr__(self, "_diag_stack", stack)

    @property
    def shape(self) -> Tuple[int, int]:
        size = self.n * self.ell
        return size, size

    @property
    def is_lower_triangular(self) -> bool:
        return (not self.periodic
                and all(offset >= 0 for offset, _ in self.stencil.blocks)
                and all(col <= row for row, col, _ in self.stencil.corrections))

    def __call__(self, v: np.ndarray, engine: Optional[ParallelEngine] = None) -> np.ndarray:
        return self.apply(v, engine)

    def apply(self, v: np.ndarray, engine: Optional[ParallelEngine] = None) -> np.ndarray:
        """
        Prodotto matrix-free, costo O(n·ell).

        Con un motore parallelo ogni worker calcola un intervallo di righe a blocchi;
        il risultato coincide bit per bit con quello seriale.
        """
        if v.shape != (self.n * self.ell,):
            raise DimensionMismatchError(f"Vettore di lunghezza {v.shape} invece di {self.n * self.ell}")
        X = v.reshape(self.ell, self.n)
        Y = np.empty((self.ell, self.n))

        def rows(lo: int, hi: int) -> None:
            Y[lo:hi] = self._apply_rows(X, lo, hi)

        if engine is None:
            rows(0, self.ell)
        else:
            engine.run(rows, self.ell)
        return Y.reshape(-1)

    def _apply_rows(self, X: np.ndarray, lo: int, hi: int) -> np.ndarray:
        ell = self.ell
        out = np.zeros((hi - lo, self.n))
        for offset, block in self.stencil.blocks:
            if offset == 0 and self._diag_stack is not None:
                sub, diag, sup = self._diag_stack
                out += tridiag_apply(sub[lo:hi], diag[lo:hi], sup[lo:hi], X[lo:hi])
            elif self.periodic:
                src = (np.arange(lo, hi) - offset) % ell
                out += block.matvec(X[src])
            else:
                r_lo = max(lo, offset)
                r_hi = min(hi, ell + offset)
                if r_lo < r_hi:
                    out[r_lo - lo:r_hi - lo] += block.matvec(X[r_lo - offset:r_hi - offset])
        if not self.periodic:
            for row, entries in self.stencil.correction_rows().items():
                if lo <= row < hi:
                    acc = np.zeros(self.n)
                    for col, block in entries:
                        acc += block.matvec(X[col])
                    out[row - lo] = acc
        return out

    def diagonal_block(self, k: int) -> TriDiagMatrix:
        """Blocco diagonale della riga k (correzioni e passi non uniformi compresi)"""
        for col, block in self.stencil.correction_rows().get(k, []):
            if col == k:
                return block
        if self.per_step_diag is not None:
            return self.per_step_diag[k]
        return self.stencil.band(0)


def _check_pair(M: TriDiagMatrix, K: TriDiagMatrix) -> None:
    if M.n != K.n:
        raise DimensionMismatchError(f"M e K con dimensioni diverse: {M.n} e {K.n}")


def build_heat(M: TriDiagMatrix, K: TriDiagMatrix, grid: TimeGrid) -> BlockToeplitzOperator:
    """
    Sistema del calore: A0^i = M + τ_i K, A1 = -M.

    Griglia uniforme: blocchi diagonali tutti uguali (𝒜). Altrimenti per_step_diag
    contiene un blocco per passo (ℬ) e lo stencil conserva A0 = M + τK per il circolante.
    """
    _check_pair(M, K)
    tau = grid.tau_base
    stencil = BlockStencil(blocks=((0, M.combine(tau, K)), (1, M.scaled(-1.0))))
    per_step = None
    if not grid.is_uniform:
        per_step = tuple(M.combine(float(tau_i), K) for tau_i in grid.steps)
    return BlockToeplitzOperator(n=M.n, ell=grid.ell, stencil=stencil, per_step_diag=per_step, kind="heat")


def build_wave_cd(M: TriDiagMatrix, K: TriDiagMatrix, tau: float, ell: int) -> BlockToeplitzOperator:
    """Differenze centrate: A0 = τ²K - 2M, M su entrambe le sottodiagonali"""
    _check_pair(M, K)
    if ell < 2:
        raise ValueError(f"CD richiede ell >= 2 (ell={ell})")
    a0 = K.combine(-2.0, M, beta=tau ** 2)
    stencil = BlockStencil(blocks=((0, a0), (1, M), (-1, M)))
    return BlockToeplitzOperator(n=M.n, ell=ell, stencil=stencil, kind="wave_cd")


def build_wave_bd2(M: TriDiagMatrix, K: TriDiagMatrix, tau: float, ell: int) -> BlockToeplitzOperator:
    """BD2: A0 = M + τ²K, A1 = -2M, A2 = M (triangolare inferiore a blocchi)"""
    _check_pair(M, K)
    if ell < 3:
        raise ValueError(f"BD2 richiede ell >= 3 (ell={ell})")
    stencil = BlockStencil(blocks=(
        (0, M.combine(tau ** 2, K)),
        (1, M.scaled(-2.0)),
        (2, M),
    ))
    return BlockToeplitzOperator(n=M.n, ell=ell, stencil=stencil, kind="wave_bd2")


def build_wave_bd4(M: TriDiagMatrix, K: TriDiagMatrix, tau: float, ell: int) -> BlockToeplitzOperator:
    """
    BD4: A0 = 2M + τ²K, A1 = -5M, A2 = 4M, A3 = -M.

    Le prime due righe vengono da BD2: riga 1 = [B], riga 2 = [C, B],
    con B = M + τ²K e C = -2M.
    """
    _check_pair(M, K)
    if ell < 4:
        raise ValueError(f"BD4 richiede ell >= 4 (ell={ell})")
    b = M.combine(tau ** 2, K)
    c = M.scaled(-2.0)
    stencil = BlockStencil(
        blocks=(
            (0, M.combine(tau ** 2, K, beta=2.0)),
            (1, M.scaled(-5.0)),
            (2, M.scaled(4.0)),
            (3, M.scaled(-1.0)),
        ),
        corrections=((0, 0, b), (1, 0, c), (1, 1, b)),
    )
    return BlockToeplitzOperator(n=M.n, ell=ell, stencil=stencil, kind="wave_bd4")


def build_rhs(kind: str, M: TriDiagMatrix, K: TriDiagMatrix, tau: float, u0: np.ndarray, ell: int) -> np.ndarray:
    """
    Termine noto monolitico: primi blocchi dal dato iniziale, il resto nullo.

    heat: [M u0]; wave_cd: [-M u0]; wave_bd2: [(M+τ²K)u0, -M u0];
    wave_bd4: [B u0, -M u0, M u0]
    """
    _check_pair(M, K)
    if u0.shape != (M.n,):
        raise DimensionMismatchError(f"u0 di lunghezza {u0.shape} invece di {M.n}")
    mu0 = M.matvec(u0)
    if kind == "heat":
        head = [mu0]
    elif kind == "wave_cd":
        head = [-mu0]
    elif kind in ("wave_bd2", "wave_bd4"):
        head = [M.combine(tau ** 2, K).matvec(u0), -mu0]
        if kind == "wave_bd4":
            head.append(mu0)
    else:
        raise ValueError(f"Tipo di termine noto sconosciuto: {kind} (attesi {RHS_KINDS})")
    if len(head) > ell:
        raise ValueError(f"ell={ell} troppo piccolo per il termine noto {kind}")
    b = np.zeros((ell, M.n))
    b[:len(head)] = head
    return b.reshape(-1)


def build_circulant_operator(
    stencil: BlockStencil,
    ell: int,
    per_step_diag: Optional[Tuple[TriDiagMatrix, ...]] = None,
) -> BlockToeplitzOperator:
    """Prodotto per il circolante a blocchi dello stencil (con per_step_diag: 𝒬)"""
    return BlockToeplitzOperator(
        n=stencil.n,
        ell=ell,
        stencil=stencil.toeplitz_part(),
        per_step_diag=per_step_diag,
        periodic=True,
        kind="circulant",
    )


def forward_substitution(op: BlockToeplitzOperator, b: np.ndarray) -> np.ndarray:
    """
    Sostituzione in avanti a blocchi per operatori triangolari inferiori.

    Equivale al time-stepping sequenziale: per il calore riproduce i passi di Eulero implicito.
    """
    if not op.is_lower_triangular:
        raise ValueError(f"Operatore {op.kind} non triangolare inferiore a blocchi")
    if b.shape != (op.n * op.ell,):
        raise DimensionMismatchError(f"Termine noto di lunghezza {b.shape} invece di {op.n * op.ell}")
    B = b.reshape(op.ell, op.n)
    X = np.zeros((op.ell, op.n))
    corrections = op.stencil.correction_rows()
    for k in range(op.ell):
        rhs = B[k].copy()
        if k in corrections:
            couplings = [(col, block) for col, block in corrections[k] if col != k]
        else:
            couplings = [(k - off, block) for off, block in op.stencil.blocks if off > 0 and k - off >= 0]
        for col, block in couplings:
            rhs -= block.matvec(X[col])
        X[k] = _tridiag_solve(op.diagonal_block(k), rhs)
    return X.reshape(-1)


def _tridiag_solve(T: TriDiagMatrix, rhs: np.ndarray) -> np.ndarray:
    if T.n == 1:
        return rhs / T.diag
    banded = np.zeros((3, T.n))
    banded[0, 1:] = T.sup
    banded[1, :] = T.diag
    banded[2, :-1] = T.sub
    return solve_banded((1, 1), banded, rhs)
