"""
Precondizionatori circolanti a blocchi 𝒫, ℛ_CD, ℛ_BD2, ℛ_BD4
Diagonalizzazione di Fourier nel tempo + algoritmo di Thomas per frequenza,
serie di Neumann troncata 𝒬ᵢ⁻¹ per griglie temporali non uniformi
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from src.config import IMAG_RESIDUE_LIMIT, ZERO_PIVOT_FACTOR
from src.exceptions import DimensionMismatchError, ImaginaryResidueError, SingularSymbolError
from src.fem1d import TriDiagMatrix
from src.operators import BlockStencil, BlockToeplitzOperator, build_circulant_operator
from src.parallel import ChunkedVector, Direction, ParallelEngine, frequency_solve, time_transform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThomasFactors:
    """
    Fattori di Thomas di tutti i simboli, trasposti: shape (n, ell) o (n-1, ell).

    inv: 1/pivot; cp: c'_i = sup_i/pivot_i; sub: sottodiagonale del simbolo.
    Parte reale e immaginaria separate, così ogni frequenza usa solo operazioni reali.
    """

    inv_re: np.ndarray
    inv_im: np.ndarray
    cp_re: np.ndarray
    cp_im: np.ndarray
    sub_re: np.ndarray
    sub_im: np.ndarray


@dataclass(frozen=True)
class CirculantPreconditioner:
    """
    Circolante a blocchi associato allo stencil (bande con chiusura periodica).

    symbol_sub/diag/sup: diagonali dei simboli S_k, una riga per frequenza k.
    """

    n: int
    ell: int
    stencil: BlockStencil
    symbol_sub: np.ndarray
    symbol_diag: np.ndarray
    symbol_sup: np.ndarray
    factors: ThomasFactors
    _operator: Optional[BlockToeplitzOperator] = field(default=None, init=False, repr=False, compare=False)

    def symbol(self, k: int) -> np.ndarray:
        """S_k denso (solo per n piccoli)"""
        s = np.diag(self.symbol_diag[k])
        if self.n > 1:
            s = s + np.diag(self.symbol_sub[k], -1) + np.diag(self.symbol_sup[k], 1)
        return s

    @property
    def operator(self) -> BlockToeplitzOperator:
        if self._operator is None:
            object.__setattr__(self, "_operator", build_circulant_operator(self.stencil, self.ell))
        return self._operator

    def matvec(self, v: np.ndarray, engine: Optional[ParallelEngine] = None) -> np.ndarray:
        """Prodotto per il circolante stesso (non per l'inversa)"""
        return self.operator.apply(v, engine)

    def solve_block(self, block: np.ndarray, lo: int, hi: int) -> np.ndarray:
        """
        Risolve S_k y_k = z_k per k in [lo, hi); block ha shape (hi-lo, n).

        Thomas vettorizzato sulle frequenze dell'intervallo, aritmetica complessa
        scritta in prodotti reali: stesso risultato qualunque sia la partizione.
        """
        f = self.factors
        n = self.n
        d_re = np.array(block.real.T, dtype=float)
        d_im = np.array(block.imag.T, dtype=float)
        inv_re, inv_im = f.inv_re[:, lo:hi], f.inv_im[:, lo:hi]

        # eliminazione in avanti: d'_i = (d_i - a_{i-1} d'_{i-1}) / pivot_i
        r_re, r_im = _cmul(d_re[0], d_im[0], inv_re[0], inv_im[0])
        d_re[0], d_im[0] = r_re, r_im
        for i in range(1, n):
            a_re, a_im = f.sub_re[i - 1, lo:hi], f.sub_im[i - 1, lo:hi]
            p_re, p_im = _cmul(a_re, a_im, d_re[i - 1], d_im[i - 1])
            t_re = d_re[i] - p_re
            t_im = d_im[i] - p_im
            d_re[i], d_im[i] = _cmul(t_re, t_im, inv_re[i], inv_im[i])

        # sostituzione all'indietro: x_i = d'_i - c'_i x_{i+1}
        for i in range(n - 2, -1, -1):
            c_re, c_im = f.cp_re[i, lo:hi], f.cp_im[i, lo:hi]
            p_re, p_im = _cmul(c_re, c_im, d_re[i + 1], d_im[i + 1])
            d_re[i] = d_re[i] - p_re
            d_im[i] = d_im[i] - p_im

        out = np.empty((hi - lo, n), dtype=complex)
        out.real = d_re.T
        out.imag = d_im.T
        return out


def _cmul(a_re, a_im, b_re, b_im) -> Tuple[np.ndarray, np.ndarray]:
    return a_re * b_re - a_im * b_im, a_re * b_im + a_im * b_re


def _symbols(stencil: BlockStencil, ell: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """S_k = Σ_j ω_k^(j mod ell) A_j per k = 0..ell//2, il resto per coniugio"""
    n = stencil.n
    half = ell // 2 + 1
    sub = np.zeros((ell, n - 1), dtype=complex)
    diag = np.zeros((ell, n), dtype=complex)
    sup = np.zeros((ell, n - 1), dtype=complex)
    k = np.arange(half)
    for offset, block in stencil.blocks:
        # (k·j) mod ell tiene l'argomento in [0, 2π)
        m = (k * (offset % ell)) % ell
        phase = np.exp(2j * np.pi * m / ell)
        # ω = ±1 esatti: S_0 e S_{ell/2} reali
        phase = np.where(m == 0, 1.0, np.where(2 * m == ell, -1.0, phase))[:, None]
        sub[:half] += phase * block.sub
        diag[:half] += phase * block.diag
        sup[:half] += phase * block.sup
    mirror = np.arange(half, ell)
    sub[mirror] = np.conj(sub[ell - mirror])
    diag[mirror] = np.conj(diag[ell - mirror])
    sup[mirror] = np.conj(sup[ell - mirror])
    return sub, diag, sup


def _factorize(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray) -> ThomasFactors:
    """Pivot e c' dell'algoritmo di Thomas per tutte le frequenze (senza pivoting)"""
    ell, n = diag.shape
    half = ell // 2 + 1
    pivots = np.zeros((ell, n), dtype=complex)
    cp = np.zeros((ell, max(n - 1, 0)), dtype=complex)
    scale = np.max(np.abs(np.concatenate([sub, diag, sup], axis=1)), axis=1)

    for k in range(half):
        pivot = diag[k, 0]
        for i in range(n):
            if i > 0:
                pivot = diag[k, i] - sub[k, i - 1] * cp[k, i - 1]
            if abs(pivot) < ZERO_PIVOT_FACTOR * scale[k] or pivot == 0:
                raise SingularSymbolError(k, float(abs(pivot)), i)
            pivots[k, i] = pivot
            if i < n - 1:
                cp[k, i] = sup[k, i] / pivot
    mirror = np.arange(half, ell)
    pivots[mirror] = np.conj(pivots[ell - mirror])
    cp[mirror] = np.conj(cp[ell - mirror])

    inv = 1.0 / pivots
    arrays = [np.ascontiguousarray(a.T) for a in (inv.real, inv.imag, cp.real, cp.imag, sub.real, sub.imag)]
    for a in arrays:
        a.setflags(write=False)
    return ThomasFactors(*arrays)


def build_circulant(stencil: BlockStencil, ell: int) -> CirculantPreconditioner:
    """
    Costruisce il circolante dello stencil (senza correzioni) e fattorizza i simboli.

    Le bande con offset >= ell si avvolgono modulo ell; con ell=1 il simbolo è
    la somma di tutti i blocchi (per il calore 𝒫 = τK).

    Raises:
        SingularSymbolError: pivot nullo al simbolo S_k
    """
    if ell < 1:
        raise ValueError(f"ell deve essere positivo (ell={ell})")
    base = stencil.toeplitz_part()
    sub, diag, sup = _symbols(base, ell)
    factors = _factorize(sub, diag, sup)
    for arr in (sub, diag, sup):
        arr.setflags(write=False)
    logger.debug("Circolante costruito: n=%d ell=%d, %d bande", base.n, ell, len(base.blocks))
    return CirculantPreconditioner(
        n=base.n, ell=ell, stencil=base,
        symbol_sub=sub, symbol_diag=diag, symbol_sup=sup, factors=factors,
    )


def apply_inverse(
    P: CirculantPreconditioner,
    z: np.ndarray,
    engine: Optional[ParallelEngine] = None,
) -> np.ndarray:
    """
    𝒫⁻¹z = (U ⊗ I)(blocchi S_k⁻¹)(U* ⊗ I)z.

    Returns:
        vettore reale di lunghezza n·ell

    Raises:
        ImaginaryResidueError: parte immaginaria oltre 1e-10 relativo
    """
    if engine is None:
        engine = ParallelEngine(1)
    zc = ChunkedVector.from_flat(np.asarray(z, dtype=float), P.n, P.ell)
    zhat = time_transform(engine, Direction.INVERSE, zc)
    yhat = frequency_solve(engine, P, zhat)
    y = time_transform(engine, Direction.FORWARD, yhat).flat()

    real_max = float(np.max(np.abs(y.real))) if y.size else 0.0
    imag_max = float(np.max(np.abs(y.imag))) if y.size else 0.0
    if imag_max > IMAG_RESIDUE_LIMIT * real_max:
        raise ImaginaryResidueError(
            f"Parte immaginaria {imag_max:.3e} oltre soglia (parte reale {real_max:.3e})"
        )
    return np.ascontiguousarray(y.real)


def sigma_kron_apply(sigma: np.ndarray, K: TriDiagMatrix, v: np.ndarray) -> np.ndarray:
    """(σ ⊗ K)v: blocco k = σ_k · K v_k"""
    sigma = np.asarray(sigma, dtype=float)
    if v.shape != (len(sigma) * K.n,):
        raise DimensionMismatchError(
            f"Vettore di lunghezza {v.shape} incompatibile con sigma ({len(sigma)}) e K ({K.n})"
        )
    chunks = v.reshape(len(sigma), K.n)
    return (sigma[:, None] * K.matvec(chunks)).reshape(-1)


def neumann_bound(sigma: np.ndarray, K: TriDiagMatrix) -> float:
    """max|σ_i|·‖K‖₂: se < 1 la serie di Neumann converge"""
    return float(np.max(np.abs(sigma))) * K.norm2()


@dataclass(frozen=True)
class NeumannPreconditioner:
    """
    𝒬ᵢ⁻¹ = Σ_{m<i} (-𝒫⁻¹(σ⊗K))^m 𝒫⁻¹, con 𝒬 = 𝒫 + σ⊗K.

    Avvisa (senza errore) quando max|σ|·‖K‖₂ >= 1.
    """

    base: CirculantPreconditioner
    K: TriDiagMatrix
    sigma: np.ndarray
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"L'ordine della serie deve essere >= 1 (order={self.order})")
        sigma = np.array(self.sigma, dtype=float)
        if len(sigma) != self.base.ell:
            raise DimensionMismatchError(f"sigma ha {len(sigma)} valori invece di {self.base.ell}")
        if self.K.n != self.base.n:
            raise DimensionMismatchError(f"K con n={self.K.n}, precondizionatore con n={self.base.n}")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        bound = neumann_bound(sigma, self.K)
        if bound >= 1.0:
            logger.warning("Ipotesi di Neumann violata: max|σ|·‖K‖₂ = %.3e >= 1", bound)
        else:
            logger.debug("Neumann ordine %d, max|σ|·‖K‖₂ = %.3e", self.order, bound)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def ell(self) -> int:
        return self.base.ell

    def matvec(self, v: np.ndarray, engine: Optional[ParallelEngine] = None) -> np.ndarray:
        """Prodotto per 𝒬 = 𝒫 + σ⊗K"""
        return self.base.matvec(v, engine) + sigma_kron_apply(self.sigma, self.K, v)


def apply_neumann(
    Q: NeumannPreconditioner,
    z: np.ndarray,
    engine: Optional[ParallelEngine] = None,
) -> np.ndarray:
    """t_1 = 𝒫⁻¹z, t_{m+1} = -𝒫⁻¹((σ⊗K)t_m); restituisce t_1 + ... + t_i"""
    term = apply_inverse(Q.base, z, engine)
    total = term.copy()
    for _ in range(Q.order - 1):
        term = -apply_inverse(Q.base, sigma_kron_apply(Q.sigma, Q.K, term), engine)
        total += term
    return total
