"""
Motore parallelo a pool di worker
Applicazione di (U ⊗ I_n) per righe (DFT densa) o con vector transpose + FFT,
risolutori tridiagonali per frequenza
"""
from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING, Callable, List, Tuple, Union

import numpy as np
import scipy.fft
import scipy.linalg

from src.exceptions import DimensionMismatchError, LayoutMismatchError

if TYPE_CHECKING:
    from src.precond import CirculantPreconditioner

logger = logging.getLogger(__name__)


class Strategy(str, Enum):
    ROW_SPLIT_DFT = "rowsplit"
    TRANSPOSE_FFT = "fft"


class Layout(str, Enum):
    TIME_MAJOR = "time_major"  # ell blocchi di lunghezza n
    SPACE_MAJOR = "space_major"  # n blocchi di lunghezza ell


class Direction(str, Enum):
    FORWARD = "forward"  # U ⊗ I_n
    INVERSE = "inverse"  # U* ⊗ I_n


@dataclass
class ChunkedVector:
    """Vettore monolitico visto come matrice di blocchi (una riga per blocco)"""

    data: np.ndarray
    layout: Layout

    @classmethod
    def from_flat(cls, v: np.ndarray, n: int, ell: int) -> "ChunkedVector":
        if v.shape != (n * ell,):
            raise DimensionMismatchError(f"Vettore di lunghezza {v.shape} invece di {n * ell}")
        return cls(data=v.reshape(ell, n), layout=Layout.TIME_MAJOR)

    @property
    def n(self) -> int:
        return self.data.shape[1] if self.layout is Layout.TIME_MAJOR else self.data.shape[0]

    @property
    def ell(self) -> int:
        return self.data.shape[0] if self.layout is Layout.TIME_MAJOR else self.data.shape[1]

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


class ParallelEngine:
    """
    Pool di p worker con partizione contigua degli indici 0..ell-1.

    Il resto della divisione va ai primi worker. Con p = 1 tutto gira nel thread
    chiamante. Un solo collettivo alla volta (il motore non è rientrante).
    """

    def __init__(self, workers: int = 1, strategy: Union[Strategy, str] = Strategy.ROW_SPLIT_DFT):
        if workers < 1:
            raise ValueError(f"Numero di worker non valido: {workers}")
        self.workers = workers
        self.strategy = Strategy(strategy)
        self._pool = ThreadPoolExecutor(workers) if workers > 1 else None
        self._busy = threading.Lock()
        logger.debug("ParallelEngine: %d worker, strategia %s", workers, self.strategy.value)

    def __enter__(self) -> "ParallelEngine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def partition(self, count: int) -> List[Tuple[int, int]]:
        """Intervalli contigui [lo, hi) che coprono 0..count-1 esattamente una volta"""
        parts = min(self.workers, count)
        if parts == 0:
            return []
        base, extra = divmod(count, parts)
        ranges = []
        lo = 0
        for rank in range(parts):
            hi = lo + base + (1 if rank < extra else 0)
            ranges.append((lo, hi))
            lo = hi
        return ranges

    def run(self, task: Callable[[int, int], None], count: int) -> None:
        """Esegue task(lo, hi) su ogni intervallo e attende tutti (barriera)"""
        if not self._busy.acquire(blocking=False):
            raise RuntimeError("ParallelEngine non è rientrante: collettivo già in corso")
        try:
            ranges = self.partition(count)
            if self._pool is None or len(ranges) <= 1:
                for lo, hi in ranges:
                    task(lo, hi)
                return
            futures = [self._pool.submit(task, lo, hi) for lo, hi in ranges]
            for future in futures:
                future.result()
        finally:
            self._busy.release()


@lru_cache(maxsize=8)
def _dft_parts(ell: int) -> Tuple[np.ndarray, np.ndarray]:
    """Parti reale e immaginaria di U, U_jk = exp(-2πi jk/ell)/sqrt(ell)"""
    u = scipy.linalg.dft(ell, scale="sqrtn")
    re = np.ascontiguousarray(u.real)
    im = np.ascontiguousarray(u.imag)
    re.setflags(write=False)
    im.setflags(write=False)
    return re, im


def dft_apply(engine: ParallelEngine, direction: Direction, z: ChunkedVector) -> ChunkedVector:
    """
    Applica (U ⊗ I_n) o (U* ⊗ I_n) per righe di U.

    Ogni worker calcola i blocchi y_i delle sue righe come combinazione di tutti
    i blocchi z_j, sommati in ordine crescente di j. L'aritmetica complessa è
    scritta con prodotti e somme reali separati, quindi il risultato non dipende
    dalla partizione.
    """
    if z.layout is not Layout.TIME_MAJOR:
        raise LayoutMismatchError("dft_apply richiede layout time_major")
    ell, n = z.data.shape
    u_re, u_im = _dft_parts(ell)
    sign = 1.0 if Direction(direction) is Direction.FORWARD else -1.0  # U simmetrica: U* = conj(U)
    z_re = np.ascontiguousarray(z.data.real)
    z_im = np.ascontiguousarray(z.data.imag) if np.iscomplexobj(z.data) else None
    out = np.empty((ell, n), dtype=complex)

    def rows(lo: int, hi: int) -> None:
        y_re = np.zeros((hi - lo, n))
        y_im = np.zeros((hi - lo, n))
        tmp = np.empty((hi - lo, n))
        c_re_all = u_re[lo:hi]
        c_im_all = sign * u_im[lo:hi]
        for j in range(ell):
            c_re = c_re_all[:, j, None]
            c_im = c_im_all[:, j, None]
            np.multiply(c_re, z_re[j], out=tmp)
            y_re += tmp
            np.multiply(c_im, z_re[j], out=tmp)
            y_im += tmp
            if z_im is not None:
                np.multiply(c_im, z_im[j], out=tmp)
                y_re -= tmp
                np.multiply(c_re, z_im[j], out=tmp)
                y_im += tmp
        out.real[lo:hi] = y_re
        out.imag[lo:hi] = y_im

    engine.run(rows, ell)
    return ChunkedVector(out, Layout.TIME_MAJOR)


def vector_transpose(engine: ParallelEngine, z: ChunkedVector) -> ChunkedVector:
    """Scambia il layout: blocco i, elemento k dell'uscita = blocco k, elemento i dell'ingresso"""
    src = z.data
    out = np.empty((src.shape[1], src.shape[0]), dtype=src.dtype)

    def chunks(lo: int, hi: int) -> None:
        out[lo:hi] = src[:, lo:hi].T

    engine.run(chunks, out.shape[0])
    new_layout = Layout.SPACE_MAJOR if z.layout is Layout.TIME_MAJOR else Layout.TIME_MAJOR
    return ChunkedVector(out, new_layout)


def fft_apply(engine: ParallelEngine, direction: Direction, z: ChunkedVector) -> ChunkedVector:
    """
    Applica U (o U*) a ciascuna colonna temporale di lunghezza ell con la FFT.

    Le colonne sono divise tra i worker. scipy.fft gestisce ell qualsiasi
    (mixed-radix / Bluestein), ad esempio 768, 1024, 1440.
    """
    if z.layout is not Layout.SPACE_MAJOR:
        raise LayoutMismatchError("fft_apply richiede layout space_major")
    transform = scipy.fft.fft if Direction(direction) is Direction.FORWARD else scipy.fft.ifft
    src = z.data
    out = np.empty(src.shape, dtype=complex)

    def columns(lo: int, hi: int) -> None:
        out[lo:hi] = transform(src[lo:hi], axis=1, norm="ortho")

    engine.run(columns, src.shape[0])
    return ChunkedVector(out, Layout.SPACE_MAJOR)


def time_transform(engine: ParallelEngine, direction: Direction, z: ChunkedVector) -> ChunkedVector:
    """(U ⊗ I_n)z o (U* ⊗ I_n)z con la strategia del motore; ingresso e uscita time_major"""
    if engine.strategy is Strategy.ROW_SPLIT_DFT:
        return dft_apply(engine, direction, z)
    x = vector_transpose(engine, z)
    y = fft_apply(engine, direction, x)
    return vector_transpose(engine, y)


def frequency_solve(engine: ParallelEngine, P: "CirculantPreconditioner", zhat: ChunkedVector) -> ChunkedVector:
    """Blocco k sostituito da S_k⁻¹·(blocco k); frequenze divise tra i worker, nessuna riduzione"""
    if zhat.layout is not Layout.TIME_MAJOR:
        raise LayoutMismatchError("frequency_solve richiede layout time_major")
    if zhat.data.shape != (P.ell, P.n):
        raise DimensionMismatchError(f"Blocchi {zhat.data.shape} invece di {(P.ell, P.n)}")
    src = zhat.data
    out = np.empty(src.shape, dtype=complex)

    def frequencies(lo: int, hi: int) -> None:
        out[lo:hi] = P.solve_block(src[lo:hi], lo, hi)

    engine.run(frequencies, P.ell)
    return ChunkedVector(out, Layout.TIME_MAJOR)
