"""
Elementi finiti P1 su Ω=[0,1] con condizioni di Dirichlet omogenee
Matrici di massa e rigidezza tridiagonali, proiezione del dato iniziale
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, solve_banded

from src.exceptions import DimensionMismatchError


@dataclass(frozen=True)
class SpatialGrid:
    """Griglia uniforme: n nodi interni, h = 1/(n+1)"""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"La griglia richiede almeno un nodo interno (n={self.n})")

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        """Coordinate dei nodi interni x_i = (i+1)h"""
        return np.arange(1, self.n + 1) * self.h


@dataclass(frozen=True)
class TriDiagMatrix:
    """
    Matrice tridiagonale reale n×n memorizzata per diagonali.

    Contiene M, K e le loro combinazioni lineari (blocchi A_j degli operatori).
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        for name in ("sub", "diag", "sup"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
        n = len(self.diag)
        if n < 1:
            raise ValueError("Matrice tridiagonale vuota")
        if len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise DimensionMismatchError(
                f"Diagonali incoerenti: sub={len(self.sub)}, diag={n}, sup={len(self.sup)}"
            )
        for arr in (self.sub, self.diag, self.sup):
            arr.setflags(write=False)

    @classmethod
    def from_constants(cls, n: int, sub: float, diag: float, sup: float) -> "TriDiagMatrix":
        return cls(
            sub=np.full(n - 1, float(sub)),
            diag=np.full(n, float(diag)),
            sup=np.full(n - 1, float(sup)),
        )

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.sub, self.sup))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Prodotto T·x; x può essere (n,) oppure (chunks, n)"""
        return tridiag_apply(self.sub, self.diag, self.sup, x)

    def combine(self, alpha: float, other: "TriDiagMatrix", beta: float = 1.0) -> "TriDiagMatrix":
        """Restituisce beta·self + alpha·other"""
        if other.n != self.n:
            raise DimensionMismatchError(f"n diversi: {self.n} e {other.n}")
        return TriDiagMatrix(
            sub=beta * self.sub + alpha * other.sub,
            diag=beta * self.diag + alpha * other.diag,
            sup=beta * self.sup + alpha * other.sup,
        )

    def scaled(self, alpha: float) -> "TriDiagMatrix":
        return TriDiagMatrix(sub=alpha * self.sub, diag=alpha * self.diag, sup=alpha * self.sup)

    def to_dense(self) -> np.ndarray:
        """Solo per dimensioni piccole (oracoli nei test)"""
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def norm2(self) -> float:
        """Norma 2 di una tridiagonale simmetrica: massimo |autovalore|"""
        if not self.is_symmetric:
            raise ValueError("norm2 richiede una matrice simmetrica")
        if self.n == 1:
            return float(abs(self.diag[0]))
        eigs = eigvalsh_tridiagonal(self.diag, self.sub)
        return float(np.max(np.abs(eigs)))


def tridiag_apply(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Prodotto tridiagonale vettorizzato sull'ultimo asse.

    diag può essere (n,) oppure (chunks, n) per blocchi diagonali diversi per passo.
    Solo moltiplicazioni e somme elemento per elemento: il risultato di ogni riga
    non dipende da come le righe sono suddivise tra i worker.
    """
    out = np.multiply(diag, x)
    if x.shape[-1] > 1:
        out[..., 1:] += np.multiply(sub, x[..., :-1])
        out[..., :-1] += np.multiply(sup, x[..., 1:])
    return out


def assemble_mass(grid: SpatialGrid) -> TriDiagMatrix:
    """
    Matrice di massa P1: diag 4h/6, off-diagonali h/6.

    I nodi di bordo sono eliminati (Dirichlet).
    """
    h = grid.h
    return TriDiagMatrix.from_constants(grid.n, h / 6.0, 4.0 * h / 6.0, h / 6.0)


def assemble_stiffness(grid: SpatialGrid) -> TriDiagMatrix:
    """Matrice di rigidezza P1: diag 2/h, off-diagonali -1/h"""
    h = grid.h
    return TriDiagMatrix.from_constants(grid.n, -1.0 / h, 2.0 / h, -1.0 / h)


def max_generalized_eigenvalue(grid: SpatialGrid) -> float:
    """
    Autovalore massimo di M⁻¹K per P1 uniforme.

    λ_j = (6/h²)(1 - cos θ_j)/(2 + cos θ_j), θ_j = jπ/(n+1), massimo per j = n.
    """
    theta = grid.n * np.pi / (grid.n + 1)
    return float(6.0 / grid.h ** 2 * (1.0 - np.cos(theta)) / (2.0 + np.cos(theta)))


def leapfrog_stability_ratio(grid: SpatialGrid, tau: float) -> float:
    """τ²·λ_max(M⁻¹K)/4: le differenze centrate sono stabili solo se < 1"""
    return tau ** 2 * max_generalized_eigenvalue(grid) / 4.0


def project_initial(
    f: Callable[[np.ndarray], np.ndarray],
    grid: SpatialGrid,
    method: str = "interpolate",
) -> np.ndarray:
    """
    Proietta il dato iniziale sullo spazio P1.

    Args:
        f: funzione vettorizzata su [0,1]
        grid: griglia spaziale
        method: "interpolate" (interpolante nodale, default) oppure "l2"

    Returns:
        vettore u0 di lunghezza n
    """
    if method == "interpolate":
        return np.asarray(f(grid.nodes), dtype=float).copy()
    if method == "l2":
        return _l2_projection(f, grid)
    raise ValueError(f"Metodo di proiezione sconosciuto: {method}")


def _l2_projection(f: Callable[[np.ndarray], np.ndarray], grid: SpatialGrid, order: int = 4) -> np.ndarray:
    """Proiezione L2: M u0 = (f, φ_i), quadratura di Gauss su ogni elemento"""
    n, h = grid.n, grid.h
    xi, wi = np.polynomial.legendre.leggauss(order)
    # n+1 elementi [k h, (k+1) h], k = 0..n
    left = np.arange(n + 1)[:, None] * h
    x = left + 0.5 * h * (xi[None, :] + 1.0)
    fx = np.asarray(f(x), dtype=float)
    # funzioni di forma sull'elemento: discendente (nodo sinistro) e ascendente (destro)
    phi_up = 0.5 * (xi + 1.0)
    phi_down = 1.0 - phi_up
    w = 0.5 * h * wi
    load_down = (fx * phi_down * w).sum(axis=1)  # verso il nodo sinistro dell'elemento
    load_up = (fx * phi_up * w).sum(axis=1)  # verso il nodo destro
    rhs = load_up[:-1] + load_down[1:]

    mass = assemble_mass(grid)
    if n == 1:
        return rhs / mass.diag
    banded = np.zeros((3, n))
    banded[0, 1:] = mass.sup
    banded[1, :] = mass.diag
    banded[2, :-1] = mass.sub
    return solve_banded((1, 1), banded, rhs)


def initial_condition(name: str) -> Callable[[np.ndarray], np.ndarray]:
    """
    Dati iniziali degli esperimenti.

    s1: x(1-x) (calore); s2: sin(2πx); ns: impulso cos² non liscio su (3/8, 5/8)
    """
    if name == "s1":
        return lambda x: x * (1.0 - x)
    if name == "s2":
        return lambda x: np.sin(2.0 * np.pi * x)
    if name == "ns":
        def pulse(x):
            x = np.asarray(x, dtype=float)
            inside = (x > 3.0 / 8.0) & (x < 5.0 / 8.0)
            return np.where(inside, np.cos(4.0 * np.pi * (x - 0.5)) ** 2, 0.0)
        return pulse
    raise ValueError(f"Condizione iniziale sconosciuta: {name}")
