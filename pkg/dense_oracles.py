"""
Oracoli densi per i test (solo dimensioni piccole)
Assemblaggio di Kronecker esplicito, circolanti densi, time-stepping sequenziale
"""
import numpy as np
import scipy.linalg

from src.fem1d import TriDiagMatrix
from src.operators import BlockStencil, BlockToeplitzOperator
from src.timegrid import TimeGrid


def shift_matrix(ell: int, offset: int) -> np.ndarray:
    """Matrice con identità sulla diagonale -offset (offset > 0: sotto la diagonale)"""
    return np.eye(ell, k=-offset)


def cyclic_shift(ell: int, offset: int) -> np.ndarray:
    """Σ^offset con (Σx)_i = x_{i-1 mod ell}"""
    return np.roll(np.eye(ell), offset % ell, axis=0)


def dense_operator(op: BlockToeplitzOperator) -> np.ndarray:
    n, ell = op.n, op.ell
    dense = np.zeros((n * ell, n * ell))
    for offset, block in op.stencil.blocks:
        if offset == 0 and op.per_step_diag is not None:
            continue
        shift = cyclic_shift(ell, offset) if op.periodic else shift_matrix(ell, offset)
        dense += np.kron(shift, block.to_dense())
    if op.per_step_diag is not None:
        dense += scipy.linalg.block_diag(*[b.to_dense() for b in op.per_step_diag])
    if not op.periodic:
        rows = {row for row, _, _ in op.stencil.corrections}
        for row in rows:
            dense[row * n:(row + 1) * n, :] = 0.0
        for row, col, block in op.stencil.corrections:
            dense[row * n:(row + 1) * n, col * n:(col + 1) * n] = block.to_dense()
    return dense


def dense_circulant(stencil: BlockStencil, ell: int) -> np.ndarray:
    dense = np.zeros((stencil.n * ell, stencil.n * ell))
    for offset, block in stencil.blocks:
        dense += np.kron(cyclic_shift(ell, offset), block.to_dense())
    return dense


def dense_sigma_kron(sigma: np.ndarray, K: TriDiagMatrix) -> np.ndarray:
    return np.kron(np.diag(sigma), K.to_dense())


def dense_time_dft(ell: int, n: int, inverse: bool = False) -> np.ndarray:
    """U ⊗ I_n (o U* ⊗ I_n) con U_jk = exp(-2πi jk/ell)/sqrt(ell)"""
    u = scipy.linalg.dft(ell, scale="sqrtn")
    if inverse:
        u = u.conj().T
    return np.kron(u, np.eye(n))


def implicit_euler(M: TriDiagMatrix, K: TriDiagMatrix, grid: TimeGrid, u0: np.ndarray) -> np.ndarray:
    """(M + τ_k K) u_k = M u_{k-1}, k = 1..ell; restituisce u_1..u_ell concatenati"""
    Md, Kd = M.to_dense(), K.to_dense()
    u = u0.copy()
    out = []
    for tau in grid.steps:
        u = np.linalg.solve(Md + tau * Kd, Md @ u)
        out.append(u)
    return np.concatenate(out)


def relative_error(x: np.ndarray, y: np.ndarray) -> float:
    ny = np.linalg.norm(y)
    return float(np.linalg.norm(x - y) / ny) if ny > 0 else float(np.linalg.norm(x))
