"""
Griglie temporali su (0, 1]: uniformi e perturbate casualmente
Espone gli scostamenti σ_i = τ_i - τ usati dal precondizionatore di Neumann
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    """
    Griglia temporale con ell passi.

    points: t_0..t_ell (t_0 = 0, t_ell = 1)
    steps: τ_1..τ_ell
    sigma: τ_i - 1/ell, uno scostamento per passo (ell blocchi diagonali)
    """

    ell: int
    points: np.ndarray
    steps: np.ndarray

    def __post_init__(self):
        if len(self.points) != self.ell + 1 or len(self.steps) != self.ell:
            raise ValueError("Griglia temporale incoerente con ell")
        self.points.setflags(write=False)
        self.steps.setflags(write=False)

    @property
    def tau_base(self) -> float:
        return 1.0 / self.ell

    @property
    def sigma(self) -> np.ndarray:
        return self.steps - self.tau_base

    @property
    def is_uniform(self) -> bool:
        return not np.any(self.sigma)

    @property
    def max_sigma(self) -> float:
        return float(np.max(np.abs(self.sigma)))

    @classmethod
    def uniform(cls, ell: int) -> "TimeGrid":
        """Passo costante 1/ell, sigma identicamente nullo"""
        if ell < 1:
            raise ValueError(f"Servono almeno un passo temporale (ell={ell})")
        points = np.arange(ell + 1) / ell
        points[-1] = 1.0
        return cls(ell=ell, points=points, steps=np.full(ell, 1.0 / ell))

    @classmethod
    def perturbed(cls, ell: int, delta: float, seed: int) -> "TimeGrid":
        """
        Griglia perturbata: t_j = (j + δ(r_j - 0.5)) / ell per j = 1..ell-1.

        r_j ~ U(0,1) da numpy PCG64 inizializzato con seed, estratti in ordine j.
        Estremi fissati a 0 e 1. Con δ < 1 la griglia resta strettamente crescente:
        ogni passo sta in ((1-δ)/ell, (1+δ)/ell).
        """
        if ell < 1:
            raise ValueError(f"Servono almeno un passo temporale (ell={ell})")
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta deve stare in (0,1), ricevuto {delta}")
        rng = np.random.Generator(np.random.PCG64(seed))
        r = rng.random(ell - 1)
        points = np.empty(ell + 1)
        points[0] = 0.0
        points[1:-1] = (np.arange(1, ell) + delta * (r - 0.5)) / ell
        points[-1] = 1.0
        steps = np.diff(points)
        grid = cls(ell=ell, points=points, steps=steps)
        logger.debug(
            "Griglia perturbata ell=%d delta=%.2f seed=%d: passo min %.3e, max %.3e",
            ell, delta, seed, steps.min(), steps.max(),
        )
        return grid

    def to_frame(self) -> pd.DataFrame:
        """Tabella j, t_j, tau_j, sigma_j (tau/sigma vuoti per j=0)"""
        tau = np.concatenate([[np.nan], self.steps])
        sigma = np.concatenate([[np.nan], self.sigma])
        return pd.DataFrame({
            "j": np.arange(self.ell + 1),
            "t_j": self.points,
            "tau_j": tau,
            "sigma_j": sigma,
        })

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path
