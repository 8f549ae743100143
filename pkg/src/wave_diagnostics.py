"""
Diagnostica delle soluzioni d'onda: velocità del fronte e dissipazione numerica
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from src.config import WAVE_SPEED_T_MAX, WAVE_SPEED_T_MIN
from src.exceptions import DimensionMismatchError, UndefinedSpeedError
from src.fem1d import SpatialGrid

logger = logging.getLogger(__name__)

FLAT_PROFILE_LIMIT = 1e-12


@dataclass(frozen=True)
class Snapshots:
    """Profili u(x, t) sui nodi interni: profiles[m] è la soluzione al tempo times[m]"""

    times: np.ndarray
    profiles: np.ndarray

    def __post_init__(self):
        if self.profiles.ndim != 2 or len(self.times) != self.profiles.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.times)} tempi per profili di shape {self.profiles.shape}"
            )

    def __len__(self) -> int:
        return len(self.times)

    def to_frame(self, grid: SpatialGrid) -> pd.DataFrame:
        """Formato lungo con colonne t, x, u"""
        if grid.n != self.profiles.shape[1]:
            raise DimensionMismatchError(f"Griglia con n={grid.n}, profili con n={self.profiles.shape[1]}")
        count = len(self.times)
        return pd.DataFrame({
            "t": np.repeat(self.times, grid.n),
            "x": np.tile(grid.nodes, count),
            "u": self.profiles.reshape(-1),
        })

    def to_csv(self, grid: SpatialGrid, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame(grid).to_csv(path, index=False, float_format="%.17g")
        return path

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "Snapshots":
        df = df.sort_values(["t", "x"])
        times = np.unique(df["t"].to_numpy())
        profiles = df["u"].to_numpy().reshape(len(times), -1)
        return cls(times=times, profiles=profiles)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Snapshots":
        return cls.from_frame(pd.read_csv(path))


def wave_speed(
    snapshots: Snapshots,
    grid: SpatialGrid,
    t_min: float = WAVE_SPEED_T_MIN,
    t_max: float = WAVE_SPEED_T_MAX,
) -> float:
    """
    Velocità dell'impulso che viaggia verso destra.

    x0 è l'argmax del primo profilo; per ogni profilo con t_min <= t < t_max si
    prende l'argmax su x >= x0 e si stima la pendenza posizione/tempo ai minimi
    quadrati.

    Raises:
        UndefinedSpeedError: profili piatti (max|u| < 1e-12)
        ValueError: meno di due profili nella finestra
    """
    if grid.n != snapshots.profiles.shape[1]:
        raise DimensionMismatchError(f"Griglia con n={grid.n}, profili con n={snapshots.profiles.shape[1]}")
    order = np.argsort(snapshots.times)
    times = snapshots.times[order]
    profiles = snapshots.profiles[order]
    if np.max(np.abs(profiles[0])) < FLAT_PROFILE_LIMIT:
        raise UndefinedSpeedError("Primo profilo piatto: impossibile localizzare l'impulso")

    nodes = grid.nodes
    start = int(np.argmax(profiles[0]))
    window = (times >= t_min) & (times < t_max)
    if np.count_nonzero(window) < 2:
        raise ValueError(
            f"Servono almeno due profili con {t_min:.4g} <= t < {t_max:.4g} "
            f"(trovati {np.count_nonzero(window)})"
        )

    positions = []
    for profile in profiles[window]:
        right = profile[start:]
        if np.max(np.abs(right)) < FLAT_PROFILE_LIMIT:
            raise UndefinedSpeedError("Profilo piatto nella finestra di misura")
        positions.append(nodes[start + int(np.argmax(right))])
    slope, _ = np.polyfit(times[window], np.asarray(positions), 1)
    logger.debug("Velocità d'onda stimata su %d profili: %.4f", len(positions), slope)
    return float(slope)


def dissipation_metric(snapshots: Snapshots) -> float:
    """max|u| dell'ultimo profilo diviso max|u| del primo (< 1: dissipazione)"""
    if len(snapshots) < 2:
        raise ValueError("Servono almeno due profili")
    order = np.argsort(snapshots.times)
    first = float(np.max(np.abs(snapshots.profiles[order[0]])))
    last = float(np.max(np.abs(snapshots.profiles[order[-1]])))
    if first == 0.0:
        raise ValueError("Primo profilo nullo: rapporto di ampiezza non definito")
    return last / first
