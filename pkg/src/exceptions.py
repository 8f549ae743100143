"""
Eccezioni del solutore all-at-once
"""


class AllAtOnceError(Exception):
    """Errore base del pacchetto"""


class DimensionMismatchError(AllAtOnceError, ValueError):
    """Dimensioni incompatibili tra blocchi, vettori o griglie"""


class SingularSymbolError(AllAtOnceError):
    """Simbolo S_k singolare (pivot nullo nell'algoritmo di Thomas)"""

    def __init__(self, k: int, pivot: float, row: int):
        self.k = k
        self.pivot = pivot
        self.row = row
        super().__init__(
            f"Simbolo singolare alla frequenza k={k}: pivot {pivot:.3e} alla riga {row}"
        )


class ImaginaryResidueError(AllAtOnceError):
    """Residuo immaginario oltre soglia: simmetria coniugata violata"""


class DeterminismError(AllAtOnceError):
    """Soluzioni diverse al variare del numero di worker"""


class UndefinedSpeedError(AllAtOnceError):
    """Profili piatti: velocità d'onda non definita"""


class LayoutMismatchError(AllAtOnceError, ValueError):
    """Vettore a blocchi con layout diverso da quello richiesto"""
