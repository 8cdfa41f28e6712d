"""Centralised numerical tolerances and capacity limits."""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    orthonormal: float = 1e-12
    condition: float = 1e-12
    spectrum: float = 1e-12
    unitary: float = 1e-11
    contraction: float = 1e-10
    hp: float = 1e-10
    structure: float = 1e-12
    # Taylor switch for f and g
    series_radius: float = 1e-4
    # largest dense matrix, in entries
    max_entries: int = 2 ** 22

    def with_(self, **changes):
        return replace(self, **changes)


DEFAULT = Tolerances()
