"""Published capacity bounds for d = 1, 3, 5, 7 used as regression references.

The replica-symmetry and combinatorial-geometry rows have no formula here;
they are reported as reference values only.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

__all__ = ["REFERENCE_DS", "REFERENCE_METHODS", "ReferenceTable", "REFERENCE_TABLE"]

REFERENCE_DS = (1, 3, 5, 7)
REFERENCE_METHODS = ("lifted", "plain", "replica_symmetry", "combinatorial_geometry")

_VALUES = {
    "lifted": (2.0, 3.43, 4.03, 4.39),
    "plain": (2.0, 4.02, 5.77, 7.31),
    "replica_symmetry": (2.0, 4.02, 5.77, 7.31),
    "combinatorial_geometry": (2.0, 5.42, 6.43, 7.05),
}


@dataclass(frozen=True)
class ReferenceTable:
    rows: Mapping[tuple[int, str], float]

    def get(self, d: int, method: str) -> float | None:
        return self.rows.get((d, method))

    def row(self, method: str) -> dict[int, float]:
        return {d: v for (d, m), v in self.rows.items() if m == method}


REFERENCE_TABLE = ReferenceTable(
    rows=MappingProxyType(
        {(d, method): v for method, vals in _VALUES.items() for d, v in zip(REFERENCE_DS, vals)}
    )
)
