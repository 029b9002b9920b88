"""Finitely generated abelian groups and their graded collections.

Groups are stored by elementary divisors: a free rank plus a sorted tuple
of prime powers.  ``subquotient`` computes ker/im for maps between
presented groups, which is all that page turning in a spectral sequence
needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from sympy import factorint

from .lattice import IntMatrix, integer_kernel, lattice_basis, smith_form, solve_integer


def prime_power_parts(n: int) -> list[int]:
    """Split Z/n into its primary cyclic summands."""
    if n < 1:
        raise ValueError("cyclic order must be positive")
    return sorted(p**e for p, e in factorint(n).items())


@dataclass(frozen=True, order=True)
class AbelianGroup:
    """``Z^free_rank`` plus cyclic summands of prime-power order."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        parts: list[int] = []
        for t in self.torsion:
            parts.extend(prime_power_parts(t))
        object.__setattr__(self, "torsion", tuple(sorted(x for x in parts if x > 1)))

    @classmethod
    def free(cls, rank: int) -> "AbelianGroup":
        return cls(rank, ())

    @classmethod
    def from_invariants(cls, diagonal: Iterable[int], generators: int) -> "AbelianGroup":
        """Group ``Z^generators / diag(diagonal)`` (missing entries are zero)."""
        diagonal = list(diagonal)
        free = generators - len(diagonal) + sum(1 for d in diagonal if d == 0)
        return cls(free, tuple(d for d in diagonal if d > 1))

    @property
    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    def torsion_part(self) -> "AbelianGroup":
        return AbelianGroup(0, self.torsion)

    def __add__(self, other: "AbelianGroup") -> "AbelianGroup":
        return AbelianGroup(self.free_rank + other.free_rank, self.torsion + other.torsion)

    def __mul__(self, k: int) -> "AbelianGroup":
        return AbelianGroup(self.free_rank * k, self.torsion * k)

    __rmul__ = __mul__

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        if self.free_rank:
            parts.append("Z" if self.free_rank == 1 else f"Z^{self.free_rank}")
        counts: dict[int, int] = {}
        for t in self.torsion:
            counts[t] = counts.get(t, 0) + 1
        for t, c in sorted(counts.items()):
            parts.append(f"(Z/{t})" if c == 1 else f"(Z/{t})^{c}")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {"rank": self.free_rank, "torsion": list(self.torsion)}

    @classmethod
    def from_json(cls, data: Mapping) -> "AbelianGroup":
        return cls(int(data["rank"]), tuple(int(t) for t in data.get("torsion", ())))


ZERO = AbelianGroup()
Z = AbelianGroup(1)


@dataclass(frozen=True)
class GradedAbelianGroup:
    """Finitely many nonzero graded pieces, keyed by degree."""

    pieces: Mapping[int, AbelianGroup] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(k): v for k, v in sorted(self.pieces.items()) if not v.is_zero}
        if any(k < 0 for k in clean):
            raise ValueError("negative degree in graded group")
        object.__setattr__(self, "pieces", clean)

    def __getitem__(self, degree: int) -> AbelianGroup:
        return self.pieces.get(degree, ZERO)

    def degrees(self) -> list[int]:
        return sorted(self.pieces)

    @property
    def top_degree(self) -> int:
        return max(self.pieces, default=0)

    def ranks(self) -> dict[int, int]:
        return {k: g.free_rank for k, g in self.pieces.items()}

    def is_torsion_free(self) -> bool:
        return all(not g.torsion for g in self.pieces.values())

    def shift(self, by: int) -> "GradedAbelianGroup":
        return GradedAbelianGroup({k + by: g for k, g in self.pieces.items()})

    def __add__(self, other: "GradedAbelianGroup") -> "GradedAbelianGroup":
        keys = set(self.pieces) | set(other.pieces)
        return GradedAbelianGroup({k: self[k] + other[k] for k in keys})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GradedAbelianGroup):
            return NotImplemented
        return dict(self.pieces) == dict(other.pieces)

    def __hash__(self) -> int:
        return hash(tuple(self.pieces.items()))

    def __str__(self) -> str:
        if not self.pieces:
            return "0"
        return ", ".join(f"H^{k} = {g}" for k, g in self.pieces.items())

    def to_json(self) -> dict:
        return {str(k): g.to_json() for k, g in self.pieces.items()}

    @classmethod
    def from_json(cls, data: Mapping) -> "GradedAbelianGroup":
        return cls({int(k): AbelianGroup.from_json(v) for k, v in data.items()})

    @classmethod
    def free_from_ranks(cls, ranks: Mapping[int, int]) -> "GradedAbelianGroup":
        return cls({k: AbelianGroup.free(r) for k, r in ranks.items()})


@dataclass(frozen=True)
class PresentedGroup:
    """``Z^generators`` modulo the column span of ``relations``."""

    generators: int
    relations: IntMatrix

    @classmethod
    def free(cls, n: int) -> "PresentedGroup":
        return cls(n, IntMatrix.zeros(n, 0))

    @classmethod
    def cyclic_sum(cls, orders: Iterable[int]) -> "PresentedGroup":
        """Direct sum of ``Z/o`` for each order (``0`` meaning ``Z``)."""
        orders = list(orders)
        n = len(orders)
        cols = [[o if i == j else 0 for i in range(n)] for j, o in enumerate(orders) if o != 0]
        return cls(n, IntMatrix.from_columns(cols, n) if cols else IntMatrix.zeros(n, 0))

    def structure(self) -> AbelianGroup:
        if self.generators == 0:
            return ZERO
        return AbelianGroup.from_invariants(smith_form(self.relations).diagonal, self.generators)


def subquotient(
    middle: PresentedGroup,
    incoming: IntMatrix | None = None,
    outgoing: IntMatrix | None = None,
    target: PresentedGroup | None = None,
) -> AbelianGroup:
    """Homology ``ker(outgoing) / im(incoming)`` at ``middle``.

    ``incoming`` has ``middle.generators`` rows; ``outgoing`` maps
    generators of ``middle`` to generators of ``target``.  Maps are only
    required to be well defined on the presented groups.
    """
    g = middle.generators
    if g == 0:
        return ZERO
    # lift of the kernel to Z^g
    if outgoing is None or outgoing.rows == 0:
        kernel_lift = IntMatrix.identity(g)
    else:
        if target is None:
            target = PresentedGroup.free(outgoing.rows)
        stacked = outgoing.hstack(-target.relations)
        k = integer_kernel(stacked)
        vecs = [k.column(j)[:g] for j in range(k.cols)]
        kernel_lift = lattice_basis(vecs, g)
    basis = kernel_lift  # rows
    gens = list(middle.relations.columns())
    if incoming is not None:
        gens += incoming.columns()
    if basis.rows == 0:
        if any(any(v) for v in gens):
            raise ArithmeticError("image is not contained in the kernel (d o d != 0)")
        return ZERO
    bt = basis.T
    rel_cols = []
    for v in gens:
        if not any(v):
            continue
        c = solve_integer(bt, v)
        if c is None:
            raise ArithmeticError("image is not contained in the kernel (d o d != 0)")
        rel_cols.append(c)
    if not rel_cols:
        return AbelianGroup.free(basis.rows)
    rel = IntMatrix.from_columns(rel_cols, basis.rows)
    return AbelianGroup.from_invariants(smith_form(rel).diagonal, basis.rows)


def kernel_group(m: IntMatrix) -> AbelianGroup:
    return AbelianGroup.free(integer_kernel(m).cols)


def cokernel_group(m: IntMatrix) -> AbelianGroup:
    return subquotient(PresentedGroup.free(m.rows), incoming=m)
