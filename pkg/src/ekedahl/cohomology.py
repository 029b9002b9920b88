"""Integral cohomology of smooth complete toric varieties, and of Z/p x Z/p.

Classes are handled through torus-orbit closures ``[V(tau)]``.  The
shelling of the fan picks a Z-basis among them; products reduce to
intersection numbers, which are evaluated by transversality and linear
equivalence only.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping, Sequence

from sympy import isprime

from .fan import Cone, Fan, FanError, Star, fan_is_smooth, is_complete, star
from .groups import AbelianGroup, GradedAbelianGroup, PresentedGroup, Z
from .lattice import IntMatrix, dual_basis, solve_integer


class ShellingError(FanError):
    pass


@dataclass(frozen=True)
class IntegerLinearMap:
    """Integer matrix between labelled bases (columns = domain).

    ``source``/``target`` carry relation data when the groups have torsion.
    """

    matrix: IntMatrix
    domain: tuple[str, ...]
    codomain: tuple[str, ...]
    source: PresentedGroup | None = None
    target: PresentedGroup | None = None

    def __post_init__(self):
        if self.matrix.shape != (len(self.codomain), len(self.domain)):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match labels "
                f"({len(self.codomain)} x {len(self.domain)})"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def _require_smooth_complete(f: Fan) -> None:
    if not fan_is_smooth(f):
        raise FanError("fan is not smooth")
    if not is_complete(f):
        raise FanError("fan is not complete")


# ---------------------------------------------------------------------
# Betti numbers and shellings

def betti_numbers(f: Fan) -> GradedAbelianGroup:
    """Cohomology of ``X_f`` from the face numbers (torsion free, even)."""
    _require_smooth_complete(f)
    n = f.dim
    d = f.face_counts()
    ranks = {}
    for k in range(n + 1):
        ranks[2 * k] = sum((-1) ** (i - k) * comb(i, k) * d[n - i] for i in range(k, n + 1))
    return GradedAbelianGroup.free_from_ranks(ranks)


def restriction_faces(f: Fan, order: Sequence[Cone]) -> list[Cone]:
    """New face of each cone: rays whose opposite facet lies in an earlier cone."""
    out = []
    placed_facets: set[Cone] = set()
    for c in order:
        new = tuple(v for v in c if tuple(x for x in c if x != v) in placed_facets)
        out.append(new)
        for v in c:
            placed_facets.add(tuple(x for x in c if x != v))
    return out


def is_shelling(f: Fan, order: Sequence[Cone]) -> bool:
    """Each cone meets the earlier ones exactly in the faces that miss its new face."""
    if sorted(order) != sorted(f.maximal_cones):
        return False
    faces = restriction_faces(f, order)
    for i, (c, r) in enumerate(zip(order, faces)):
        if i > 0 and not r:
            return False
        if any(set(r) <= set(order[j]) for j in range(i)):
            return False
    return True


def shelling_order(f: Fan, max_nodes: int = 200_000) -> list[Cone]:
    """Depth-first search for a shelling; candidates tried in lexicographic order."""
    _require_smooth_complete(f)
    cones = sorted(f.maximal_cones)
    if len(cones) <= 1:
        return cones
    neighbours: dict[Cone, list[Cone]] = {}
    by_facet: dict[Cone, list[Cone]] = {}
    for c in cones:
        for v in c:
            by_facet.setdefault(tuple(x for x in c if x != v), []).append(c)
    for c in cones:
        neighbours[c] = sorted({d for v in c for d in by_facet[tuple(x for x in c if x != v)] if d != c})

    nodes = 0
    order: list[Cone] = [cones[0]]
    placed: set[Cone] = {cones[0]}
    facets: set[Cone] = {tuple(x for x in cones[0] if x != v) for v in cones[0]}

    def candidates():
        cand = sorted({d for c in order for d in neighbours[c] if d not in placed})
        good = []
        for d in cand:
            r = [v for v in d if tuple(x for x in d if x != v) in facets]
            if r and not any(set(r) <= set(c) for c in order):
                good.append(d)
        return good

    def dfs() -> bool:
        nonlocal nodes
        if len(order) == len(cones):
            return True
        nodes += 1
        if nodes > max_nodes:
            raise ShellingError("shelling search exceeded its node budget")
        for d in candidates():
            added = [tuple(x for x in d if x != v) for v in d]
            new_facets = [a for a in added if a not in facets]
            order.append(d)
            placed.add(d)
            facets.update(new_facets)
            if dfs():
                return True
            order.pop()
            placed.discard(d)
            facets.difference_update(new_facets)
        return False

    if not dfs():
        raise ShellingError("no shelling order found")
    return list(order)


@dataclass(frozen=True)
class BasisElement:
    cone: Cone  # ray indices of the fan the basis lives on
    position: int  # 1-based place of the generating maximal cone in the shelling

    @property
    def degree(self) -> int:
        return 2 * len(self.cone)


@dataclass(frozen=True)
class CohomologyBasis:
    fan: Fan
    shelling: tuple[Cone, ...]
    elements: tuple[BasisElement, ...]

    def in_degree(self, degree: int) -> list[BasisElement]:
        return [e for e in self.elements if e.degree == degree]

    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for e in self.elements:
            out[e.degree] = out.get(e.degree, 0) + 1
        return out


def cohomology_basis(f: Fan) -> CohomologyBasis:
    order = shelling_order(f)
    faces = restriction_faces(f, order)
    elems = tuple(BasisElement(tau, i + 1) for i, tau in enumerate(faces))
    return CohomologyBasis(f, tuple(order), elems)


# ---------------------------------------------------------------------
# intersection numbers

class IntersectionRing:
    """Intersection numbers of torus-invariant divisors on a smooth complete
    toric variety.  The memo table lives and dies with the instance."""

    def __init__(self, f: Fan):
        _require_smooth_complete(f)
        self.fan = f
        self._memo: dict[tuple[int, ...], int] = {}
        self._duals: dict[Cone, list[tuple[int, ...]]] = {}

    def _dual(self, c: Cone) -> list[tuple[int, ...]]:
        if c not in self._duals:
            self._duals[c] = dual_basis([self.fan.rays[i] for i in c], self.fan.dim)
        return self._duals[c]

    def number(self, divisors: Iterable[int]) -> int:
        key = tuple(sorted(divisors))
        if len(key) != self.fan.dim:
            raise FanError(f"need {self.fan.dim} divisors, got {len(key)}")
        for i in key:
            if not 0 <= i < len(self.fan.rays):
                raise FanError(f"unknown ray index {i}")
        return self._number(key)

    def _number(self, key: tuple[int, ...]) -> int:
        if key in self._memo:
            return self._memo[key]
        support = tuple(sorted(set(key)))
        if not self.fan.has_cone(support):
            val = 0
        elif len(support) == len(key):
            val = 1
        else:
            rho = min(i for i in support if key.count(i) > 1)
            m = self._dual(support)[support.index(rho)]
            rest = list(key)
            rest.remove(rho)
            val = 0
            for other, v in enumerate(self.fan.rays):
                if other in support:
                    continue
                w = sum(a * b for a, b in zip(m, v))
                if w and self.fan.has_cone(support + (other,)):
                    val -= w * self._number(tuple(sorted(rest + [other])))
        self._memo[key] = val
        return val

    def pairing(self, a: Cone, b: Cone) -> int:
        """``[V(a)] . [V(b)]`` for cones of complementary dimension."""
        return self.number(tuple(a) + tuple(b))


def intersection_number(f: Fan, divisors: Sequence[int]) -> int:
    return IntersectionRing(f).number(divisors)


class ToricCohomology:
    """Shelling basis of ``H^*(X_f; Z)`` with coordinates for orbit classes."""

    def __init__(self, f: Fan):
        self.fan = f
        self.ring = IntersectionRing(f)
        self.basis = cohomology_basis(f)
        self._gram: dict[int, IntMatrix] = {}

    @property
    def dim(self) -> int:
        return self.fan.dim

    def basis_cones(self, degree: int) -> list[Cone]:
        return [e.cone for e in self.basis.in_degree(degree)]

    def gram(self, degree: int) -> IntMatrix:
        """Rows: basis in ``degree``; columns: basis in the dual degree."""
        if degree not in self._gram:
            rows = self.basis_cones(degree)
            cols = self.basis_cones(2 * self.dim - degree)
            self._gram[degree] = IntMatrix(
                [[self.ring.pairing(a, b) for b in cols] for a in rows], len(cols)
            )
        return self._gram[degree]

    def coordinates(self, degree: int, combination: Mapping[Cone, int]) -> tuple[int, ...]:
        """Coordinates of ``sum c [V(cone)]`` in the shelling basis."""
        dual = self.basis_cones(2 * self.dim - degree)
        values = [
            sum(c * self.ring.pairing(cone, b) for cone, c in combination.items() if c)
            for b in dual
        ]
        g = self.gram(degree)
        x = solve_integer(g.T, values)
        if x is None:
            raise ArithmeticError("class has no integral coordinates; basis is not unimodular")
        return x


# ---------------------------------------------------------------------
# Gysin maps and supported cohomology

def label(elem: BasisElement, star_: Star | None = None, tag: Sequence[int] = ()) -> str:
    """``tau_j^(i1,i2)`` style label used in matrix dumps."""
    sup = ",".join(map(str, tag))
    cone = elem.cone if star_ is None else star_.parent_cone(elem.cone)
    return f"tau_{elem.position}^({sup})[{'.'.join(map(str, cone))}]"


class StarCohomology:
    """Cohomology of the orbit closure ``V(c)`` via the star of ``c``."""

    def __init__(self, f: Fan, c: Sequence[int]):
        self.star = star(f, c)
        self.cohomology = ToricCohomology(self.star.fan)

    def basis_parent_cones(self, degree: int) -> list[Cone]:
        return [self.star.parent_cone(e) for e in self.cohomology.basis_cones(degree)]

    def basis_elements(self, degree: int) -> list[BasisElement]:
        return self.cohomology.basis.in_degree(degree)

    def coordinates_of_parent_cycle(self, degree: int, parent: Mapping[Cone, int]) -> tuple[int, ...]:
        local = {self.star.local_cone(p): c for p, c in parent.items()}
        return self.cohomology.coordinates(degree, local)


def gysin_pushforward_matrix(
    f: Fan,
    source: Sequence[int],
    target: Sequence[int],
    degree: int,
    cache: dict | None = None,
) -> IntegerLinearMap:
    """``H^degree(V(source)) -> H^(degree + 2 codim)(V(target))``."""
    source = tuple(sorted(source))
    target = tuple(sorted(target))
    if not set(target) <= set(source):
        raise FanError(f"{target} is not a face of {source}")
    cache = {} if cache is None else cache

    def sc(c):
        if c not in cache:
            cache[c] = StarCohomology(f, c)
        return cache[c]

    src, tgt = sc(source), sc(target)
    out_degree = degree + 2 * (len(source) - len(target))
    src_cones = src.basis_parent_cones(degree)
    columns = [tgt.coordinates_of_parent_cycle(out_degree, {p: 1}) for p in src_cones]
    rows = len(tgt.basis_parent_cones(out_degree))
    m = IntMatrix.from_columns(columns, rows) if columns else IntMatrix.zeros(rows, 0)
    dom = tuple(label(e, src.star, source) for e in src.basis_elements(degree))
    cod = tuple(label(e, tgt.star, target) for e in tgt.basis_elements(out_degree))
    return IntegerLinearMap(m, dom, cod)


def supported_cohomology(f: Fan, c: Sequence[int]) -> GradedAbelianGroup:
    """``H^*(X, X - V(c))``: the star's cohomology shifted by ``2 dim c``."""
    s = star(f, c)
    if not is_complete(s.fan):
        raise FanError(f"star of {tuple(c)} is not complete")
    return betti_numbers(s.fan).shift(2 * len(s.cone))


# ---------------------------------------------------------------------
# H^*(Z/p x Z/p; Z) = Z[x1, x2, y] / (y^2, p x1, p x2, p y)

@dataclass(frozen=True)
class GroupCohomologyRing:
    p: int

    def __post_init__(self):
        if not isprime(self.p):
            raise ValueError(f"{self.p} is not prime")

    def monomials(self, degree: int) -> list[tuple[int, int, int]]:
        """Exponents ``(a, b, e)`` of ``x1^a x2^b y^e`` in the given degree."""
        out = []
        for e in (0, 1):
            rest = degree - 3 * e
            if rest < 0 or rest % 2:
                continue
            s = rest // 2
            out.extend((a, s - a, e) for a in range(s, -1, -1))
        return out

    def group(self, degree: int) -> AbelianGroup:
        if degree < 0:
            return AbelianGroup()
        if degree == 0:
            return Z
        return AbelianGroup(0, (self.p,) * len(self.monomials(degree)))

    def presentation(self, degree: int) -> PresentedGroup:
        if degree < 0:
            return PresentedGroup.free(0)
        if degree == 0:
            return PresentedGroup.free(1)
        return PresentedGroup.cyclic_sum([self.p] * len(self.monomials(degree)))

    def labels(self, degree: int) -> tuple[str, ...]:
        if degree == 0:
            return ("1",)
        return tuple(_monomial_name(m) for m in self.monomials(degree))

    def graded(self, max_degree: int) -> GradedAbelianGroup:
        return GradedAbelianGroup({d: self.group(d) for d in range(max_degree + 1)})


def _monomial_name(m: tuple[int, int, int]) -> str:
    a, b, e = m
    parts = []
    for name, k in (("x1", a), ("x2", b), ("y", e)):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return "*".join(parts) or "1"


def group_cohomology(p: int, max_degree: int) -> tuple[GroupCohomologyRing, GradedAbelianGroup]:
    ring = GroupCohomologyRing(p)
    return ring, ring.graded(max_degree)


def multiplication_by_y(p: int, source_degree: int, scalar: int = 1) -> IntegerLinearMap:
    """Matrix of ``alpha -> scalar * alpha * y`` on monomial bases."""
    ring = GroupCohomologyRing(p)
    src = [(0, 0, 0)] if source_degree == 0 else ring.monomials(source_degree)
    tgt = ring.monomials(source_degree + 3)
    idx = {m: i for i, m in enumerate(tgt)}
    cols = []
    for a, b, e in src:
        col = [0] * len(tgt)
        if e == 0:
            col[idx[(a, b, 1)]] = scalar
        cols.append(col)
    m = IntMatrix.from_columns(cols, len(tgt)) if cols else IntMatrix.zeros(len(tgt), 0)
    return IntegerLinearMap(
        m,
        ring.labels(source_degree) if src else (),
        ring.labels(source_degree + 3),
        ring.presentation(source_degree),
        ring.presentation(source_degree + 3),
    )
