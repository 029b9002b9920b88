"""Simplicial fans over Z^n: cyclic quotient cones, stars, stellar
subdivision and toric resolution.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd, prod
from typing import Iterable, Mapping, Sequence

from .lattice import (
    IntMatrix,
    hermite_form,
    is_primitive,
    primitive,
    rank,
    smith_form,
    solve_rational,
)

log = logging.getLogger(__name__)

Cone = tuple[int, ...]


class FanError(ValueError):
    """Invalid fan data or an operation outside its preconditions."""


class NotSimplicialError(FanError):
    pass


@dataclass(frozen=True)
class Fan:
    dim: int
    rays: tuple[tuple[int, ...], ...]
    maximal_cones: tuple[Cone, ...]

    def __post_init__(self):
        rays = tuple(tuple(int(x) for x in r) for r in self.rays)
        cones = tuple(tuple(sorted(set(int(i) for i in c))) for c in self.maximal_cones)
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "maximal_cones", cones)
        if self.dim < 0:
            raise FanError("negative dimension")
        for r in rays:
            if len(r) != self.dim:
                raise FanError(f"ray {r} has wrong length for dimension {self.dim}")
            if not any(r):
                raise FanError("zero ray")
            if not is_primitive(r):
                raise FanError(f"ray {r} is not primitive")
        if len(set(rays)) != len(rays):
            raise FanError("duplicate rays")
        for c in cones:
            for i in c:
                if not 0 <= i < len(rays):
                    raise FanError(f"cone {c} refers to unknown ray {i}")
        sets = [frozenset(c) for c in cones]
        for a, b in itertools.permutations(range(len(sets)), 2):
            if sets[a] <= sets[b]:
                raise FanError(f"maximal cone {cones[a]} is contained in {cones[b]}")

    # --- combinatorics -------------------------------------------------
    @cached_property
    def cones(self) -> tuple[Cone, ...]:
        """Every face (as a ray subset) of every maximal cone, the empty cone
        included.  Only meaningful for simplicial fans."""
        out: set[Cone] = set()
        for c in self.maximal_cones:
            for k in range(len(c) + 1):
                out.update(itertools.combinations(c, k))
        return tuple(sorted(out, key=lambda c: (len(c), c)))

    @cached_property
    def _cone_set(self) -> frozenset[Cone]:
        return frozenset(self.cones)

    def cones_of_dim(self, k: int) -> list[Cone]:
        return [c for c in self.cones if len(c) == k]

    def has_cone(self, c: Iterable[int]) -> bool:
        return tuple(sorted(c)) in self._cone_set

    def face_counts(self) -> list[int]:
        """``d_j`` = number of ``j``-dimensional cones, ``j = 0..dim``."""
        counts = [0] * (self.dim + 1)
        for c in self.cones:
            counts[len(c)] += 1
        return counts

    def ray_matrix(self, c: Sequence[int]) -> IntMatrix:
        return IntMatrix.from_columns([self.rays[i] for i in c], self.dim) if c else IntMatrix.zeros(self.dim, 0)

    def cones_containing(self, c: Sequence[int]) -> list[Cone]:
        s = set(c)
        return [d for d in self.cones if s <= set(d)]

    # --- JSON ----------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "rays": [list(r) for r in self.rays],
            "maximal_cones": [list(c) for c in self.maximal_cones],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Fan":
        for key in ("dim", "rays", "maximal_cones"):
            if key not in data:
                raise FanError(f"fan JSON is missing field '{key}'")
        try:
            return cls(int(data["dim"]), tuple(map(tuple, data["rays"])), tuple(map(tuple, data["maximal_cones"])))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FanError):
                raise
            raise FanError(f"malformed fan JSON: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ---------------------------------------------------------------------
# standard fans

def projective_space_fan(n: int) -> Fan:
    """Fan of P^n: rays e_1..e_n, -(e_1+...+e_n)."""
    rays = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    rays.append(tuple(-1 for _ in range(n)))
    cones = [tuple(j for j in range(n + 1) if j != i) for i in range(n + 1)]
    return Fan(n, tuple(rays), tuple(cones))


def orthant_fan(n: int) -> Fan:
    rays = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    return Fan(n, rays, (tuple(range(n)),))


# ---------------------------------------------------------------------
# cyclic quotients

@dataclass(frozen=True)
class CyclicQuotientType:
    """The germ ``A^k / (Z/order)`` with diagonal weights."""

    order: int
    weights: tuple[int, ...]

    def __post_init__(self):
        w = tuple(int(a) % self.order if self.order > 0 else int(a) for a in self.weights)
        object.__setattr__(self, "weights", w)
        if self.order < 1:
            raise FanError("order must be positive")
        if not w:
            raise FanError("at least one weight is required")
        if gcd(self.order, *w) != 1:
            raise FanError(f"type 1/{self.order}{w} is not faithful (gcd != 1)")

    @classmethod
    def parse(cls, text: str) -> "CyclicQuotientType":
        """Parse ``1/5(1,2,3,4)``."""
        s = text.replace(" ", "")
        try:
            head, rest = s.split("(", 1)
            num, den = head.split("/")
            if int(num) != 1 or not rest.endswith(")"):
                raise ValueError
            weights = tuple(int(x) for x in rest[:-1].split(",") if x != "")
            return cls(int(den), weights)
        except ValueError:
            raise FanError(f"cannot parse quotient type '{text}' (expected 1/n(a1,...,ak))") from None

    def __str__(self) -> str:
        return f"1/{self.order}({','.join(map(str, self.weights))})"


def quotient_lattice_basis(t: CyclicQuotientType) -> IntMatrix:
    """Columns: a Z-basis of ``Z^k + Z (1/n)(a_1..a_k)``, scaled by ``n``."""
    n, k = t.order, len(t.weights)
    gens = [tuple(n * int(i == j) for i in range(k)) for j in range(k)] + [t.weights]
    h, _ = hermite_form(IntMatrix(gens, k))
    return IntMatrix([h.row(i) for i in range(k)], k).T


def quotient_cone(t: CyclicQuotientType) -> Fan:
    """The single cone of ``A^k / (Z/n)`` written in a Z-basis of its lattice."""
    n, k = t.order, len(t.weights)
    basis = quotient_lattice_basis(t)
    rays = []
    for j in range(k):
        target = [n * int(i == j) for i in range(k)]
        sol = solve_rational(basis, target)
        if sol is None or any(x.denominator != 1 for x in sol):
            raise FanError("internal: coordinate vector not integral")
        rays.append(primitive([int(x) for x in sol]))
    return Fan(k, tuple(rays), (tuple(range(k)),))


# ---------------------------------------------------------------------
# cone predicates

def _check_cone(f: Fan, c: Sequence[int]) -> Cone:
    c = tuple(sorted(c))
    if not f.has_cone(c):
        raise FanError(f"{c} is not a cone of the fan")
    return c


def is_simplicial(f: Fan, c: Sequence[int]) -> bool:
    return rank(f.ray_matrix(c)) == len(c)


def multiplicity(f: Fan, c: Sequence[int]) -> int:
    """Index of the ray span in the lattice points of its linear span."""
    if not is_simplicial(f, c):
        raise NotSimplicialError(f"cone {tuple(c)} is not simplicial")
    if not c:
        return 1
    return prod(smith_form(f.ray_matrix(c)).diagonal)


def is_smooth(f: Fan, c: Sequence[int]) -> bool:
    if not is_simplicial(f, c):
        raise NotSimplicialError(f"smoothness test needs a simplicial cone; {tuple(c)} is not")
    return multiplicity(f, c) == 1


def fan_is_simplicial(f: Fan) -> bool:
    return all(is_simplicial(f, c) for c in f.maximal_cones)


def fan_is_smooth(f: Fan) -> bool:
    return fan_is_simplicial(f) and all(is_smooth(f, c) for c in f.maximal_cones)


def is_complete(f: Fan) -> bool:
    """Facet pairing test for pure, full-dimensional simplicial fans."""
    if f.dim == 0:
        return True
    if not f.maximal_cones:
        return False
    if any(len(c) != f.dim for c in f.maximal_cones):
        raise FanError("completeness test needs a pure full-dimensional fan")
    if not fan_is_simplicial(f):
        raise NotSimplicialError("completeness test needs a simplicial fan")
    count: dict[Cone, int] = {}
    for c in f.maximal_cones:
        for facet in itertools.combinations(c, f.dim - 1):
            count[facet] = count.get(facet, 0) + 1
    return all(v == 2 for v in count.values())


def intersections_are_faces(f: Fan) -> bool:
    """Check that any two maximal cones meet along their common face.

    Uses a small LP per pair; intended for desk-scale fans.
    """
    from scipy.optimize import linprog

    for a, b in itertools.combinations(f.maximal_cones, 2):
        common = set(a) & set(b)
        ra = [f.rays[i] for i in a]
        rb = [f.rays[i] for i in b]
        na, nb = len(ra), len(rb)
        # sum lambda r_a - sum mu r_b = 0, lambda, mu >= 0, weight on non-common rays = 1
        a_eq = [[ra[i][d] for i in range(na)] + [-rb[j][d] for j in range(nb)] for d in range(f.dim)]
        weight = [0 if a[i] in common else 1 for i in range(na)] + [0 if b[j] in common else 1 for j in range(nb)]
        if not any(weight):
            continue
        a_eq.append(weight)
        b_eq = [0] * f.dim + [1]
        res = linprog([0] * (na + nb), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * (na + nb), method="highs")
        if res.status == 0:
            return False
    return True


# ---------------------------------------------------------------------
# stars

@dataclass(frozen=True)
class Star:
    fan: Fan
    cone: Cone
    ray_origin: tuple[int, ...]  # star ray index -> ray index in the parent fan

    def parent_cone(self, c: Sequence[int]) -> Cone:
        """Cone of the parent fan corresponding to a cone of the star."""
        return tuple(sorted(set(self.cone) | {self.ray_origin[i] for i in c}))

    def local_cone(self, parent: Sequence[int]) -> Cone:
        idx = {r: i for i, r in enumerate(self.ray_origin)}
        return tuple(sorted(idx[r] for r in parent if r not in self.cone))


def quotient_map(f: Fan, c: Sequence[int]) -> IntMatrix:
    """Surjection ``N -> N / (N cap span c)`` as an integer matrix."""
    k = rank(f.ray_matrix(c)) if c else 0
    if k == 0:
        return IntMatrix.identity(f.dim)
    u = smith_form(f.ray_matrix(c)).left
    return IntMatrix([u.row(i) for i in range(k, f.dim)], f.dim)


def star(f: Fan, c: Sequence[int]) -> Star:
    c = _check_cone(f, c)
    q = quotient_map(f, c)
    containing = [m for m in f.maximal_cones if set(c) <= set(m)]
    others = sorted({i for m in containing for i in m if i not in c})
    images = []
    for i in others:
        img = q.apply(f.rays[i])
        if not any(img):
            raise FanError("ray maps to zero in the star; fan is not simplicial here")
        images.append(primitive(img))
    if len(set(images)) != len(images):
        raise FanError("two rays have the same image in the star")
    idx = {r: j for j, r in enumerate(others)}
    cones = tuple(tuple(sorted(idx[i] for i in m if i not in c)) for m in containing)
    sub = Fan(q.rows, tuple(images), cones)
    return Star(sub, c, tuple(others))


def star_fan(f: Fan, c: Sequence[int]) -> Fan:
    return star(f, c).fan


# ---------------------------------------------------------------------
# subdivision and resolution

def barycentric(f: Fan, c: Sequence[int], v: Sequence[int]) -> list[Fraction] | None:
    """Coordinates of ``v`` in the rays of ``c``, if ``v`` lies in their span."""
    if not c:
        return [] if not any(v) else None
    return solve_rational(f.ray_matrix(c), list(v))


def locate(f: Fan, v: Sequence[int]) -> Cone | None:
    """Smallest cone whose relative interior contains ``v``."""
    for m in f.maximal_cones:
        lam = barycentric(f, m, v)
        if lam is not None and all(x >= 0 for x in lam):
            return tuple(i for i, x in zip(m, lam) if x > 0)
    return None


def stellar_subdivision(f: Fan, new_ray: Sequence[int]) -> Fan:
    new_ray = tuple(int(x) for x in new_ray)
    if len(new_ray) != f.dim:
        raise FanError("ray has the wrong dimension")
    if not any(new_ray) or not is_primitive(new_ray):
        raise FanError(f"subdivision ray {new_ray} is not primitive")
    if not fan_is_simplicial(f):
        raise NotSimplicialError("stellar subdivision is implemented for simplicial fans")
    if new_ray in f.rays:
        return f
    tau = locate(f, new_ray)
    if tau is None:
        raise FanError(f"ray {new_ray} lies outside the support of the fan")
    v = len(f.rays)
    out: list[Cone] = []
    for m in f.maximal_cones:
        if set(tau) <= set(m):
            for rho in tau:
                out.append(tuple(sorted([i for i in m if i != rho] + [v])))
        else:
            out.append(m)
    return Fan(f.dim, f.rays + (new_ray,), tuple(sorted(out)))


def parallelepiped_points(f: Fan, c: Sequence[int]) -> list[tuple[tuple[int, ...], tuple[Fraction, ...]]]:
    """Lattice points ``sum lambda_i r_i`` with ``0 <= lambda_i < 1``.

    Returns ``(point, lambda)`` pairs, the origin included.
    """
    r = f.ray_matrix(c)
    k = len(c)
    snf = smith_form(r)
    d = snf.diagonal
    if any(x == 0 for x in d[:k]):
        raise NotSimplicialError(f"cone {tuple(c)} is not simplicial")
    seen: dict[tuple[Fraction, ...], tuple[int, ...]] = {}
    for ys in itertools.product(*(range(x) for x in d[:k])):
        mu = [Fraction(y, x) for y, x in zip(ys, d)]
        lam = [sum(Fraction(snf.right[i, j]) * mu[j] for j in range(k)) for i in range(k)]
        frac = tuple(x - (x.numerator // x.denominator) for x in lam)
        if frac in seen:
            continue
        point = tuple(sum(frac[j] * r[i, j] for j in range(k)) for i in range(f.dim))
        if any(x.denominator != 1 for x in point):
            raise ArithmeticError("internal: non-integral parallelepiped point")
        seen[frac] = tuple(int(x) for x in point)
    return [(p, lam) for lam, p in sorted(seen.items(), key=lambda kv: kv[0])]


def choose_subdivision_point(f: Fan, c: Sequence[int]) -> tuple[int, ...]:
    """Minimal-age primitive point of the fundamental parallelepiped.

    Ties are broken by the lexicographic order of the barycentric
    coordinates.
    """
    best = None
    for point, lam in parallelepiped_points(f, c):
        if not any(point) or not is_primitive(point):
            continue
        key = (sum(lam), lam)
        if best is None or key < best[0]:
            best = (key, point)
    if best is None:
        raise FanError(f"cone {tuple(c)} has no interior lattice point to subdivide at")
    return best[1]


@dataclass(frozen=True)
class ResolutionRecord:
    original: Fan
    resolved: Fan
    exceptional_rays: tuple[int, ...]
    divisor_counts: Mapping[str, int] = field(default_factory=dict)
    steps: tuple[tuple[int, ...], ...] = ()

    def to_json(self) -> dict:
        f = self.resolved
        return {
            "original": self.original.to_json(),
            "resolved": f.to_json(),
            "exceptional_rays": list(self.exceptional_rays),
            "divisor_counts": dict(self.divisor_counts),
            "subdivision_points": [list(s) for s in self.steps],
            "counts": {
                "rays": len(f.rays),
                "maximal_cones": len(f.maximal_cones),
                "exceptional_rays": len(self.exceptional_rays),
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ResolutionRecord":
        return cls(
            Fan.from_json(data["original"]),
            Fan.from_json(data["resolved"]),
            tuple(data["exceptional_rays"]),
            dict(data.get("divisor_counts", {})),
            tuple(tuple(s) for s in data.get("subdivision_points", ())),
        )


def resolve_fan(f: Fan, label: str = "germ", max_steps: int = 10_000) -> ResolutionRecord:
    """Resolve by repeated stellar subdivision of the first singular cone.

    Singular maximal cones are handled in lexicographic order of their
    ray-index tuples.
    """
    if not fan_is_simplicial(f):
        raise NotSimplicialError("resolution needs a simplicial fan")
    current = f
    steps = []
    for _ in range(max_steps):
        bad = next((c for c in sorted(current.maximal_cones) if not is_smooth(current, c)), None)
        if bad is None:
            break
        point = choose_subdivision_point(current, bad)
        log.debug("subdividing cone %s at %s", bad, point)
        steps.append(point)
        current = stellar_subdivision(current, point)
    else:
        raise FanError("resolution did not terminate")
    exceptional = tuple(range(len(f.rays), len(current.rays)))
    return ResolutionRecord(f, current, exceptional, {label: len(exceptional)}, tuple(steps))


def divisor_intersection_cone(f: Fan, ray_indices: Iterable[int]) -> Cone | None:
    """Cone spanned by the given rays if it is in the fan, else ``None``
    (the divisors do not meet)."""
    c = tuple(sorted(set(ray_indices)))
    for i in c:
        if not 0 <= i < len(f.rays):
            raise FanError(f"unknown ray index {i}")
    return c if f.has_cone(c) else None
