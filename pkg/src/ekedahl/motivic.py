"""Classes in L(Ab) and the cohomological maps on motivic expressions.

``L(Ab)`` is the free abelian group on isomorphism classes of finitely
generated abelian groups modulo ``{A + B} = {A} + {B}``; a class is thus an
integer combination of ``{Z}`` and ``{Z/q}`` for prime powers ``q``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Callable, Iterable, Mapping, Sequence

from .fan import Fan, fan_is_simplicial, is_complete, star
from .groups import AbelianGroup, GradedAbelianGroup, prime_power_parts

FREE_KEY = 0  # key of {Z}; a positive key q stands for {Z/q}


def _key_name(key: int) -> str:
    return "Z" if key == FREE_KEY else f"Z/{key}"


def _parse_key(name: str) -> list[int]:
    name = name.strip()
    if name == "Z":
        return [FREE_KEY]
    if not name.startswith("Z/"):
        raise ValueError(f"bad group key {name!r}")
    return prime_power_parts(int(name[2:]))


@dataclass(frozen=True)
class LAbClass:
    coefficients: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[int, int] = {}
        for k, c in self.coefficients.items():
            parts = [FREE_KEY] if k == FREE_KEY else prime_power_parts(k)
            for q in parts:
                clean[q] = clean.get(q, 0) + c
        object.__setattr__(self, "coefficients", {k: c for k, c in sorted(clean.items()) if c})

    @classmethod
    def of_group(cls, g: AbelianGroup) -> "LAbClass":
        coeffs: dict[int, int] = {FREE_KEY: g.free_rank} if g.free_rank else {}
        for t in g.torsion:
            coeffs[t] = coeffs.get(t, 0) + 1
        return cls(coeffs)

    @classmethod
    def zero(cls) -> "LAbClass":
        return cls({})

    @classmethod
    def free(cls, n: int = 1) -> "LAbClass":
        return cls({FREE_KEY: n})

    def __add__(self, other: "LAbClass") -> "LAbClass":
        out = dict(self.coefficients)
        for k, c in other.coefficients.items():
            out[k] = out.get(k, 0) + c
        return LAbClass(out)

    def __neg__(self) -> "LAbClass":
        return LAbClass({k: -c for k, c in self.coefficients.items()})

    def __sub__(self, other: "LAbClass") -> "LAbClass":
        return self + (-other)

    def __mul__(self, n: int) -> "LAbClass":
        return LAbClass({k: n * c for k, c in self.coefficients.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LAbClass):
            return NotImplemented
        return dict(self.coefficients) == dict(other.coefficients)

    def __hash__(self) -> int:
        return hash(tuple(self.coefficients.items()))

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    @property
    def free_rank(self) -> int:
        return self.coefficients.get(FREE_KEY, 0)

    def torsion_part(self) -> "LAbClass":
        return LAbClass({k: c for k, c in self.coefficients.items() if k != FREE_KEY})

    def to_pairs(self) -> list[list]:
        return [[_key_name(k), c] for k, c in self.coefficients.items()]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence]) -> "LAbClass":
        out: dict[int, int] = {}
        for name, c in pairs:
            for q in _parse_key(name):
                out[q] = out.get(q, 0) + int(c)
        return cls(out)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for k, c in self.coefficients.items():
            g = "{" + _key_name(k) + "}"
            parts.append(g if c == 1 else f"{c}*{g}")
        return " + ".join(parts)


def lab_of_degree(g: GradedAbelianGroup, k: int) -> LAbClass:
    return LAbClass.of_group(g[k])


# ---------------------------------------------------------------------
# expressions

@dataclass(frozen=True)
class Atom:
    """A smooth proper variety known only by name and integral cohomology.

    Degrees above ``known_up_to`` (default: everything) are missing data.
    """

    name: str
    cohomology: GradedAbelianGroup
    dim: int
    known_up_to: int | None = None

    def group(self, degree: int) -> AbelianGroup:
        if degree < 0 or degree > 2 * self.dim:
            return AbelianGroup()
        if self.known_up_to is not None and degree > self.known_up_to:
            raise KeyError(f"no cohomology recorded for {self.name} in degree {degree}")
        return self.cohomology[degree]


POINT = Atom("pt", GradedAbelianGroup({0: AbelianGroup(1)}), 0)


def smooth_proper_atom(name: str, cohomology: GradedAbelianGroup, dim: int) -> Atom:
    return Atom(name, cohomology, dim)


@dataclass(frozen=True)
class Term:
    coefficient: int
    atom: Atom
    l_power: int = 0


@dataclass(frozen=True)
class MotivicExpression:
    terms: tuple[Term, ...] = ()

    def __post_init__(self):
        merged: dict[tuple[Atom, int], int] = {}
        for t in self.terms:
            key = (t.atom, t.l_power)
            merged[key] = merged.get(key, 0) + t.coefficient
        terms = tuple(
            Term(c, a, l)
            for (a, l), c in sorted(merged.items(), key=lambda kv: (kv[0][0].name, kv[0][1]))
            if c
        )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def atom(cls, a: Atom, coefficient: int = 1, l_power: int = 0) -> "MotivicExpression":
        return cls((Term(coefficient, a, l_power),))

    @classmethod
    def polynomial_in_l(cls, coefficients: Sequence[int]) -> "MotivicExpression":
        """``sum c_j L^j`` on the point."""
        return cls(tuple(Term(c, POINT, j) for j, c in enumerate(coefficients) if c))

    def __add__(self, other: "MotivicExpression") -> "MotivicExpression":
        return MotivicExpression(self.terms + other.terms)

    def __neg__(self) -> "MotivicExpression":
        return MotivicExpression(tuple(Term(-t.coefficient, t.atom, t.l_power) for t in self.terms))

    def __sub__(self, other: "MotivicExpression") -> "MotivicExpression":
        return self + (-other)

    def __mul__(self, n: int) -> "MotivicExpression":
        return MotivicExpression(tuple(Term(n * t.coefficient, t.atom, t.l_power) for t in self.terms))

    __rmul__ = __mul__

    def times_l(self, power: int = 1) -> "MotivicExpression":
        return MotivicExpression(tuple(Term(t.coefficient, t.atom, t.l_power + power) for t in self.terms))

    def l_polynomial(self) -> dict[int, int]:
        """Coefficients in ``L`` when every atom is the point."""
        if any(t.atom != POINT for t in self.terms):
            raise ValueError("expression involves atoms other than the point")
        out: dict[int, int] = {}
        for t in self.terms:
            out[t.l_power] = out.get(t.l_power, 0) + t.coefficient
        return {k: v for k, v in sorted(out.items()) if v}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for t in self.terms:
            a = "" if t.atom == POINT else "{" + t.atom.name + "}"
            l = "" if t.l_power == 0 else ("L" if t.l_power == 1 else f"L^{t.l_power}")
            body = "*".join(x for x in (a, l) if x) or "1"
            bits.append(body if t.coefficient == 1 else f"{t.coefficient}*{body}")
        return " + ".join(bits)


def h_map(e: MotivicExpression, k: int) -> LAbClass:
    """``H^k`` extended linearly; ``{X} L^j`` contributes ``{H^(k - 2j)(X)}``."""
    out = LAbClass.zero()
    for t in e.terms:
        out = out + LAbClass.of_group(t.atom.group(k - 2 * t.l_power)) * t.coefficient
    return out


def toric_class(f: Fan) -> MotivicExpression:
    """Orbit decomposition: ``sum_sigma (L - 1)^(n - dim sigma)``."""
    if not fan_is_simplicial(f):
        raise ValueError("toric_class needs a simplicial fan")
    coeffs = [0] * (f.dim + 1)
    for c in f.cones:
        m = f.dim - len(c)
        for j in range(m + 1):
            coeffs[j] += comb(m, j) * (-1) ** (m - j)
    return MotivicExpression.polynomial_in_l(coeffs)


def tree_exceptional_class(m: int) -> MotivicExpression:
    """``m`` projective lines glued along ``m - 1`` points: ``m L + 1``."""
    if m < 1:
        raise ValueError("need at least one component")
    return MotivicExpression.polynomial_in_l([1, m])


# ---------------------------------------------------------------------
# virtual Poincare polynomials (as degree -> coefficient maps in t)

Poly = dict[int, int]


def _padd(a: Poly, b: Poly, s: int = 1) -> Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + s * v
    return {k: v for k, v in out.items() if v}


def orbit_poincare(f: Fan, cones) -> Poly:
    """``sum (t^2 - 1)^(n - dim sigma)`` over the given cones."""
    out: Poly = {}
    for c in cones:
        m = f.dim - len(c)
        out = _padd(out, {2 * j: comb(m, j) * (-1) ** (m - j) for j in range(m + 1)})
    return out


def projective_poincare(d: int) -> Poly:
    return {2 * j: 1 for j in range(d + 1)}


@dataclass(frozen=True)
class GermBetti:
    """Betti numbers of every nonempty intersection of exceptional divisors."""

    strata: Mapping[tuple[int, ...], Poly]
    exceptional_orbits: Poly  # virtual Poincare polynomial of the whole exceptional fibre


def germ_betti(resolved: Fan, exceptional: Sequence[int]) -> GermBetti:
    from .cohomology import betti_numbers

    strata: dict[tuple[int, ...], Poly] = {}
    for q in range(1, resolved.dim + 1):
        found = False
        for c in combinations(sorted(exceptional), q):
            if resolved.has_cone(c):
                found = True
                s = star(resolved, c).fan
                if not is_complete(s):
                    raise ValueError(f"intersection {c} is not compact")
                strata[c] = {k: g.free_rank for k, g in betti_numbers(s).pieces.items()}
        if not found:
            break
    exc = set(exceptional)
    fibre = orbit_poincare(resolved, [c for c in resolved.cones if exc & set(c)])
    return GermBetti(strata, fibre)


@dataclass(frozen=True)
class IdentityCheck:
    holds: bool
    residuals: Mapping[int, int]  # degree -> residual (0 when the identity holds)

    def failing(self) -> list[int]:
        return [k for k, r in self.residuals.items() if r]


def resolution_poincare(d: int, germs: Sequence[GermBetti]) -> Poly:
    """``p_X = p_(P^d) + sum_y (p_(D_y) - 1)`` from orbit counts."""
    out = projective_poincare(d)
    for g in germs:
        out = _padd(out, _padd(g.exceptional_orbits, {0: 1}, -1))
    return out


def poincare_identity_check(d: int, betti_x: Mapping[int, int], germs: Sequence[GermBetti]) -> IdentityCheck:
    """Free parts of ``{X} - sum_y({D_y} - {y})`` against ``P^d``, degree by degree.

    ``d`` is the complex dimension of ``X``.  At ``k = 0`` every stratum
    contributes ``beta^0 - 1``.  Odd degrees must have ``beta = 0``.
    """
    residuals: dict[int, int] = {}
    for k in range(0, 2 * d + 1):
        if k % 2:
            residuals[k] = betti_x.get(k, 0)
            continue
        rhs = betti_x.get(k, 0)
        for g in germs:
            for c, poly in g.strata.items():
                sign = (-1) ** (len(c) + 1)
                b = poly.get(k, 0)
                rhs -= sign * (b - 1 if k == 0 else b)
        residuals[k] = rhs - 1
    return IdentityCheck(all(r == 0 for r in residuals.values()), residuals)


def exceptional_fibre_expression(name: str, germ: GermBetti, dims: Mapping[tuple[int, ...], int]) -> MotivicExpression:
    """``{D_y}`` by inclusion–exclusion over its smooth toric strata."""
    out = MotivicExpression()
    for c, poly in germ.strata.items():
        g = GradedAbelianGroup.free_from_ranks(poly)
        a = smooth_proper_atom(f"{name}:D{'.'.join(map(str, c))}", g, dims[c])
        out = out + MotivicExpression.atom(a, (-1) ** (len(c) + 1))
    return out


# ---------------------------------------------------------------------
# the sliding-window system for Ekedahl invariants

@dataclass
class EkedahlReport:
    group: str
    invariants: dict[int, LAbClass]
    notes: list[str] = field(default_factory=list)
    contradictions: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.contradictions

    def is_trivial(self) -> bool:
        return self.consistent and all(
            v == (LAbClass.free() if i == 0 else LAbClass.zero()) for i, v in self.invariants.items()
        ) and self.invariants.get(0) == LAbClass.free()

    def to_json(self) -> dict:
        out = {
            "group": self.group,
            "invariants": {str(i): v.to_pairs() for i, v in sorted(self.invariants.items())},
            "notes": list(self.notes),
        }
        if self.contradictions:
            out["contradictions"] = list(self.contradictions)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, data: Mapping) -> "EkedahlReport":
        return cls(
            str(data["group"]),
            {int(k): LAbClass.from_pairs(v) for k, v in data["invariants"].items()},
            list(data.get("notes", [])),
            list(data.get("contradictions", [])),
        )


def window_sum(e: Mapping[int, LAbClass], k: int, n: int) -> LAbClass:
    """``e_k + e_(k+2) + ... + e_(k+2(n-1))``."""
    out = LAbClass.zero()
    for t in range(n):
        out = out + e.get(k + 2 * t, LAbClass.zero())
    return out


def window_range(n: int, bound: int) -> range:
    return range(-2 * (n - 1), bound + 1)


def compose_windows(e: Mapping[int, LAbClass], n: int, bound: int) -> dict[int, LAbClass]:
    return {k: window_sum(e, k, n) for k in window_range(n, bound)}


def ekedahl_solve(
    rhs: Mapping[int, LAbClass] | Callable[[int], LAbClass],
    n: int,
    bound: int,
    group: str = "G",
    expect_e0: bool = True,
) -> EkedahlReport:
    """Solve ``sum_t e_(k+2t) = rhs(k)`` with ``e_i = 0`` outside ``[0, bound]``.

    Each ``e_j`` is read off the window starting at ``j - 2(n-1)``, whose
    other entries are already known; every window in range is then checked.
    """
    if n < 1:
        raise ValueError("n must be positive")
    get = rhs if callable(rhs) else (lambda k: rhs.get(k, LAbClass.zero()))
    e: dict[int, LAbClass] = {}
    for j in range(0, bound + 1):
        k = j - 2 * (n - 1)
        e[j] = get(k) - window_sum(e, k, n - 1)  # the last slot is e_j itself
    report = EkedahlReport(group, dict(e))
    # windows past the bound must vanish; check any the caller supplied
    ks = set(window_range(n, bound)) | (set() if callable(rhs) else set(rhs))
    for k in sorted(ks):
        lhs = window_sum(e, k, n)
        if lhs != get(k):
            report.contradictions.append(f"window k={k}: sum of e gives {lhs}, expected {get(k)}")
    if expect_e0 and e.get(0, LAbClass.zero()) != LAbClass.free():
        report.contradictions.append(f"e_0 = {e.get(0)} instead of {{Z}}")
    return report
