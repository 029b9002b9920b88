"""The Heisenberg group of order p^3 and its action on P^(p-1).

All linear algebra is exact: the representation is monomial, so every
matrix is a permutation with root-of-unity scalars ``zeta^e`` stored as
exponents ``e`` mod ``p``, and every fixed point we meet is a vector whose
coordinates are roots of unity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

from sympy import isprime

from .fan import CyclicQuotientType


def _require_odd_prime(p: int) -> None:
    if p < 3 or not isprime(p):
        raise ValueError(f"p={p} is not an odd prime")


@dataclass(frozen=True)
class HeisenbergElement:
    """Upper unitriangular matrix ``[[1, a, b], [0, 1, c], [0, 0, 1]]`` over F_p."""

    a: int
    b: int
    c: int
    p: int

    def __post_init__(self):
        for name in "abc":
            object.__setattr__(self, name, getattr(self, name) % self.p)

    def __mul__(self, o: "HeisenbergElement") -> "HeisenbergElement":
        return HeisenbergElement(self.a + o.a, self.b + o.b + self.a * o.c, self.c + o.c, self.p)

    def __pow__(self, n: int) -> "HeisenbergElement":
        out = HeisenbergElement(0, 0, 0, self.p)
        for _ in range(n % (self.p**3)):
            out = out * self
        return out

    @property
    def is_identity(self) -> bool:
        return self.a == self.b == self.c == 0

    def image_in_quotient(self) -> tuple[int, int]:
        """Class in ``A_p = H_p / centre``."""
        return (self.a, self.c)


def generators(p: int) -> dict[str, HeisenbergElement]:
    return {
        "X": HeisenbergElement(1, 0, 0, p),
        "Y": HeisenbergElement(0, 0, 1, p),
        "Z": HeisenbergElement(0, 1, 0, p),
    }


@dataclass(frozen=True)
class MonomialMatrix:
    """``e_j -> zeta^exponents[j] * e_perm[j]``."""

    perm: tuple[int, ...]
    exponents: tuple[int, ...]
    p: int

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError("not a permutation")
        object.__setattr__(self, "exponents", tuple(e % self.p for e in self.exponents))

    @classmethod
    def identity(cls, n: int, p: int) -> "MonomialMatrix":
        return cls(tuple(range(n)), (0,) * n, p)

    @property
    def size(self) -> int:
        return len(self.perm)

    def __matmul__(self, o: "MonomialMatrix") -> "MonomialMatrix":
        # (self o o) e_j = zeta^(o_j + self_{o(j)}) e_{self(o(j))}
        n = self.size
        perm = tuple(self.perm[o.perm[j]] for j in range(n))
        exps = tuple(o.exponents[j] + self.exponents[o.perm[j]] for j in range(n))
        return MonomialMatrix(perm, exps, self.p)

    def __pow__(self, n: int) -> "MonomialMatrix":
        out = MonomialMatrix.identity(self.size, self.p)
        for _ in range(n):
            out = out @ self
        return out

    def scalar(self) -> int | None:
        """Exponent ``s`` if this is ``zeta^s * Id``."""
        if self.perm != tuple(range(self.size)) or len(set(self.exponents)) != 1:
            return None
        return self.exponents[0]

    def apply(self, v: "RootVector") -> "RootVector":
        coords = [None] * self.size
        for j, e in enumerate(v.coords):
            if e is not None:
                coords[self.perm[j]] = e + self.exponents[j]
        return RootVector(tuple(coords), self.p)

    def dense(self) -> list[list[int | None]]:
        """Exponent matrix, ``None`` for zero entries (for display)."""
        out: list[list[int | None]] = [[None] * self.size for _ in range(self.size)]
        for j in range(self.size):
            out[self.perm[j]][j] = self.exponents[j]
        return out


@dataclass(frozen=True)
class RootVector:
    """Vector whose entries are ``zeta^e`` or zero (``None``)."""

    coords: tuple[int | None, ...]
    p: int

    def __post_init__(self):
        object.__setattr__(
            self, "coords", tuple(None if e is None else e % self.p for e in self.coords)
        )

    def normalized(self) -> "RootVector":
        """Scale so the first nonzero entry is 1 (points of projective space)."""
        first = next(e for e in self.coords if e is not None)
        return RootVector(tuple(None if e is None else e - first for e in self.coords), self.p)

    def proportional_factor(self, other: "RootVector") -> int | None:
        """``s`` with ``other = zeta^s self``, if any."""
        if [e is None for e in self.coords] != [e is None for e in other.coords]:
            return None
        diffs = {(o - s) % self.p for s, o in zip(self.coords, other.coords) if s is not None}
        return diffs.pop() if len(diffs) == 1 else None


# ---------------------------------------------------------------------
# the representation

@lru_cache(maxsize=None)
def build_representation(p: int) -> dict[str, MonomialMatrix]:
    """Faithful ``p``-dimensional irreducible with ``Z -> zeta * Id``."""
    _require_odd_prime(p)
    shift = MonomialMatrix(tuple((j - 1) % p for j in range(p)), (0,) * p, p)
    diag = MonomialMatrix(tuple(range(p)), tuple(range(p)), p)
    centre = MonomialMatrix(tuple(range(p)), (1,) * p, p)
    return {"X": shift, "Y": diag, "Z": centre}


def represent(g: HeisenbergElement) -> MonomialMatrix:
    """``M(a, b, c) = Z^(b - ac) X^a Y^c``."""
    rep = build_representation(g.p)
    return (rep["Z"] ** ((g.b - g.a * g.c) % g.p)) @ (rep["X"] ** g.a) @ (rep["Y"] ** g.c)


def quotient_lift(p: int, u: int, v: int) -> MonomialMatrix:
    """Image of ``X^u Y^v``: a lift of ``(u, v)`` in ``A_p``."""
    rep = build_representation(p)
    return (rep["X"] ** (u % p)) @ (rep["Y"] ** (v % p))


def eigenvectors(m: MonomialMatrix) -> list[tuple[int, RootVector]]:
    """Eigenlines of a non-scalar ``X^u Y^v`` as ``(weight, vector)``.

    The matrix must move every coordinate along a single ``p``-cycle or be
    diagonal with distinct entries, which covers every non-central element.
    """
    p, n = m.p, m.size
    if m.perm == tuple(range(n)):
        if len(set(m.exponents)) != n:
            raise ValueError("repeated eigenvalue")
        return [
            (m.exponents[j], RootVector(tuple(0 if i == j else None for i in range(n)), p))
            for j in range(n)
        ]
    # single cycle: f(perm(j)) = f(j) + exp_j - chi
    cycle = [0]
    while len(cycle) < n:
        cycle.append(m.perm[cycle[-1]])
    if len(set(cycle)) != n:
        raise ValueError("permutation is not a single cycle")
    total = sum(m.exponents)
    out = []
    for chi in range(p):
        if (total - n * chi) % p:
            continue
        f = [None] * n
        f[0] = 0
        for j in cycle[:-1]:
            f[m.perm[j]] = f[j] + m.exponents[j] - chi
        out.append((chi, RootVector(tuple(f), p)))
    return out


# ---------------------------------------------------------------------
# subgroups, fixed points, local types

@dataclass(frozen=True)
class Subgroup:
    """Order-``p`` subgroup of ``A_p``: the line through ``generator``."""

    generator: tuple[int, int]  # lexicographically smallest generator of the line
    p: int

    @property
    def elements(self) -> list[tuple[int, int]]:
        u, v = self.generator
        return [((s * u) % self.p, (s * v) % self.p) for s in range(self.p)]

    @property
    def label(self) -> str:
        return f"B<{self.generator[0]},{self.generator[1]}>"

    def lift(self) -> MonomialMatrix:
        return quotient_lift(self.p, *self.generator)


def order_p_subgroups(p: int) -> list[Subgroup]:
    _require_odd_prime(p)
    seen, out = set(), []
    for u in range(p):
        for v in range(p):
            if (u, v) == (0, 0):
                continue
            line = frozenset(((s * u) % p, (s * v) % p) for s in range(p))
            if line in seen:
                continue
            seen.add(line)
            gen = min(x for x in line if x != (0, 0))
            out.append(Subgroup(gen, p))
    return sorted(out, key=lambda b: b.generator)


@dataclass(frozen=True)
class FixedPointRecord:
    weight: int  # eigenvalue exponent of the lifted generator on the fixed line
    point: RootVector
    subgroup: Subgroup
    stabilizer: tuple[tuple[int, int], ...]
    tangent_weights: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "weight": self.weight,
            "point": [e for e in self.point.coords],
            "subgroup": self.subgroup.label,
            "stabilizer_order": len(self.stabilizer),
            "tangent_weights": list(self.tangent_weights),
        }


def stabilizer(point: RootVector, p: int) -> tuple[tuple[int, int], ...]:
    """Elements of ``A_p`` fixing the point of ``P^(p-1)``."""
    return tuple(
        (u, v)
        for u in range(p)
        for v in range(p)
        if point.proportional_factor(quotient_lift(p, u, v).apply(point)) is not None
    )


def fixed_points(b: Subgroup) -> list[FixedPointRecord]:
    p = b.p
    vecs = eigenvectors(b.lift())
    out = []
    for chi, v in vecs:
        weights = tuple(sorted((chi2 - chi) % p for chi2, _ in vecs if chi2 != chi))
        out.append(FixedPointRecord(chi, v.normalized(), b, stabilizer(v, p), weights))
    return out


@dataclass(frozen=True)
class LocalType:
    raw_weights: tuple[int, ...]
    normalized_weights: tuple[int, ...]
    quotient_type: CyclicQuotientType
    pseudo_reflections: int

    def to_json(self) -> dict:
        return {
            "raw_weights": list(self.raw_weights),
            "normalized_weights": list(self.normalized_weights),
            "type": str(self.quotient_type),
            "pseudo_reflections": self.pseudo_reflections,
        }


def local_type(r: FixedPointRecord) -> LocalType:
    p = r.subgroup.p
    raw = tuple(sorted(r.tangent_weights))
    first = min(w for w in raw if w)
    inv = pow(first, -1, p)
    norm = tuple(sorted((w * inv) % p for w in raw))
    # s-th power of the generator acts with weights s*w; a pseudo-reflection
    # has all but one weight trivial
    pseudo = sum(
        1 for s in range(1, p) if sum(1 for w in raw if (s * w) % p == 0) == len(raw) - 1
    )
    return LocalType(raw, norm, CyclicQuotientType(p, norm), pseudo)


@dataclass(frozen=True)
class SingularPoint:
    subgroup: Subgroup
    orbit: tuple[FixedPointRecord, ...]
    local: LocalType

    def to_json(self) -> dict:
        return {
            "subgroup": self.subgroup.label,
            "orbit_size": len(self.orbit),
            "type": str(self.local.quotient_type),
            "local": self.local.to_json(),
            "points": [r.to_json() for r in self.orbit],
        }


def orbit(point: RootVector, p: int) -> list[RootVector]:
    seen: list[RootVector] = []
    for u in range(p):
        for v in range(p):
            w = quotient_lift(p, u, v).apply(point).normalized()
            if w not in seen:
                seen.append(w)
    return seen


def singular_locus(p: int) -> list[SingularPoint]:
    """One point of ``P^(p-1)/A_p`` per order-``p`` subgroup."""
    out = []
    for b in order_p_subgroups(p):
        recs = fixed_points(b)
        orb = orbit(recs[0].point, p)
        if sorted(map(_key, orb)) != sorted(_key(r.point) for r in recs):
            raise ArithmeticError(f"{b.label}: fixed points do not form one orbit")
        out.append(SingularPoint(b, tuple(recs), local_type(recs[0])))
    return out


def _key(v: RootVector) -> tuple:
    return tuple(-1 if e is None else e for e in v.coords)


def singular_locus_json(p: int) -> str:
    return json.dumps(
        {"p": p, "singular_points": [s.to_json() for s in singular_locus(p)]}, indent=2, sort_keys=True
    )


def brute_force_stabilizers(p: int) -> dict[tuple, int]:
    """Every eigenline of every non-identity element of ``A_p``, with the
    order of its stabilizer, found without using the subgroup list."""
    found: dict[tuple, int] = {}
    for u in range(p):
        for v in range(p):
            if (u, v) == (0, 0):
                continue
            for _, vec in eigenvectors(quotient_lift(p, u, v)):
                key = _key(vec.normalized())
                if key not in found:
                    found[key] = len(stabilizer(vec, p))
    return found


def common_eigenlines(p: int) -> list[RootVector]:
    """Lines fixed by both X and Y (empty for an irreducible representation)."""
    rep = build_representation(p)
    out = []
    for _, v in eigenvectors(rep["Y"]):
        if v.proportional_factor(rep["X"].apply(v)) is not None:
            out.append(v)
    return out


# ---------------------------------------------------------------------
# Ekedahl invariants of H_p

# Facts valid for every finite group (e_0, e_1) and for H_p (e_2 is dual to
# the Bogomolov multiplier, which vanishes for H_p).
LOW_INVARIANT_FACTS = {0: "Z", 1: "0", 2: "0"}
VALIDATED_PRIMES = (5,)


def _low_window_torsion(d: int) -> dict:
    """Torsion of ``H^(2d - i)`` for ``i = 0, 1, 2``: those windows contain
    no invariant beyond ``e_2``."""
    from .groups import AbelianGroup
    from .motivic import LAbClass

    facts = {i: LAbClass.free() if v == "Z" else LAbClass.zero() for i, v in LOW_INVARIANT_FACTS.items()}
    out = {}
    for i in range(3):
        total = sum((facts[j] for j in range(i % 2, i + 1, 2)), LAbClass.zero())
        tor = total.torsion_part()
        if any(c < 0 for c in tor.coefficients.values()):
            raise ArithmeticError("negative torsion class")
        out[2 * d - i] = AbelianGroup(0, tuple(q for q, c in tor.coefficients.items() for _ in range(c)))
    return out


def resolution_torsion(p: int, resolutions=None, notes: list[str] | None = None) -> dict:
    """Torsion of ``H^k`` of the resolved quotient ``P^(p-1)/A_p``, every ``k``.

    ``resolutions`` maps a type label to ``(ResolutionRecord, copies)``; by
    default the singular locus is computed and resolved here.
    """
    from .fan import quotient_cone, resolve_fan
    from .groups import ZERO
    from .spectral import IndeterminateError, cartan_leray_open, supported_cohomology_of_exceptional_locus

    _require_odd_prime(p)
    d = p - 1
    notes = [] if notes is None else notes
    if resolutions is None:
        resolutions = {}
        for s in singular_locus(p):
            t = str(s.local.quotient_type)
            if t in resolutions:
                resolutions[t] = (resolutions[t][0], resolutions[t][1] + 1)
            else:
                resolutions[t] = (resolve_fan(quotient_cone(s.local.quotient_type), label=t), 1)
    torsion: dict = {k: None for k in range(2 * d + 1)}
    torsion[0] = torsion[1] = ZERO
    torsion.update(_low_window_torsion(d))
    for k in range(3, 2 * d - 2, 2):
        supported = ZERO
        for t, (res, copies) in resolutions.items():
            rep = supported_cohomology_of_exceptional_locus(res, k, copies)
            if rep.status != "determined":
                raise IndeterminateError(f"H^{k} supported on E: {rep.status}; {'; '.join(rep.notes)}")
            supported = supported + rep.group
        open_part = cartan_leray_open(p, k)
        if supported.is_zero and open_part.is_zero:
            torsion[k] = ZERO
            notes.append(f"H^{k}(X) = 0: squeezed between H^{k}_E(X) = 0 and H^{k}(U) = 0")
    # Poincare duality on torsion: tor H^k = tor H^(2d + 1 - k)
    for k in range(2 * d + 1):
        dual = 2 * d + 1 - k
        if torsion[k] is None and 0 <= dual <= 2 * d and torsion[dual] is not None:
            torsion[k] = torsion[dual]
    missing = [k for k, v in torsion.items() if v is None]
    if missing:
        raise IndeterminateError(f"torsion of H^k(X) undetermined for k in {missing}")
    return torsion


def ekedahl_report(p: int = 5):
    from .fan import quotient_cone, resolve_fan
    from .groups import AbelianGroup, GradedAbelianGroup
    from .motivic import (
        POINT,
        MotivicExpression,
        exceptional_fibre_expression,
        ekedahl_solve,
        germ_betti,
        h_map,
        poincare_identity_check,
        resolution_poincare,
        smooth_proper_atom,
    )

    _require_odd_prime(p)
    n, d = p, p - 1
    notes: list[str] = []
    if p not in VALIDATED_PRIMES:
        notes.append(f"exploratory run: p={p} is outside the validated set {VALIDATED_PRIMES}")

    points = singular_locus(p)
    by_type: dict[str, list[SingularPoint]] = {}
    for s in points:
        by_type.setdefault(str(s.local.quotient_type), []).append(s)
    notes.append(f"{len(points)} singular points: " + ", ".join(f"{len(v)} x {k}" for k, v in by_type.items()))

    germs, resolutions = [], {}
    for t, pts in by_type.items():
        res = resolve_fan(quotient_cone(pts[0].local.quotient_type), label=t)
        resolutions[t] = (res, len(pts))
        g = germ_betti(res.resolved, res.exceptional_rays)
        germs += [(t, g, res)] * len(pts)
        notes.append(
            f"{t}: resolution with {len(res.resolved.rays)} rays, "
            f"{len(res.resolved.maximal_cones)} maximal cones, {len(res.exceptional_rays)} exceptional divisors"
        )

    poincare = resolution_poincare(d, [g for _, g, _ in germs])
    check = poincare_identity_check(d, poincare, [g for _, g, _ in germs])
    if not check.holds:
        raise ArithmeticError(f"Betti identities fail in degrees {check.failing()}")

    torsion = resolution_torsion(p, resolutions, notes)
    x_groups = GradedAbelianGroup(
        {k: AbelianGroup(poincare.get(k, 0), torsion[k].torsion) for k in range(2 * d + 1)}
    )
    x = smooth_proper_atom("X", x_groups, d)
    expr = MotivicExpression.atom(x)
    for idx, (t, g, res) in enumerate(germs):
        dims = {c: d - len(c) for c in g.strata}
        expr = expr - exceptional_fibre_expression(f"y{idx}", g, dims) + MotivicExpression.atom(POINT)

    report = ekedahl_solve(lambda k: h_map(expr, -k), n, bound=2 * d - 2, group=f"H_{p}")
    report.notes = notes + report.notes
    for i in sorted(report.invariants):
        k = i - 2 * (n - 1)
        report.notes.append(f"e_{i} solved from the window starting at k={k} (H^{-k} of the quotient class)")
    for i, fact in LOW_INVARIANT_FACTS.items():
        expected = "{Z}" if fact == "Z" else "0"
        got = str(report.invariants.get(i))
        if got != expected:
            report.contradictions.append(f"e_{i} = {got} disagrees with the known value {expected}")
    return report
