"""Page-by-page integer spectral sequences.

Two concrete sequences are assembled here:

* the second-quadrant sequence of a resolved germ, with
  ``E_1^{-k,i}`` the sum over ``k``-fold intersections of exceptional
  divisors of ``H^i`` supported on them, converging to cohomology supported
  on the exceptional locus with a shift by one;
* the Cartan–Leray sequence of the free ``(Z/p)^2`` quotient of projective
  space minus its fixed points.

Entries may be *unknown* (``None``).  Nothing is ever assumed to degenerate:
``certify`` walks every later differential touching a position and reports
``indeterminate`` unless all of them are forced to vanish.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from sympy import isprime

from .cohomology import (
    GroupCohomologyRing,
    IntegerLinearMap,
    StarCohomology,
    gysin_pushforward_matrix,
    label,
    multiplication_by_y,
)
from .fan import Cone, Fan, FanError, ResolutionRecord, fan_is_smooth, is_complete
from .groups import ZERO, AbelianGroup, PresentedGroup, subquotient
from .lattice import IntMatrix, matrix_to_csv

Position = tuple[int, int]

# d_3(h) = D3_UNIT * y; any unit mod p gives isomorphic pages.
D3_UNIT = 1


class IndeterminateError(ArithmeticError):
    """A later differential could be nonzero, so the answer is not forced."""


@dataclass(frozen=True)
class Entry:
    group: AbelianGroup | None  # None: not known
    presentation: PresentedGroup | None = None
    labels: tuple[str, ...] = ()

    @property
    def known(self) -> bool:
        return self.group is not None

    @property
    def is_zero(self) -> bool:
        return self.group is not None and self.group.is_zero

    @classmethod
    def free(cls, labels: Sequence[str]) -> "Entry":
        return cls(AbelianGroup.free(len(labels)), PresentedGroup.free(len(labels)), tuple(labels))


UNKNOWN = Entry(None)
ZERO_ENTRY = Entry(ZERO, PresentedGroup.free(0))


@dataclass(frozen=True)
class SpectralPage:
    """Page ``E_r``; ``d_r`` has bidegree ``(r, 1 - r)``.

    Positions missing from ``entries`` are zero, except in
    ``unknown_rows`` where non-negative columns are unknown.
    """

    r: int
    entries: Mapping[Position, Entry]
    differentials: Mapping[Position, IntegerLinearMap] = field(default_factory=dict)
    unknown_rows: frozenset[int] = frozenset()

    def entry(self, pos: Position) -> Entry:
        if pos in self.entries:
            return self.entries[pos]
        if pos[1] in self.unknown_rows and pos[0] >= 0:
            return UNKNOWN
        return ZERO_ENTRY

    def target(self, pos: Position) -> Position:
        return (pos[0] + self.r, pos[1] - self.r + 1)

    def source(self, pos: Position) -> Position:
        return (pos[0] - self.r, pos[1] + self.r - 1)

    def differential_state(self, pos: Position) -> str:
        """``zero``, ``explicit`` or ``unknown`` for ``d_r`` leaving ``pos``."""
        a, b = self.entry(pos), self.entry(self.target(pos))
        if a.is_zero or b.is_zero:
            return "zero"
        if pos in self.differentials:
            return "explicit"
        return "unknown"

    def nonzero_positions(self) -> list[Position]:
        return sorted(p for p, e in self.entries.items() if not e.is_zero)

    def check_complex(self) -> None:
        """``d_r o d_r = 0`` wherever two explicit maps compose."""
        for pos, d in self.differentials.items():
            nxt = self.differentials.get(self.target(pos))
            if nxt is None:
                continue
            comp = nxt.matrix @ d.matrix
            rel = self.entry(self.target(self.target(pos))).presentation
            if comp.is_zero():
                continue
            if rel is None or not _in_column_span(comp, rel.relations):
                raise ArithmeticError(f"d_{self.r} o d_{self.r} != 0 at {pos}")

    def to_json(self, csv_prefix: str | None = None) -> dict:
        out = {"page": self.r, "entries": [], "differentials": []}
        for pos in sorted(self.entries):
            e = self.entries[pos]
            item = {"position": list(pos)}
            if e.known:
                item.update(e.group.to_json())
            else:
                item["status"] = "unknown"
            out["entries"].append(item)
        for pos in sorted(self.differentials):
            d = self.differentials[pos]
            item = {"source": list(pos), "target": list(self.target(pos)), "shape": list(d.shape)}
            if csv_prefix is not None:
                item["csv"] = f"{csv_prefix}_{pos[0]}_{pos[1]}.csv"
            out["differentials"].append(item)
        return out

    def dumps(self, csv_prefix: str | None = None) -> str:
        return json.dumps(self.to_json(csv_prefix), indent=2, sort_keys=True)

    def differential_csv(self, pos: Position) -> str:
        d = self.differentials[pos]
        return matrix_to_csv(d.matrix, header=d.domain)


def _in_column_span(m: IntMatrix, rel: IntMatrix) -> bool:
    from .lattice import solve_integer

    return all(not any(c) or solve_integer(rel, c) is not None for c in m.columns())


def turn_page(page: SpectralPage) -> SpectralPage:
    """``E_{r+1}`` from ``E_r``: homology at every position whose in/out
    differentials are known.  The new page carries no differentials."""
    page.check_complex()
    new: dict[Position, Entry] = {}
    for pos, e in page.entries.items():
        if e.is_zero:
            new[pos] = e
            continue
        src = page.source(pos)
        s_in, s_out = page.differential_state(src), page.differential_state(pos)
        if s_in == "zero" and s_out == "zero":
            new[pos] = e
            continue
        if "unknown" in (s_in, s_out) or e.presentation is None:
            new[pos] = UNKNOWN
            continue
        incoming = page.differentials[src].matrix if s_in == "explicit" else None
        outgoing = page.differentials[pos].matrix if s_out == "explicit" else None
        target_pres = page.entry(page.target(pos)).presentation if outgoing is not None else None
        g = subquotient(e.presentation, incoming, outgoing, target_pres)
        new[pos] = Entry(g) if not g.is_zero else ZERO_ENTRY
    return SpectralPage(page.r + 1, new, {}, page.unknown_rows)


# ---------------------------------------------------------------------
# convergence

@dataclass(frozen=True)
class Certificate:
    position: Position
    group: AbelianGroup | None
    reason: str


@dataclass(frozen=True)
class ConvergenceReport:
    degree: int
    status: str  # "determined", "indeterminate" or "extension"
    group: AbelianGroup | None
    graded: tuple[Certificate, ...] = ()
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "status": self.status,
            "group": None if self.group is None else self.group.to_json(),
            "graded": [
                {
                    "position": list(c.position),
                    "group": None if c.group is None else c.group.to_json(),
                    "reason": c.reason,
                }
                for c in self.graded
            ],
            "notes": list(self.notes),
        }


def _later_partners(pos: Position, r0: int, r_max: int) -> Iterable[tuple[int, Position, Position]]:
    for r in range(r0, r_max + 1):
        yield r, (pos[0] - r, pos[1] + r - 1), (pos[0] + r, pos[1] - r + 1)


def _certify_position(
    page: SpectralPage,
    pos: Position,
    r_max: int,
    free_source: SpectralPage | None = None,
) -> Certificate:
    e = page.entry(pos)
    if e.is_zero:
        return Certificate(pos, ZERO, f"zero at E_{page.r}")
    if e.known:
        bad = [
            (r, q)
            for r, src, tgt in _later_partners(pos, page.r, r_max)
            for q in (src, tgt)
            if not page.entry(q).is_zero
        ]
        if not bad:
            return Certificate(pos, e.group, f"all d_r (r >= {page.r}) in and out vanish")
        r, q = bad[0]
        return Certificate(pos, None, f"d_{r} between {pos} and {q} not forced to vanish")
    if free_source is not None:
        c = _free_source(free_source, pos, r_max)
        if c is not None:
            return c
    return Certificate(pos, None, f"entry unknown at E_{page.r}")


def _free_source(early: SpectralPage, pos: Position, r_max: int) -> Certificate | None:
    """A free entry that receives nothing and only maps to finite groups
    keeps its rank: the surviving subgroup has finite index."""
    e = early.entry(pos)
    if not e.known or e.group.torsion:
        return None
    for _, src, tgt in _later_partners(pos, early.r, r_max):
        if not early.entry(src).is_zero:
            return None
        t = early.entry(tgt)
        if not t.known or not t.group.is_finite:
            return None
    return Certificate(pos, e.group, f"free at E_{early.r}, no incoming, finite targets")


def assemble(degree: int, certs: Sequence[Certificate]) -> ConvergenceReport:
    """Rebuild a group from its graded pieces when no extension is possible.

    The filtration is by columns; the rightmost column is the subgroup.
    """
    if any(c.group is None for c in certs):
        notes = tuple(c.reason for c in certs if c.group is None)
        return ConvergenceReport(degree, "indeterminate", None, tuple(certs), notes)
    pieces = sorted((c for c in certs if not c.group.is_zero), key=lambda c: -c.position[0])
    total = sum((c.group for c in pieces), ZERO)
    # successive quotients above the bottom piece must be free to split
    if all(not c.group.torsion for c in pieces[1:]):
        return ConvergenceReport(degree, "determined", total, tuple(certs))
    return ConvergenceReport(
        degree, "extension", None, tuple(certs), ("graded pieces do not determine the extension",)
    )


# ---------------------------------------------------------------------
# the second-quadrant sequence of a resolved germ

@dataclass(frozen=True)
class GermData:
    """Intersections of exceptional divisors of a resolved cone germ."""

    fan: Fan
    exceptional: tuple[int, ...]
    strata: Mapping[int, tuple[Cone, ...]]  # k -> k-subsets spanning a cone

    @property
    def k_max(self) -> int:
        return max((k for k, v in self.strata.items() if v), default=0)


def germ_data(resolution: ResolutionRecord) -> GermData:
    f = resolution.resolved
    if not fan_is_smooth(f):
        raise FanError("resolved fan is not smooth")
    exc = tuple(sorted(resolution.exceptional_rays))
    strata: dict[int, tuple[Cone, ...]] = {}
    for k in range(1, f.dim + 1):
        found = tuple(c for c in itertools.combinations(exc, k) if f.has_cone(c))
        if not found:
            break
        strata[k] = found
    return GermData(f, exc, strata)


def build_e1(resolution: ResolutionRecord) -> SpectralPage:
    """``E_1^{-k,i} = sum_I H^{i-2k}(D_I)`` with its ``d_1``, for one germ."""
    data = germ_data(resolution)
    f = data.fan
    cache: dict = {}

    def coh(c):
        if c not in cache:
            sc = StarCohomology(f, c)
            if not is_complete(sc.star.fan):
                raise FanError(f"intersection {c} is not compact")
            cache[c] = sc
        return cache[c]

    entries: dict[Position, Entry] = {}
    for k, strata in data.strata.items():
        for i in range(0, 2 * f.dim + 1):
            labels = []
            for c in strata:
                sc = coh(c)
                labels += [label(e, sc.star, c) for e in sc.basis_elements(i - 2 * k)]
            if i - 2 * k >= 0:
                entries[(-k, i)] = Entry.free(labels) if labels else ZERO_ENTRY
    diffs: dict[Position, IntegerLinearMap] = {}
    for (p, i), e in entries.items():
        tgt = (p + 1, i)
        if tgt not in entries or e.is_zero or entries[tgt].is_zero:
            continue
        diffs[(p, i)] = _assemble_d1(data, -p, i, cache, coh)
    page = SpectralPage(1, entries, diffs)
    page.check_complex()
    return page


def _assemble_d1(data: GermData, k: int, i: int, cache, coh) -> IntegerLinearMap:
    f = data.fan
    src_strata = data.strata[k]
    tgt_strata = data.strata[k - 1]
    src_deg, tgt_deg = i - 2 * k, i - 2 * (k - 1)
    row_off, rows = {}, 0
    for c in tgt_strata:
        row_off[c] = rows
        rows += len(coh(c).basis_elements(tgt_deg))
    col_blocks = []
    dom, cod = [], []
    for c in tgt_strata:
        sc = coh(c)
        cod += [label(e, sc.star, c) for e in sc.basis_elements(tgt_deg)]
    for c in src_strata:
        sc = coh(c)
        width = len(sc.basis_elements(src_deg))
        dom += [label(e, sc.star, c) for e in sc.basis_elements(src_deg)]
        block = [[0] * width for _ in range(rows)]
        for j, dropped in enumerate(c, start=1):
            face = tuple(x for x in c if x != dropped)
            g = gysin_pushforward_matrix(f, c, face, src_deg, cache)
            sign = (-1) ** j
            for a in range(g.matrix.rows):
                for b in range(width):
                    block[row_off[face] + a][b] += sign * g.matrix[a, b]
        col_blocks.append(block)
    data_rows = [sum((blk[r] for blk in col_blocks), []) for r in range(rows)]
    ncols = len(dom)
    return IntegerLinearMap(IntMatrix(data_rows, ncols), tuple(dom), tuple(cod))


def d1_map(page: SpectralPage, position: Position) -> IntegerLinearMap:
    if page.r != 1:
        raise ValueError("d1_map needs the E_1 page")
    if position not in page.differentials:
        for q in (position, page.target(position)):
            if page.entry(q).is_zero:
                raise ValueError(f"position {q} is not populated")
        raise ValueError(f"no d_1 leaving {position}")
    return page.differentials[position]


def supported_degree_positions(page: SpectralPage, degree: int) -> list[Position]:
    """Positions ``(-k, i)`` feeding degree ``i - k + 1``."""
    return sorted(p for p in page.entries if p[1] + p[0] + 1 == degree)


def supported_cohomology_of_exceptional_locus(
    resolution: ResolutionRecord, degree: int, copies: int = 1
) -> ConvergenceReport:
    """Cohomology of the resolution supported on the exceptional locus.

    One germ's answer is repeated ``copies`` times (isolated singular points
    of the same type).
    """
    e1 = build_e1(resolution)
    e2 = turn_page(e1)
    positions = supported_degree_positions(e1, degree)
    r_max = 2 * resolution.resolved.dim + 2
    certs = [_certify_position(e2, pos, r_max) for pos in positions]
    rep = assemble(degree, certs)
    if rep.status == "determined" and copies != 1:
        rep = ConvergenceReport(degree, rep.status, rep.group * copies, rep.graded, rep.notes)
    return rep


relative_cohomology_of_union = supported_cohomology_of_exceptional_locus


def euler_characteristic_of_e1(page: SpectralPage) -> int:
    """``sum (-1)^(i-k+1) rank E_1^{-k,i}``."""
    return sum((-1) ** ((i + p + 1) % 2) * e.group.free_rank for (p, i), e in page.entries.items() if e.known)


# ---------------------------------------------------------------------
# Cartan–Leray for U -> U / (Z/p)^2

@dataclass(frozen=True)
class CartanLerayModel:
    """Input facts about the cover and the group, carried as data.

    ``H^j(U) = H^j(P^{p-1})`` for ``j < 2p-3``; ``H^{2p-3}(U)`` is the
    augmentation kernel of ``Z[S]`` with ``S`` the ``p(p+1)`` fixed points,
    permuted in ``p+1`` free orbits of size ``p``; nothing above.
    """

    p: int
    d3_unit: int = D3_UNIT

    def __post_init__(self):
        if self.p < 3 or not isprime(self.p):
            raise ValueError("p must be an odd prime")

    @property
    def top_row(self) -> int:
        return 2 * self.p - 3

    def cover_rank(self, j: int) -> int:
        if j < self.top_row:
            return 1 if j % 2 == 0 and j >= 0 else 0
        if j == self.top_row:
            return self.p * (self.p + 1) - 1
        return 0

    def invariant_top_rank(self) -> int:
        # (Z[S]^0)^A: orbit sums minus the augmentation
        return self.p + 1 - 1

    def e2(self, max_total: int) -> SpectralPage:
        ring = GroupCohomologyRing(self.p)
        entries: dict[Position, Entry] = {}
        for i in range(0, max_total + 2):
            for j in range(0, self.top_row):
                if j % 2 or i + j > max_total + 1:
                    continue
                pres = ring.presentation(i)
                hk = f"h^{j // 2}"
                entries[(i, j)] = Entry(
                    pres.structure(), pres, tuple(f"{m}*{hk}" for m in ring.labels(i))
                ) if pres.generators else ZERO_ENTRY
        entries[(0, self.top_row)] = Entry(AbelianGroup.free(self.invariant_top_rank()))
        for i in range(1, max_total + 2):
            entries[(i, self.top_row)] = UNKNOWN
        return SpectralPage(2, entries, {}, frozenset({self.top_row}))

    def e3(self, max_total: int) -> SpectralPage:
        """``E_3`` with the explicit ``d_3(h^k alpha) = k alpha y``."""
        e3 = turn_page(self.e2(max_total))
        diffs: dict[Position, IntegerLinearMap] = {}
        for (i, j), e in e3.entries.items():
            if j % 2 or j == 0 or j >= self.top_row or e.presentation is None:
                continue
            tgt = e3.entry((i + 3, j - 2))
            if tgt.presentation is None:
                continue
            k = j // 2
            m = multiplication_by_y(self.p, i, scalar=k * self.d3_unit)
            diffs[(i, j)] = m
        page = SpectralPage(3, e3.entries, diffs, e3.unknown_rows)
        page.check_complex()
        return page


def cartan_leray_report(p: int, k: int) -> ConvergenceReport:
    if not 0 <= k < 2 * p - 2:
        raise ValueError(f"k={k} outside the validated range 0 <= k < {2 * p - 2}")
    model = CartanLerayModel(p)
    e2 = model.e2(k + 1)
    e4 = turn_page(model.e3(k + 1))
    r_max = k + 2
    certs = [
        _certify_position(e4, (i, k - i), r_max, free_source=e2)
        for i in range(0, k + 1)
    ]
    return assemble(k, certs)


def cartan_leray_open(p: int, k: int) -> AbelianGroup:
    rep = cartan_leray_report(p, k)
    if rep.status != "determined":
        raise IndeterminateError(f"H^{k}: {rep.status}; " + "; ".join(rep.notes))
    return rep.group


def rational_cohomology_of_quotient(p: int, k: int) -> int:
    """Rank of ``H^k(U/A; Q) = H^k(U; Q)^A`` by the transfer."""
    model = CartanLerayModel(p)
    if k == model.top_row:
        return model.invariant_top_rank()
    return model.cover_rank(k)
