import random

import pytest
from hypothesis import given, strategies as st

from ekedahl.cohomology import betti_numbers
from ekedahl.fan import CyclicQuotientType, Fan, projective_space_fan, quotient_cone, resolve_fan, stellar_subdivision
from ekedahl.groups import AbelianGroup, GradedAbelianGroup
from ekedahl.motivic import (
    POINT,
    EkedahlReport,
    LAbClass,
    MotivicExpression,
    compose_windows,
    ekedahl_solve,
    exceptional_fibre_expression,
    germ_betti,
    h_map,
    poincare_identity_check,
    resolution_poincare,
    smooth_proper_atom,
    toric_class,
    tree_exceptional_class,
)


def test_lab_canonical_form():
    assert LAbClass.of_group(AbelianGroup(0, (6,))) == LAbClass({2: 1, 3: 1})
    assert LAbClass.of_group(AbelianGroup(0, (4,))) != LAbClass({2: 2})
    assert LAbClass.of_group(AbelianGroup(2, (5, 5))).to_pairs() == [["Z", 2], ["Z/5", 2]]
    assert LAbClass.from_pairs([["Z/12", 1]]) == LAbClass({4: 1, 3: 1})
    c = LAbClass.free(3) - LAbClass({5: 1})
    assert c.free_rank == 3 and c.torsion_part() == LAbClass({5: -1})
    assert (c - c).is_zero
    assert str(LAbClass.zero()) == "0"


@given(st.lists(st.integers(1, 40), max_size=4), st.lists(st.integers(1, 40), max_size=4), st.integers(0, 3), st.integers(0, 3))
def test_lab_additive_on_direct_sums(ta, tb, fa, fb):
    a = AbelianGroup.from_invariants([t for t in ta], len(ta) + fa)
    b = AbelianGroup.from_invariants([t for t in tb], len(tb) + fb)
    assert LAbClass.of_group(a + b) == LAbClass.of_group(a) + LAbClass.of_group(b)


def test_h_map_examples():
    l2 = MotivicExpression.polynomial_in_l([1, 1, 1])  # {P^2}
    assert [h_map(l2, k) for k in range(6)] == [
        LAbClass.free(), LAbClass.zero(), LAbClass.free(), LAbClass.zero(), LAbClass.free(), LAbClass.zero()
    ]
    tors = smooth_proper_atom("Y", GradedAbelianGroup({0: AbelianGroup(1), 3: AbelianGroup(0, (5,))}), 2)
    e = MotivicExpression.atom(tors, l_power=1) - MotivicExpression.atom(POINT)
    assert h_map(e, 5) == LAbClass({5: 1})
    assert h_map(e, 0) == -LAbClass.free()
    assert h_map(e, 2) == LAbClass.free()


def test_h_map_is_additive():
    rng = random.Random(3)
    for _ in range(30):
        a = MotivicExpression.polynomial_in_l([rng.randint(-3, 3) for _ in range(4)])
        b = MotivicExpression.polynomial_in_l([rng.randint(-3, 3) for _ in range(4)])
        for k in range(-2, 9):
            assert h_map(a + b, k) == h_map(a, k) + h_map(b, k)
            assert h_map(a * 3, k) == h_map(a, k) * 3


def test_missing_atom_data_raises():
    from ekedahl.motivic import Atom

    a = Atom("W", GradedAbelianGroup({0: AbelianGroup(1)}), 3, known_up_to=2)
    assert h_map(MotivicExpression.atom(a), 1) == LAbClass.zero()
    with pytest.raises(KeyError):
        h_map(MotivicExpression.atom(a), 4)


def test_toric_class_of_projective_spaces():
    for n in range(1, 5):
        assert toric_class(projective_space_fan(n)).l_polynomial() == {j: 1 for j in range(n + 1)}


def test_toric_class_of_blowup():
    p2 = projective_space_fan(2)
    blown = stellar_subdivision(p2, (1, 1))
    diff = toric_class(blown) - toric_class(p2)
    assert diff.l_polynomial() == {1: 1}


def test_tree_class_matches_inclusion_exclusion():
    # chain of m lines: m {P^1} minus (m - 1) points
    for m in range(1, 6):
        lines = MotivicExpression.polynomial_in_l([1, 1]) * m
        points = MotivicExpression.polynomial_in_l([1]) * (m - 1)
        assert (lines - points).l_polynomial() == tree_exceptional_class(m).l_polynomial()
    with pytest.raises(ValueError):
        tree_exceptional_class(0)


def test_surface_germ_fibre_is_tree():
    for n in range(2, 8):
        rec = resolve_fan(quotient_cone(CyclicQuotientType.parse(f"1/{n}(1,{n - 1})")))
        g = germ_betti(rec.resolved, rec.exceptional_rays)
        m = len(rec.exceptional_rays)
        assert g.exceptional_orbits == {0: 1, 2: m}
        expr = exceptional_fibre_expression("y", g, {c: 2 - len(c) for c in g.strata})
        for k in range(0, 5):
            assert h_map(expr, k) == h_map(tree_exceptional_class(m), k)


def test_solver_trivial_group():
    rhs = {k: (LAbClass.free() if k in (-4, -2, 0) else LAbClass.zero()) for k in range(-4, 8)}
    rep = ekedahl_solve(rhs, n=3, bound=6, group="trivial")
    assert rep.consistent and rep.is_trivial()


def test_solver_round_trip():
    rng = random.Random(77)
    for trial in range(120):
        n = rng.randint(1, 4)
        bound = rng.randint(0, 8)
        e = {0: LAbClass.free()}
        for j in range(1, bound + 1):
            e[j] = LAbClass({q: rng.randint(-2, 2) for q in rng.sample([0, 2, 3, 4, 5], 2)})
        rhs = compose_windows(e, n, bound)
        rep = ekedahl_solve(rhs, n, bound)
        assert rep.consistent, rep.contradictions
        assert all(rep.invariants[j] == e.get(j, LAbClass.zero()) for j in range(bound + 1)), trial


def test_solver_reports_contradiction():
    e = {0: LAbClass.free(), 1: LAbClass({5: 1})}
    rhs = compose_windows(e, 2, 3)
    rhs[3] = rhs[3] + LAbClass({7: 1})  # inconsistent with e_i = 0 beyond the bound
    rep = ekedahl_solve(rhs, 2, 2)
    assert not rep.consistent
    rep2 = ekedahl_solve(compose_windows({1: LAbClass.free()}, 2, 2), 2, 2)
    assert any("e_0" in c for c in rep2.contradictions)


def test_report_json_round_trip():
    rep = EkedahlReport("G", {0: LAbClass.free(), 2: LAbClass({5: 2})}, ["n"])
    back = EkedahlReport.from_json(rep.to_json())
    assert back.invariants == rep.invariants and back.notes == ["n"]


def _betti(f: Fan) -> dict[int, int]:
    return {k: g.free_rank for k, g in betti_numbers(f).pieces.items()}


def test_poincare_identity_surface_toy():
    # P(1,1,2) has one 1/2(1,1) point; its resolution is the Hirzebruch surface F_2
    rec = resolve_fan(quotient_cone(CyclicQuotientType.parse("1/2(1,1)")))
    germ = germ_betti(rec.resolved, rec.exceptional_rays)
    f2 = Fan(2, ((1, 0), (0, 1), (-1, 2), (0, -1)), ((0, 1), (1, 2), (2, 3), (0, 3)))
    check = poincare_identity_check(2, _betti(f2), [germ])
    assert check.holds, check.residuals
    assert resolution_poincare(2, [germ]) == _betti(f2)
    wrong = poincare_identity_check(2, {0: 1, 2: 1, 4: 1}, [germ])
    assert wrong.failing() == [2]


def test_poincare_identity_trivial():
    for d in range(1, 5):
        assert poincare_identity_check(d, {2 * j: 1 for j in range(d + 1)}, []).holds


def test_poincare_identity_h5(h5_resolution):
    germ = germ_betti(h5_resolution.resolved, h5_resolution.exceptional_rays)
    germs = [germ] * 6
    betti_x = resolution_poincare(4, germs)
    check = poincare_identity_check(4, betti_x, germs)
    assert check.holds, check.residuals
    assert all(betti_x.get(k, 0) == 0 for k in (1, 3, 5, 7))
