import cmath
import itertools
import json

import pytest

from ekedahl.fan import CyclicQuotientType
from ekedahl.heisenberg import (
    HeisenbergElement,
    brute_force_stabilizers,
    build_representation,
    common_eigenlines,
    ekedahl_report,
    fixed_points,
    generators,
    order_p_subgroups,
    orbit,
    represent,
    singular_locus,
    singular_locus_json,
)
from ekedahl.motivic import LAbClass

PRIMES = (3, 5, 7)


def all_elements(p):
    return [HeisenbergElement(a, b, c, p) for a, b, c in itertools.product(range(p), repeat=3)]


@pytest.mark.parametrize("p", PRIMES)
def test_group_relations(p):
    g = generators(p)
    x, y, z = g["X"], g["Y"], g["Z"]
    assert z * y * x == x * y
    for h in (x, y, z):
        assert (h**p).is_identity and not h.is_identity
    for h in all_elements(p)[:: max(1, p)]:
        assert z * h == h * z


@pytest.mark.parametrize("p", (3, 5))
def test_represent_is_faithful_homomorphism(p):
    elems = all_elements(p)
    images = {g: represent(g) for g in elems}
    assert len(set(images.values())) == p**3
    for g, h in itertools.product(elems[::4], elems[::3]):
        assert images[g * h] == images[g] @ images[h]


@pytest.mark.parametrize("p", PRIMES)
def test_representation_is_irreducible(p):
    # <chi, chi> = 1, with exact monomial traces evaluated numerically
    zeta = cmath.exp(2j * cmath.pi / p)
    total = 0.0
    for g in all_elements(p):
        m = represent(g)
        tr = sum(zeta ** m.exponents[j] for j in range(p) if m.perm[j] == j)
        total += abs(tr) ** 2
    assert abs(total / p**3 - 1) < 1e-9
    assert common_eigenlines(p) == []


@pytest.mark.parametrize("p", PRIMES)
def test_subgroup_count_and_fixed_sets(p):
    subs = order_p_subgroups(p)
    assert len(subs) == p + 1
    seen = set()
    for b in subs:
        pts = fixed_points(b)
        assert len(pts) == p
        keys = {r.point for r in pts}
        assert not keys & seen
        seen |= keys
        for r in pts:
            assert len(r.stabilizer) == p
            assert sorted(r.stabilizer) == sorted(b.elements)
    assert len(seen) == p * (p + 1)


@pytest.mark.parametrize("p", PRIMES)
def test_singular_locus(p):
    locus = singular_locus(p)
    assert len(locus) == p + 1
    for s in locus:
        assert s.local.quotient_type == CyclicQuotientType(p, tuple(range(1, p)))
        assert s.local.pseudo_reflections == 0
        assert len(orbit(s.orbit[0].point, p)) == p
    data = json.loads(singular_locus_json(p))
    assert len(data["singular_points"]) == p + 1


def test_brute_force_p3():
    found = brute_force_stabilizers(3)
    assert len(found) == 12
    assert set(found.values()) == {3}


def test_non_prime_rejected():
    for bad in (1, 2, 4, 9):
        with pytest.raises(ValueError):
            build_representation(bad)


def test_ekedahl_report_h5():
    rep = ekedahl_report(5)
    assert rep.consistent, rep.contradictions
    assert rep.invariants[0] == LAbClass.free()
    assert all(rep.invariants[i].is_zero for i in range(1, 7))
    assert rep.is_trivial()
    assert any("6 singular points" in n for n in rep.notes)
