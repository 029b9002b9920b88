import pytest

from ekedahl.groups import (
    AbelianGroup,
    GradedAbelianGroup,
    PresentedGroup,
    Z,
    ZERO,
    cokernel_group,
    kernel_group,
    subquotient,
)
from ekedahl.lattice import IntMatrix


def test_torsion_is_split_into_prime_powers():
    assert AbelianGroup(0, (12,)).torsion == (3, 4)
    assert AbelianGroup(0, (4,)).torsion == (4,)
    assert str(AbelianGroup(1, (5, 5))) == "Z + (Z/5)^2"
    assert str(ZERO) == "0"


def test_json_round_trip():
    g = GradedAbelianGroup({0: Z, 3: AbelianGroup(2, (5,))})
    assert GradedAbelianGroup.from_json(g.to_json()) == g
    assert g[1] == ZERO and g.top_degree == 3


def test_graded_rejects_negative_degrees():
    with pytest.raises(ValueError):
        GradedAbelianGroup({-1: Z})


def test_cokernel_of_doubling_keeps_torsion():
    assert cokernel_group(IntMatrix([[2]])) == AbelianGroup(0, (2,))


def test_subquotient_with_torsion_target():
    # Z --(x3)--> Z/5 has kernel 5Z, which is free of rank 1
    mid = PresentedGroup.free(1)
    tgt = PresentedGroup.cyclic_sum([5])
    assert subquotient(mid, outgoing=IntMatrix([[3]]), target=tgt) == Z
    # Z/5 modulo the image of Z --(x2)--> Z/5 is zero
    assert subquotient(tgt, incoming=IntMatrix([[2]])) == ZERO


def test_subquotient_detects_non_complex():
    with pytest.raises(ArithmeticError):
        subquotient(PresentedGroup.free(1), incoming=IntMatrix([[1]]), outgoing=IntMatrix([[1]]))


def test_kernel_group():
    assert kernel_group(IntMatrix([[1, 1]])) == Z
