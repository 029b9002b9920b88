import random

import pytest

from ekedahl.fan import (
    CyclicQuotientType,
    Fan,
    projective_space_fan,
    quotient_cone,
    resolve_fan,
    stellar_subdivision,
)


def product_of_lines_fan(n: int) -> Fan:
    """Fan of (P^1)^n: all sign patterns of the coordinate vectors."""
    rays = []
    for i in range(n):
        for s in (1, -1):
            rays.append(tuple(s if j == i else 0 for j in range(n)))
    cones = []
    for signs in range(2**n):
        cones.append(tuple(sorted(2 * i + ((signs >> i) & 1) for i in range(n))))
    return Fan(n, tuple(rays), tuple(sorted(cones)))


def random_smooth_complete_fan(rng: random.Random, dim: int, blowups: int) -> Fan:
    """Start from P^n or (P^1)^n and blow up random torus-invariant strata."""
    f = projective_space_fan(dim) if rng.random() < 0.5 else product_of_lines_fan(dim)
    for _ in range(blowups):
        cones = [c for c in f.cones if len(c) >= 2]
        c = rng.choice(cones)
        v = tuple(sum(f.rays[i][k] for i in c) for k in range(dim))
        f = stellar_subdivision(f, v)
    return f


@pytest.fixture(scope="session")
def h5_type():
    return CyclicQuotientType.parse("1/5(1,2,3,4)")


@pytest.fixture(scope="session")
def h5_resolution(h5_type):
    return resolve_fan(quotient_cone(h5_type), label=str(h5_type))


@pytest.fixture(scope="session")
def h5_e1(h5_resolution):
    from ekedahl.spectral import build_e1

    return build_e1(h5_resolution)


@pytest.fixture(scope="session")
def random_fans():
    rng = random.Random(20240614)
    fans = []
    for i in range(24):
        dim = 2 if i % 3 == 0 else 3
        fans.append(random_smooth_complete_fan(rng, dim, rng.randint(0, 4)))
    return fans
