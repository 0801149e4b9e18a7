from __future__ import annotations

import random

import pytest

from gpcaka import curves
from gpcaka.keys import (
    Identity,
    PublicRecord,
    extract_partial_private_key,
    set_private_key,
    set_public_key,
    setup,
)


class ScriptedRng:
    """randrange() pops preset values; fails loudly on exhaustion or range."""

    def __init__(self, values):
        self.values = list(values)

    def randrange(self, a, b=None):
        lo, hi = (0, a) if b is None else (a, b)
        if not self.values:
            raise AssertionError("scripted rng exhausted")
        v = self.values.pop(0)
        assert lo <= v < hi, f"scripted value {v} outside [{lo}, {hi})"
        return v


# The standard seeded toy fixture used across the suite:
#   s=7, A: x=4 r=3 t=6 (dn /grid/test/up0), B: x=2 r=8 t=5 (dn /grid/test/rp0)
TOY_SEEDS = {"s": 7, "xA": 4, "rA": 3, "tA": 6, "xB": 2, "rB": 8, "tB": 5}
TOY_DN_A = "/grid/test/up0"
TOY_DN_B = "/grid/test/rp0"
# identity mined so that D + x == 0 (mod 19) for the contributiveness sweep
TOY_DN_CONTRIB = "/grid/test/c18"


@pytest.fixture(scope="session")
def toy_table():
    """Multiples of the toy generator: table[k] == k*G."""
    table = [curves.IDENTITY]
    for _ in range(1, 19):
        table.append(curves.point_add(table[-1], curves.TOY17.gen, curves.TOY17))
    return table


@pytest.fixture()
def toy_domain():
    params, mk = setup("TOY17", "grid-test", ScriptedRng([TOY_SEEDS["s"]]))
    return params, mk


def enroll_toy_user(params, mk, dn: str, x: int, r: int):
    xs = curves.Scalar(x, params.curve.q)
    p_pub = set_public_key(xs, params)
    ident = Identity(dn)
    ppk = extract_partial_private_key(mk, params, ident, p_pub, ScriptedRng([r]))
    record = PublicRecord(ident, p_pub, ppk.r_point, params.domain_id)
    return set_private_key(params, xs, ppk, record)


@pytest.fixture()
def toy_users(toy_domain):
    params, mk = toy_domain
    user_a = enroll_toy_user(params, mk, TOY_DN_A, TOY_SEEDS["xA"], TOY_SEEDS["rA"])
    user_b = enroll_toy_user(params, mk, TOY_DN_B, TOY_SEEDS["xB"], TOY_SEEDS["rB"])
    return params, user_a, user_b


@pytest.fixture(scope="session")
def p256_domain():
    rng = random.Random(0xD0)
    return setup("P256", "prod", rng)


def enroll_random_user(params, mk, dn: str, rng):
    from gpcaka.keys import set_secret_value

    x = set_secret_value(rng, params)
    p_pub = set_public_key(x, params)
    ident = Identity(dn)
    ppk = extract_partial_private_key(mk, params, ident, p_pub, rng)
    record = PublicRecord(ident, p_pub, ppk.r_point, params.domain_id)
    return set_private_key(params, x, ppk, record)


@pytest.fixture(scope="session")
def p256_users(p256_domain):
    params, mk = p256_domain
    rng = random.Random(0xD1)
    user_a = enroll_random_user(params, mk, "/prod/up", rng)
    user_b = enroll_random_user(params, mk, "/prod/rp", rng)
    return params, user_a, user_b
