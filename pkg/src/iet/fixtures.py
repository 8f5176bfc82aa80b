"""Built-in fixture registry.

Shipped fixtures (all deterministic):

- circle-golden: d=2 rotation by the golden mean, as the periodic-type map
  of the loop "tb" at the AB/BA vertex;
- periodic-g2: genus-2 periodic-type map on ABCD/DCBA from the loop
  "ttbtbbtb" (char poly x^4-7x^3+13x^2-7x+1, real spectrum, two eigenvalues
  inside the unit circle, so dim Gamma_s = g = 2);
- periodic-d5s2: d=5, s=2 periodic-type map on ABCDE/EDCBA from the loop
  "tttbtbbttbtb" (one neutral eigenvalue, two contracted, so restricted);
- liouville-d2: rotation with continued fraction [0; 2, 4, 16, 256, 65536,
  1, 1, ...]: a negative control whose Roth condition (a) ratio tail is
  near 1.

Loops were found by exhaustive search over closed complete primitive loops
with all-real, distinct-moduli spectra; tests re-verify those properties.
"""
from __future__ import annotations

from fractions import Fraction

import mpmath
from mpmath import mp

from .combinatorics import PermutationPair
from .errors import InputFormatError
from .iem import StandardIEM
from .induction import PeriodicFixture, make_periodic_fixture
from .numeric import bigfloat

D2 = PermutationPair.from_orders("AB", "BA")
D3 = PermutationPair.from_orders("ABC", "CBA")
D4 = PermutationPair.from_orders("ABCD", "DCBA")
D5 = PermutationPair.from_orders("ABCDE", "EDCBA")
D6 = PermutationPair.from_orders("ABCDEF", "FEDCBA")

COMBINATORIAL_SEEDS = {2: D2, 3: D3, 4: D4, 5: D5, 6: D6}

GOLDEN_LOOP = ("top", "bottom")
G2_LOOP = tuple("top" if c == "t" else "bottom" for c in "ttbtbbtb")
D5S2_LOOP = tuple("top" if c == "t" else "bottom" for c in "tttbtbbttbtb")

LIOUVILLE_BLOCKS = (2, 4, 16, 256, 65536)


def continued_fraction_value(coeffs, bits: int) -> mpmath.mpf:
    """[0; a_1, a_2, ...] followed by an all-ones (golden) tail."""
    with mp.workprec(bits + 64):
        x = (mp.sqrt(5) - 1) / 2  # value of the tail [0; 1, 1, ...]
        for a in reversed(coeffs):
            x = 1 / (a + x)
        return +x


def continued_fraction_of(x, n: int) -> list[int]:
    """First n partial quotients of x in (0,1): [0; a_1, ..., a_n]."""
    out = []
    for _ in range(n):
        if x == 0:
            break
        x = 1 / x
        a = int(x)
        out.append(a)
        x = x - a
    return out


def circle_golden(bits: int = 256) -> PeriodicFixture:
    return make_periodic_fixture(D2, GOLDEN_LOOP, bits=bits)


def periodic_g2(bits: int = 512) -> PeriodicFixture:
    return make_periodic_fixture(D4, G2_LOOP, bits=bits)


def periodic_d5s2(bits: int = 512) -> PeriodicFixture:
    return make_periodic_fixture(D5, D5S2_LOOP, bits=bits)


def liouville_d2(bits: int = 768) -> StandardIEM:
    omega = continued_fraction_value(LIOUVILLE_BLOCKS, bits)
    mode = bigfloat(bits)
    with mode.workprec():
        return StandardIEM(D2, {"A": 1 - omega, "B": omega}, mode)


def rotation(omega, mode=None) -> StandardIEM:
    """The rotation by omega as a standard i.e.m. with lengths (1-w, w)."""
    if mode is None:
        if isinstance(omega, (int, Fraction, str)):
            from .numeric import EXACT
            mode = EXACT
        else:
            mode = bigfloat()
    with mode.workprec():
        w = mode.coerce(omega)
        return StandardIEM(D2, {"A": 1 - w, "B": w}, mode)


_REGISTRY = {
    "circle-golden": lambda bits=None: circle_golden(bits or 256).iem,
    "periodic-g2": lambda bits=None: periodic_g2(bits or 512).iem,
    "periodic-d5s2": lambda bits=None: periodic_d5s2(bits or 512).iem,
    "liouville-d2": lambda bits=None: liouville_d2(bits or 768),
}

_FIXTURES = {
    "circle-golden": circle_golden,
    "periodic-g2": periodic_g2,
    "periodic-d5s2": periodic_d5s2,
}


def fixture_names() -> list[str]:
    return sorted(_REGISTRY)


def load_fixture_iem(name: str, bits: int | None = None) -> StandardIEM:
    if name not in _REGISTRY:
        raise InputFormatError(
            f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    return _REGISTRY[name](bits)


def load_periodic_fixture(name: str, bits: int | None = None) -> PeriodicFixture:
    if name not in _FIXTURES:
        raise InputFormatError(
            f"unknown periodic fixture {name!r}; available: "
            f"{', '.join(sorted(_FIXTURES))}")
    return _FIXTURES[name](bits) if bits else _FIXTURES[name]()
