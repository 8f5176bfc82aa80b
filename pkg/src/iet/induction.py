"""The Rauzy-Veech elementary step and its iteration.

Induction produces a trace: the sequence T = T^(0), T^(1), ... of induced
maps on the shrinking intervals I^(n) sharing the left endpoint, together
with the arrow path in the Rauzy diagram. On top of the trace live

- Zorich grouping of consecutive same-winner arrows,
- the Rokhlin-tower bookkeeping (orbits of level-n intervals through level l,
  tower addresses of points, exact entrance times),
- special Birkhoff sums for piecewise-constant data (the cocycle matrices),
- fixture construction: length vectors realizing a finite path, and
  self-similar periodic-type maps from a complete loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
from mpmath import mp

from . import linalg
from .combinatorics import (
    BOTTOM,
    TOP,
    PermutationPair,
    RauzyArrow,
    arrow_matrix,
    arrow_matrix_inverse,
    cocycle_matrix,
    make_arrow,
    path_completeness,
    rauzy_step_combinatorial,
    winner_loser,
)
from .errors import ConnectionFound, DomainError, PrecisionExhausted
from .iem import ComposedBranch, GeneralizedIEM, RestrictedBranch, StandardIEM, TranslationBranch
from .numeric import EXACT, NumericMode, bigfloat


def rv_step(iem):
    """One elementary Rauzy-Veech step; returns (induced map, arrow)."""
    pi = iem.pi
    ut = iem.top_points[-2]
    ub = iem.bottom_points[-2]
    diff = ub - ut
    if diff == 0 or (not iem.mode.is_exact and abs(diff) < iem.mode.tiny()):
        raise ConnectionFound(
            "u^t_{d-1} = u^b_{d-1}: immediate connection", report=(ut, ub))
    kind = TOP if ut < ub else BOTTOM
    arrow = make_arrow(pi, kind)
    if iem.is_standard:
        lengths = dict(iem.lengths)
        lengths[arrow.winner] = lengths[arrow.winner] - lengths[arrow.loser]
        return StandardIEM(arrow.target, lengths, iem.mode), arrow
    return _rv_step_generalized(iem, arrow), arrow


def _rv_step_generalized(iem: GeneralizedIEM, arrow: RauzyArrow) -> GeneralizedIEM:
    pi = iem.pi
    branches = dict(iem.branches)
    if arrow.kind == TOP:
        alpha_t, alpha_b = arrow.winner, arrow.loser
        cut = iem.bottom_points[-2]
        top_points = iem.top_points[:-1] + [cut]
        w = branches[alpha_t](cut)
        p = pi.position_bottom(alpha_t)
        bottom_points = iem.bottom_points[:p] + [w] + iem.bottom_points[p:-1]
        branches[alpha_t] = RestrictedBranch(branches[alpha_t],
                                             iem.top_points[-2], cut)
        branches[alpha_b] = ComposedBranch(iem.branches[alpha_t],
                                           iem.branches[alpha_b])
    else:
        alpha_b, alpha_t = arrow.winner, arrow.loser
        cut = iem.top_points[-2]
        bottom_points = iem.bottom_points[:-1] + [cut]
        v = branches[alpha_b].inverse(cut, iem.mode.tiny(8))
        q = pi.position_top(alpha_b)
        top_points = iem.top_points[:q] + [v] + iem.top_points[q:-1]
        branches[alpha_t] = ComposedBranch(iem.branches[alpha_t],
                                           RestrictedBranch(iem.branches[alpha_b],
                                                            v, cut))
        branches[alpha_b] = RestrictedBranch(iem.branches[alpha_b],
                                             top_points[q - 1], v)
    return GeneralizedIEM(arrow.target, top_points, bottom_points, branches,
                          iem.mode, iem.order, validate=False)


class InductionTrace:
    """Levels T^(0..n) with the arrow path; levels may be stored sparsely."""

    def __init__(self, iem, mode: NumericMode):
        self._levels = [iem]
        self.arrows: list[RauzyArrow] = []
        self.mode = mode
        self._cocycle_cache: dict[tuple[int, int], list[list[int]]] = {}

    @property
    def depth(self) -> int:
        return len(self.arrows)

    def iem(self, n: int):
        if self._levels[n] is None:
            k = n
            while self._levels[k] is None:
                k -= 1
            cur = self._levels[k]
            for i in range(k, n):
                cur, arrow = rv_step(cur)
                if arrow.kind != self.arrows[i].kind:
                    raise AssertionError("trace replay diverged")
                self._levels[i + 1] = cur
        return self._levels[n]

    def push(self, iem, arrow: RauzyArrow, store: bool = True):
        self.arrows.append(arrow)
        self._levels.append(iem if store else None)

    def interval_length(self, n: int):
        level = self.iem(n)
        return level.total

    def cocycle(self, l: int, n: int) -> list[list[int]]:
        """B(l, n) for the arrows l..n-1, exact integers."""
        if not 0 <= l <= n <= self.depth:
            raise DomainError(f"cocycle levels ({l},{n}) out of range")
        if l == n:
            return linalg.identity(self.iem(0).d)
        key = (l, n)
        if key not in self._cocycle_cache:
            b = linalg.identity(self.iem(0).d)
            for arrow in self.arrows[l:n]:
                b = linalg.mat_mul(arrow_matrix(arrow), b)
            self._cocycle_cache[key] = b
        return self._cocycle_cache[key]

    def cocycle_inverse(self, l: int, n: int) -> list[list[int]]:
        b = linalg.identity(self.iem(0).d)
        for arrow in self.arrows[l:n]:
            b = linalg.mat_mul(b, arrow_matrix_inverse(arrow))
        return b

    def min_interval_length(self, n: int):
        level = self.iem(n)
        if level.is_standard:
            return min(level.lengths.values())
        pts = level.top_points
        return min(b - a for a, b in zip(pts, pts[1:]))


def iterate_rv(iem, n_steps: int, store_all: bool = True,
               fast_cycles: bool = True) -> InductionTrace:
    """Iterate the elementary step n_steps times.

    Bigfloat mode aborts with PrecisionExhausted once the smallest interval
    is within 2**(-mantissa+32) of the noise floor. fast_cycles takes the
    arithmetic shortcut through self-loop arrows (d=2-style Zorich blocks),
    storing the skipped levels sparsely.
    """
    trace = InductionTrace(iem, iem.mode)
    cur = iem
    with iem.mode.workprec():
        # Subtractive cancellation makes comparison noise grow like
        # ||B(n)|| ~ total/min_length, so the honest abort point is at
        # min_length ~ total * 2^(-(bits-32)/2), not the linear
        # 2^(-bits+32): the latter was observed to let garbage arrows
        # through well before it triggers.
        guard = None if iem.mode.is_exact else \
            iem.total * mpmath.mpf(2) ** (-(iem.mode.bits - 32) // 2)
        while trace.depth < n_steps:
            if guard is not None and trace.min_interval_length(trace.depth) < guard:
                raise PrecisionExhausted(
                    f"minimum interval length below the cancellation floor "
                    f"2^(-({iem.mode.bits}-32)/2) at level {trace.depth}")
            nxt, arrow = rv_step(cur)
            used_fast = False
            if fast_cycles and cur.is_standard and \
                    arrow.target.key() == cur.pi.key():
                lam_w = cur.lengths[arrow.winner]
                lam_l = cur.lengths[arrow.loser]
                q = int(lam_w / lam_l) if lam_w > lam_l else 1
                if not lam_w - q * lam_l > 0:
                    q -= 1  # exact multiples connect one step later
                k = min(q, n_steps - trace.depth)
                if k > 1:
                    lengths = dict(cur.lengths)
                    lengths[arrow.winner] = lam_w - k * lam_l
                    for i in range(k):
                        trace.push(None, arrow, store=False)
                    cur = StandardIEM(arrow.target, lengths, cur.mode)
                    trace._levels[-1] = cur
                    used_fast = True
            if not used_fast:
                trace.push(nxt, arrow, store=store_all)
                cur = nxt
    return trace


@dataclass(frozen=True)
class ZorichStep:
    winner: str
    start: int  # arrow slice [start, stop) in the trace path
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


def zorich_accelerate(arrows: Sequence[RauzyArrow]) -> list[ZorichStep]:
    """Group consecutive arrows sharing their winner."""
    groups: list[ZorichStep] = []
    start = 0
    for i in range(1, len(arrows) + 1):
        if i == len(arrows) or arrows[i].winner != arrows[start].winner:
            groups.append(ZorichStep(arrows[start].winner, start, i))
            start = i
    return groups


def flatten_zorich(groups: Sequence[ZorichStep],
                   arrows: Sequence[RauzyArrow]) -> list[RauzyArrow]:
    out: list[RauzyArrow] = []
    for g in groups:
        out.extend(arrows[g.start:g.stop])
    return out


# ---------------------------------------------------------------------------
# Rokhlin-tower bookkeeping


def tower_floors(trace: InductionTrace, l: int, n: int) -> dict[str, list]:
    """Orbit structure of the level-n intervals under T^(l).

    For each level-n letter alpha, the list of (letter at level l, x_shift)
    along the return orbit of I_alpha^{t,(n)}; for standard maps x_shift is
    the translation applied on that leg, so the i-th leg is x -> x + shift.
    Lengths equal the column sums of B(l, n).
    """
    lvl_l = trace.iem(l)
    lvl_n = trace.iem(n)
    end = lvl_n.total
    floors: dict[str, list] = {}
    b = trace.cocycle(l, n)
    alphabet = lvl_n.pi.alphabet
    with trace.mode.workprec():
        for a in alphabet:
            p = lvl_n.pi.position_top(a)
            # The orbit legs are constant on the open interval, so any
            # interior point works; endpoints would hit singularities exactly
            # and misroute at the precision floor in bigfloat mode.
            x = (lvl_n.top_points[p - 1] + lvl_n.top_points[p]) / 2
            legs = []
            while True:
                letter = lvl_l.letter_at(x, side=1)
                y = lvl_l.evaluate(x, side=1)
                legs.append((letter, y - x))
                x = y
                if x >= 0 and x < end:
                    break
            expected = sum(b[alphabet.index(a)])
            if len(legs) != expected:
                raise AssertionError(
                    f"tower over {a!r} has {len(legs)} legs, B predicts {expected}")
            floors[a] = legs
    return floors


def tower_address(trace: InductionTrace, x, n: int, side: int = 1):
    """Level-by-level address of x in the level-n tower.

    Returns (base_point, [(j_1, x_1), ..., (j_n, x_n)]) where
    x_{l-1} = (T^(l-1))^{j_l}(x_l) and x_n is the base point in I^(n).
    """
    steps = []
    cur = x
    for l in range(1, n + 1):
        end = trace.iem(l).total
        j = 0
        while not _in_interval(cur, end, side):
            cur = trace.iem(l - 1).invert(cur, side=side)
            j += 1
            if j > 10**7:
                raise PrecisionExhausted("tower address runaway")
        steps.append((j, cur))
    return cur, steps


def _in_interval(x, end, side: int) -> bool:
    if side >= 0:
        return 0 <= x < end
    return 0 < x <= end


def return_times(trace: InductionTrace, n: int) -> dict[str, int]:
    """Exact T-return times of the level-n intervals.

    With B = I + E_{loser,winner} acting on Gamma, the return time of
    I_alpha^{t,(n)} is the alpha-row sum of B(0,n) (equivalently the alpha
    column sum in the transposed convention that acts on length vectors).
    """
    b = trace.cocycle(0, n)
    alphabet = trace.iem(0).pi.alphabet
    return {a: sum(b[i]) for i, a in enumerate(alphabet)}


def cocycle_norm(b) -> int:
    """||B||: the greatest return time, i.e. the greatest row sum here
    (the paper's "greatest column sum" in its length-action convention)."""
    return max(sum(abs(x) for x in row) for row in b)


def floor_index(trace: InductionTrace, x, n: int, side: int = 1) -> tuple[str, int]:
    """(letter alpha, j) with x on floor j of the level-n tower over alpha,
    i.e. x = T^j(x_base), x_base in I_alpha^{t,(n)}, 0 <= j < r_alpha.

    j is exact (big integer), assembled from the per-level addresses and
    the lower-level return times.
    """
    base, steps = tower_address(trace, x, n, side=side)
    letter = trace.iem(n).letter_at(base, side=side)
    total = 0
    for l in range(n, 0, -1):
        j_l, x_l = steps[l - 1]
        if j_l == 0:
            continue
        rt = return_times(trace, l - 1)
        point = x_l
        lvl = trace.iem(l - 1)
        for _ in range(j_l):
            total += rt[lvl.letter_at(point, side=side)]
            point = lvl.evaluate(point, side=side)
    return letter, total


def entrance_time_forward(trace: InductionTrace, x, n: int) -> int:
    """Smallest m >= 0 with T^m(x) in I^(n) (exact, via the tower)."""
    if _in_interval(x, trace.iem(n).total, 1):
        return 0
    letter, j = floor_index(trace, x, n, side=1)
    r = return_times(trace, n)[letter]
    return r - j


def entrance_time_backward(trace: InductionTrace, x, n: int, side: int = 1) -> int:
    """Smallest m >= 0 with T^-m(x) in I^(n) (exact, via the tower)."""
    if _in_interval(x, trace.iem(n).total, side):
        return 0
    _, j = floor_index(trace, x, n, side=side)
    return j


# ---------------------------------------------------------------------------
# Fixtures


def lengths_from_path(start: PermutationPair, kinds: Sequence[str],
                      seed: Sequence | None = None,
                      mode: NumericMode = EXACT) -> StandardIEM:
    """A standard i.e.m. whose induction begins with the given path:
    lengths are B(0,N)^T v, normalized to total 1.

    Reproduction of the path is verified; on failure the seed is nudged
    into the cone interior (up to 3 retries).
    """
    arrows = []
    pi = start
    for kind in kinds:
        arrow = make_arrow(pi, kind)
        arrows.append(arrow)
        pi = arrow.target
    b = cocycle_matrix(arrows)
    d = start.d
    base = list(seed) if seed is not None else [1] * d
    if any(not v > 0 for v in base):
        raise DomainError("seed vector must be strictly positive")
    for attempt in range(4):
        v = [Fraction(x) + attempt for x in base]
        lam = linalg.vec_mat(v, b)  # components of B^T v
        total = sum(lam)
        lengths = {a: x / total for a, x in zip(start.alphabet, lam)}
        iem = StandardIEM(start, lengths, mode)
        try:
            trace = iterate_rv(iem, len(kinds), store_all=False,
                               fast_cycles=False)
        except (ConnectionFound, PrecisionExhausted):
            continue
        if [a.kind for a in trace.arrows] == list(kinds):
            return iem
    raise PrecisionExhausted(
        "could not reproduce the path from the seed (raise mantissa?)")


@dataclass
class PeriodicFixture:
    """Self-similar i.e.m. from a complete primitive loop: its lengths are
    the Perron eigenvector of B_loop^T and its rotation number is loop^inf."""

    start: PermutationPair
    loop_kinds: tuple[str, ...]
    loop_arrows: tuple[RauzyArrow, ...]
    matrix: list[list[int]]
    perron: mpmath.mpf
    eigenvalues: list[mpmath.mpc]
    iem: StandardIEM
    bits: int

    @property
    def eigenvalue_moduli(self) -> list:
        return sorted((abs(ev) for ev in self.eigenvalues), reverse=True)

    def path(self, periods: int) -> list[RauzyArrow]:
        return list(self.loop_arrows) * periods


def make_periodic_fixture(start: PermutationPair, kinds: Sequence[str],
                          bits: int = 512) -> PeriodicFixture:
    """Build the periodic-type fixture for a closed complete loop."""
    arrows = []
    pi = start
    for kind in kinds:
        arrow = make_arrow(pi, kind)
        arrows.append(arrow)
        pi = arrow.target
    if pi.key() != start.key():
        raise DomainError("loop is not closed")
    rep = path_completeness(arrows)
    if rep.complete_count < 1:
        raise DomainError(f"loop is not complete; {rep.missing_letters} never win")
    b = cocycle_matrix(arrows)
    d = start.d
    power = b
    for _ in range((d - 1) ** 2 + 1):
        if linalg.is_positive(power):
            break
        power = linalg.mat_mul(power, b)
    else:
        raise DomainError("loop matrix is not primitive")
    coeffs = linalg.char_poly(b)
    with mp.workprec(bits + 64):
        roots = mpmath.polyroots([mpmath.mpf(c) for c in coeffs], maxsteps=200,
                                 extraprec=bits)
        perron = max(roots, key=lambda r: mpmath.fabs(r))
        if abs(mpmath.im(perron)) > mpmath.mpf(2) ** (-bits // 2):
            raise DomainError("Perron root is not real (loop not primitive?)")
        perron = mpmath.re(perron)
        others = sorted((mpmath.fabs(r) for r in roots), reverse=True)[1]
        if not perron - others > mpmath.mpf(2) ** (-bits // 4):
            raise DomainError("Perron root is not simple")
        bt = linalg.transpose(b)
        m = [[mpmath.mpf(bt[i][j]) - (perron if i == j else 0)
              for j in range(d)] for i in range(d)]
        kernel = linalg.nullspace(m, tol=mpmath.mpf(2) ** (-bits // 2))
        if len(kernel) != 1:
            raise AssertionError("Perron eigenvector is not unique")
        v = kernel[0]
        total = sum(v)
        v = [x / total for x in v]
        if any(x <= 0 for x in v):
            raise AssertionError("Perron eigenvector is not positive")
    mode = bigfloat(bits)
    iem = StandardIEM(start, dict(zip(start.alphabet, v)), mode)
    fixture = PeriodicFixture(start, tuple(kinds), tuple(arrows), b,
                              perron, roots, iem, bits)
    _check_self_similar(fixture)
    return fixture


def _check_self_similar(fixture: PeriodicFixture) -> None:
    trace = iterate_rv(fixture.iem, len(fixture.loop_kinds), fast_cycles=False)
    if [a.kind for a in trace.arrows] != list(fixture.loop_kinds):
        raise AssertionError("fixture does not reproduce its loop")
    deep = trace.iem(trace.depth).normalized()
    with fixture.iem.mode.workprec():
        tol = mpmath.mpf(2) ** (-fixture.bits * 3 // 4)
        for a in fixture.start.alphabet:
            if abs(deep.lengths[a] - fixture.iem.lengths[a]) > tol:
                raise AssertionError("fixture lengths are not self-similar")
