"""Combinatorics of interval exchange maps.

A permutation pair pi = (pi_top, pi_bottom) on an ordered alphabet encodes
which letter occupies which position (1..d) in the top and bottom partitions
of the interval. This module provides:

- the two Rauzy operations and the diagram they generate from a seed;
- the singularity permutation sigma on the 2d half-points (letter, L/R),
  whose cycles enumerate the marked points of any suspension;
- the antisymmetric matrix Omega(pi), whose rank is twice the genus;
- the elementary cocycle matrices B = I + E_{loser,winner} and path products;
- minimal-complete factorization of winner sequences.

All matrices are indexed by the frozen alphabet ordering fixed at
construction, so serialization is deterministic.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import linalg

TOP = "top"
BOTTOM = "bottom"

HalfPoint = tuple[str, str]  # (letter, "L" | "R")


@dataclass(frozen=True)
class PermutationPair:
    """Irreducible combinatorial data of a (generalized) i.e.m."""

    alphabet: tuple[str, ...]
    pi_top: tuple[int, ...]     # position of alphabet[i] in the top row, 1-based
    pi_bottom: tuple[int, ...]  # position of alphabet[i] in the bottom row

    def __post_init__(self):
        d = len(self.alphabet)
        if d < 2:
            raise ValueError("need at least 2 letters")
        if len(set(self.alphabet)) != d:
            raise ValueError("alphabet letters must be distinct")
        for name, pi in (("pi_top", self.pi_top), ("pi_bottom", self.pi_bottom)):
            if sorted(pi) != list(range(1, d + 1)):
                raise ValueError(f"{name} is not a bijection onto 1..{d}")
        for k in range(1, d):
            top_k = {a for a, p in zip(self.alphabet, self.pi_top) if p <= k}
            bot_k = {a for a, p in zip(self.alphabet, self.pi_bottom) if p <= k}
            if top_k == bot_k:
                raise ValueError(f"combinatorial data reducible at k={k}")

    @property
    def d(self) -> int:
        return len(self.alphabet)

    @classmethod
    def from_orders(cls, top_order: Sequence[str], bottom_order: Sequence[str],
                    alphabet: Sequence[str] | None = None) -> "PermutationPair":
        """Build from the letter sequences of the two rows."""
        alphabet = tuple(alphabet if alphabet is not None else top_order)
        pi_t = tuple(top_order.index(a) + 1 for a in alphabet)
        pi_b = tuple(bottom_order.index(a) + 1 for a in alphabet)
        return cls(alphabet, pi_t, pi_b)

    def top_order(self) -> tuple[str, ...]:
        return tuple(a for _, a in sorted(zip(self.pi_top, self.alphabet)))

    def bottom_order(self) -> tuple[str, ...]:
        return tuple(a for _, a in sorted(zip(self.pi_bottom, self.alphabet)))

    def position_top(self, letter: str) -> int:
        return self.pi_top[self.alphabet.index(letter)]

    def position_bottom(self, letter: str) -> int:
        return self.pi_bottom[self.alphabet.index(letter)]

    # The four distinguished letters of section 3.1 notation:
    def top_last(self) -> str:      # alpha_t, pi_t = d
        return self.top_order()[-1]

    def bottom_last(self) -> str:   # alpha_b, pi_b = d
        return self.bottom_order()[-1]

    def top_first(self) -> str:     # _t alpha, pi_t = 1
        return self.top_order()[0]

    def bottom_first(self) -> str:  # _b alpha, pi_b = 1
        return self.bottom_order()[0]

    def key(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return (self.top_order(), self.bottom_order())

    def to_json(self) -> dict:
        return {"alphabet": list(self.alphabet),
                "pi_top": list(self.pi_top),
                "pi_bottom": list(self.pi_bottom)}

    @classmethod
    def from_json(cls, obj: dict) -> "PermutationPair":
        return cls(tuple(obj["alphabet"]), tuple(obj["pi_top"]),
                   tuple(obj["pi_bottom"]))


@dataclass(frozen=True)
class RauzyArrow:
    source: PermutationPair
    target: PermutationPair
    kind: str      # "top" | "bottom"
    winner: str
    loser: str


def winner_loser(pi: PermutationPair, kind: str) -> tuple[str, str]:
    """Winner/loser of the arrow of the given type out of pi."""
    alpha_t, alpha_b = pi.top_last(), pi.bottom_last()
    if kind == TOP:
        return alpha_t, alpha_b
    if kind == BOTTOM:
        return alpha_b, alpha_t
    raise ValueError(f"arrow kind must be 'top' or 'bottom', got {kind!r}")


def rauzy_step_combinatorial(pi: PermutationPair, kind: str) -> PermutationPair:
    """R_t(pi) or R_b(pi): the loser is reinserted right after the winner
    in the opposite row; the winner's row is unchanged."""
    winner, loser = winner_loser(pi, kind)
    if kind == TOP:
        row = list(pi.bottom_order())
        row.remove(loser)
        row.insert(row.index(winner) + 1, loser)
        return PermutationPair.from_orders(pi.top_order(), row, pi.alphabet)
    row = list(pi.top_order())
    row.remove(loser)
    row.insert(row.index(winner) + 1, loser)
    return PermutationPair.from_orders(row, pi.bottom_order(), pi.alphabet)


def make_arrow(pi: PermutationPair, kind: str) -> RauzyArrow:
    winner, loser = winner_loser(pi, kind)
    return RauzyArrow(pi, rauzy_step_combinatorial(pi, kind), kind, winner, loser)


def arrows_from_kinds(start: PermutationPair,
                      kinds: Iterable[str]) -> list[RauzyArrow]:
    """Path of arrows following the given type sequence from a vertex."""
    path = []
    pi = start
    for kind in kinds:
        arr = make_arrow(pi, kind)
        path.append(arr)
        pi = arr.target
    return path


@dataclass(frozen=True)
class RauzyDiagram:
    vertices: tuple[PermutationPair, ...]
    arrows: tuple[RauzyArrow, ...]

    def index(self, pi: PermutationPair) -> int:
        return self._index_map()[pi.key()]

    def _index_map(self):
        return {v.key(): i for i, v in enumerate(self.vertices)}

    def out_arrows(self, pi: PermutationPair) -> list[RauzyArrow]:
        return [a for a in self.arrows if a.source.key() == pi.key()]

    def in_arrows(self, pi: PermutationPair) -> list[RauzyArrow]:
        return [a for a in self.arrows if a.target.key() == pi.key()]

    def to_json(self) -> dict:
        idx = self._index_map()
        return {
            "vertices": [v.to_json() for v in self.vertices],
            "arrows": [{"source": idx[a.source.key()],
                        "target": idx[a.target.key()],
                        "type": a.kind, "winner": a.winner, "loser": a.loser}
                       for a in self.arrows],
        }


def build_rauzy_class(seed: PermutationPair,
                      max_vertices: int = 10**5) -> RauzyDiagram:
    """Breadth-first closure of a seed under R_t, R_b.

    Vertices are then ordered lexicographically on (top row, bottom row)
    so that diagram serialization does not depend on the seed chosen.
    """
    seen = {seed.key(): seed}
    queue = deque([seed])
    arrows = []
    while queue:
        pi = queue.popleft()
        for kind in (TOP, BOTTOM):
            arr = make_arrow(pi, kind)
            arrows.append(arr)
            k = arr.target.key()
            if k not in seen:
                if len(seen) >= max_vertices:
                    raise ValueError(
                        f"Rauzy class exceeds the vertex budget {max_vertices}")
                seen[k] = arr.target
                queue.append(arr.target)
    vertices = tuple(sorted(seen.values(), key=lambda v: v.key()))
    order = {v.key(): i for i, v in enumerate(vertices)}
    arrows.sort(key=lambda a: (order[a.source.key()], a.kind))
    return RauzyDiagram(vertices, tuple(arrows))


# ---------------------------------------------------------------------------
# The singularity permutation sigma on half-points


@dataclass(frozen=True)
class SigmaPermutation:
    mapping: tuple[tuple[HalfPoint, HalfPoint], ...]
    cycles: tuple[tuple[HalfPoint, ...], ...]

    @property
    def s(self) -> int:
        return len(self.cycles)

    def as_dict(self) -> dict[HalfPoint, HalfPoint]:
        return dict(self.mapping)

    def cycle_of(self, hp: HalfPoint) -> int:
        for i, cyc in enumerate(self.cycles):
            if hp in cyc:
                return i
        raise KeyError(hp)


def sigma_and_cycles(pi: PermutationPair) -> SigmaPermutation:
    """The permutation of A x {L,R} from the four clauses of section 3.1."""
    alpha_t, alpha_b = pi.top_last(), pi.bottom_last()
    t_alpha, b_alpha = pi.top_first(), pi.bottom_first()
    top = pi.top_order()
    bottom = pi.bottom_order()
    mapping: dict[HalfPoint, HalfPoint] = {}
    for a in pi.alphabet:
        if a == alpha_t:
            mapping[(a, "R")] = (alpha_b, "R")
        else:
            mapping[(a, "R")] = (top[pi.position_top(a)], "L")
        if a == b_alpha:
            mapping[(a, "L")] = (t_alpha, "L")
        else:
            mapping[(a, "L")] = (bottom[pi.position_bottom(a) - 2], "R")
    if sorted(mapping.values()) != sorted(mapping.keys()):
        raise AssertionError("sigma is not a permutation (implementation bug)")
    cycles = []
    remaining = set(mapping)
    while remaining:
        start = min(remaining)
        cyc = [start]
        remaining.discard(start)
        cur = mapping[start]
        while cur != start:
            cyc.append(cur)
            remaining.discard(cur)
            cur = mapping[cur]
        cycles.append(tuple(cyc))
    cycles.sort()
    return SigmaPermutation(tuple(sorted(mapping.items())), tuple(cycles))


def cycle_degrees(pi: PermutationPair,
                  sigma: SigmaPermutation | None = None) -> list[int]:
    """kappa_C per sigma-cycle: the cone angle of the marked point of cycle C
    is 2*pi*kappa_C. Counts the (alpha, R) half-points with alpha != alpha_t,
    i.e. the top singularities lying below that marked point."""
    sigma = sigma or sigma_and_cycles(pi)
    alpha_t = pi.top_last()
    return [sum(1 for (a, side) in cyc if side == "R" and a != alpha_t)
            for cyc in sigma.cycles]


# ---------------------------------------------------------------------------
# Omega, genus, marked points


def omega_matrix(pi: PermutationPair) -> list[list[int]]:
    d = pi.d
    om = [[0] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            ti, tj = pi.pi_top[i], pi.pi_top[j]
            bi, bj = pi.pi_bottom[i], pi.pi_bottom[j]
            if ti < tj and bi > bj:
                om[i][j] = 1
            elif ti > tj and bi < bj:
                om[i][j] = -1
    return om


def genus_and_marked_points(pi: PermutationPair) -> tuple[int, int]:
    """(g, s) with g from the exact rank of Omega and s from sigma's cycles.

    The identity d = 2g + s - 1 is asserted; a violation means a bug.
    """
    r = linalg.rank(omega_matrix(pi))
    if r % 2 != 0:
        raise AssertionError("rank of Omega must be even")
    g = r // 2
    s = sigma_and_cycles(pi).s
    if pi.d != 2 * g + s - 1:
        raise AssertionError(
            f"d = 2g+s-1 failed: d={pi.d}, g={g}, s={s} (implementation bug)")
    return g, s


# ---------------------------------------------------------------------------
# Kontsevich-Zorich cocycle matrices


def arrow_matrix(arrow: RauzyArrow) -> list[list[int]]:
    """B_arrow = I + E_{loser, winner} in the frozen alphabet basis."""
    d = arrow.source.d
    b = linalg.identity(d)
    i = arrow.source.alphabet.index(arrow.loser)
    j = arrow.source.alphabet.index(arrow.winner)
    b[i][j] += 1
    return b


def arrow_matrix_inverse(arrow: RauzyArrow) -> list[list[int]]:
    d = arrow.source.d
    b = linalg.identity(d)
    i = arrow.source.alphabet.index(arrow.loser)
    j = arrow.source.alphabet.index(arrow.winner)
    b[i][j] -= 1
    return b


def check_consecutive(path: Sequence[RauzyArrow]) -> None:
    for prev, nxt in zip(path, path[1:]):
        if prev.target.key() != nxt.source.key():
            raise ValueError("path arrows are not consecutive in the diagram")


def cocycle_matrix(path: Sequence[RauzyArrow] | RauzyArrow) -> list[list[int]]:
    """B_gamma for a single arrow or a consecutive path gamma_1..gamma_l,
    namely B_{gamma_l} ... B_{gamma_1} (later arrows act on the left)."""
    if isinstance(path, RauzyArrow):
        return arrow_matrix(path)
    path = list(path)
    if not path:
        raise ValueError("empty path has no distinguished alphabet")
    check_consecutive(path)
    b = linalg.identity(path[0].source.d)
    for arrow in path:
        b = linalg.mat_mul(arrow_matrix(arrow), b)
    return b


def cocycle_matrix_inverse(path: Sequence[RauzyArrow]) -> list[list[int]]:
    """Exact integer inverse of cocycle_matrix(path)."""
    path = list(path)
    check_consecutive(path)
    b = linalg.identity(path[0].source.d)
    for arrow in path:
        b = linalg.mat_mul(b, arrow_matrix_inverse(arrow))
    return b


# ---------------------------------------------------------------------------
# Completeness


@dataclass(frozen=True)
class CompletenessReport:
    complete_count: int
    cut_indices: tuple[int, ...]   # 1 past the end of each minimal complete prefix
    missing_letters: tuple[str, ...]  # letters that never won in the tail


def path_completeness(path: Sequence[RauzyArrow],
                      alphabet: Sequence[str] | None = None) -> CompletenessReport:
    """Greedy earliest-cut decomposition into minimal complete factors.

    A cut is placed at the earliest index where every letter has won at
    least once since the previous cut; the tail after the last cut reports
    which letters are still missing.
    """
    if alphabet is None:
        if not path:
            raise ValueError("need an alphabet for an empty path")
        alphabet = path[0].source.alphabet
    need = set(alphabet)
    seen: set[str] = set()
    cuts: list[int] = []
    for i, arrow in enumerate(path):
        seen.add(arrow.winner)
        if seen == need:
            cuts.append(i + 1)
            seen = set()
    tail_empty = bool(cuts) and cuts[-1] == len(path)
    missing = () if tail_empty else tuple(sorted(need - seen))
    return CompletenessReport(len(cuts), tuple(cuts), missing)
