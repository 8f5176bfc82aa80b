"""Canonical suspension to a translation surface, and its diagnostics.

The canonical data tau_a = pi_b(a) - pi_t(a) turns a standard i.e.m. into
a polygon bounded by two polygonal lines (partial sums of zeta = lambda +
i tau); gluing equally-labeled sides gives a translation surface whose
marked points are the sigma-cycles.

The geometry is arranged so every vertical-flow question reduces to base
dynamics: each top singularity u^t_i sits directly below a polygon vertex
and each u^b_j directly above one, so vertical leaves are T-orbits of
base points plus short vertical stubs. Segments are supported on the base
line y = 0 (any horizontal line is flow-conjugate to it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from . import linalg
from .combinatorics import cycle_degrees, genus_and_marked_points, omega_matrix, sigma_and_cycles
from .errors import ConnectionFound, DomainError
from .iem import StandardIEM
from .induction import (
    cocycle_norm,
    entrance_time_backward,
    entrance_time_forward,
    iterate_rv,
)


@dataclass
class TranslationSurfaceModel:
    iem: StandardIEM
    tau: dict
    top_vertices: list          # (x, y) partial sums along the top line
    bottom_vertices: list
    heights: dict               # h = -Omega tau per letter (return times)
    genus: int
    marked_points: int
    cone_angles: list           # 2 pi kappa_C per sigma-cycle
    area: object

    def to_json(self) -> dict:
        from .numeric import scalar_json
        return {
            "iem": self.iem.to_json(),
            "tau": {a: int(v) for a, v in self.tau.items()},
            "top_vertices": [[scalar_json(x), int(y)]
                             for x, y in self.top_vertices],
            "bottom_vertices": [[scalar_json(x), int(y)]
                                for x, y in self.bottom_vertices],
            "genus": self.genus,
            "marked_points": self.marked_points,
            "cone_angles_over_2pi": [int(k) for k in self.cone_angles],
            "area": scalar_json(self.area),
        }


def suspend(iem: StandardIEM) -> TranslationSurfaceModel:
    """Build the canonical suspension; fails if the canonical tau vector is
    not valid suspension data for this vertex (then another combinatorial
    representative of the class must be chosen)."""
    pi = iem.pi
    tau = {a: pi.position_bottom(a) - pi.position_top(a) for a in pi.alphabet}
    top_vertices = [(iem.mode.zero(), 0)]
    for a in pi.top_order():
        x, y = top_vertices[-1]
        top_vertices.append((x + iem.lengths[a], y + tau[a]))
    bottom_vertices = [(iem.mode.zero(), 0)]
    for a in pi.bottom_order():
        x, y = bottom_vertices[-1]
        bottom_vertices.append((x + iem.lengths[a], y + tau[a]))
    for k in range(1, pi.d):
        if not top_vertices[k][1] > 0:
            raise DomainError(
                "canonical suspension invalid: top line dips at position "
                f"{k}; pick another representative of the Rauzy class")
        if not bottom_vertices[k][1] < 0:
            raise DomainError(
                "canonical suspension invalid: bottom line rises at position "
                f"{k}; pick another representative of the Rauzy class")
    if top_vertices[-1][1] != 0 or bottom_vertices[-1][1] != 0:
        raise AssertionError("polygonal lines must close up (sum tau = 0)")
    om = omega_matrix(pi)
    tau_vec = [tau[a] for a in pi.alphabet]
    heights = {a: -v for a, v in
               zip(pi.alphabet, linalg.mat_vec(om, tau_vec))}
    if any(h <= 0 for h in heights.values()):
        raise AssertionError("heights -Omega tau must be positive")
    g, s = genus_and_marked_points(pi)
    kappas = cycle_degrees(pi)
    area = sum(iem.lengths[a] * heights[a] for a in pi.alphabet)
    shoelace = _polygon_area(top_vertices, bottom_vertices)
    scale = abs(area) + 1
    if abs(shoelace - area) > scale * (mpmath.mpf(2) ** -40
                                       if not iem.mode.is_exact else 0):
        raise AssertionError("shoelace and pairing areas disagree")
    return TranslationSurfaceModel(iem, tau, top_vertices, bottom_vertices,
                                   heights, g, s, kappas, area)


def _polygon_area(top_vertices, bottom_vertices):
    """Shoelace area of the suspension polygon (counterclockwise loop:
    bottom line left to right, then top line right to left)."""
    loop = list(bottom_vertices) + list(reversed(top_vertices))[1:]
    acc = 0
    for (x1, y1), (x2, y2) in zip(loop, loop[1:] + loop[:1]):
        acc += x1 * y2 - x2 * y1
    return acc / 2


# ---------------------------------------------------------------------------
# Vertical leaves through the base line


def _sigma_feet_up(iem):
    """Base points whose upward stub ends at a marked point."""
    return set(iem.top_points[1:-1]) | {iem.top_points[0], iem.top_points[-1]}


def _sigma_feet_down(iem):
    return set(iem.bottom_points[1:-1]) | {iem.top_points[0],
                                           iem.top_points[-1]}


@dataclass
class GoodPositionSegment:
    a: object
    b: object
    verdict: str                     # "good" | "bad" | "unknown"
    endpoint_witnesses: list         # per endpoint: (direction, steps) or None
    connection_checked_depth: int
    failing_connection: tuple | None = None


def good_position_check(surface: TranslationSurfaceModel, a, b,
                        depth: int = 1000) -> GoodPositionSegment:
    """Def 8.4 for segments on the base line.

    Condition (2) is decided exactly by tracing the endpoint leaves to the
    marked-point feet; condition (1) is checked against the vertical
    connections discovered within the given depth, so the verdict is
    three-state.
    """
    iem = surface.iem
    with iem.mode.workprec():
        a, b = iem.mode.coerce(a), iem.mode.coerce(b)
        if not a < b:
            raise DomainError("segment endpoints must be increasing")
        if a < 0 or b > iem.total:
            raise DomainError("segment outside the base interval")
        witnesses = []
        ok2 = True
        unknown = False
        for e in (a, b):
            w = _endpoint_to_sigma(iem, e, a, b, depth)
            witnesses.append(w)
            if w is None:
                ok2 = False
            elif w == "unknown":
                unknown = True
        failing = None
        ups = iem.bottom_points[1:-1]
        tops = set(iem.top_points[1:-1])
        for j, ub in enumerate(ups, start=1):
            x = ub
            crossings_inside = (a < x < b)
            for m in range(1, depth + 1):
                x = iem.evaluate(x, side=1)
                if x in tops:
                    if not crossings_inside and not (a < x < b):
                        failing = (j, m)
                    break
                if a < x < b:
                    crossings_inside = True
        if not ok2 or failing is not None:
            verdict = "bad"
        elif unknown:
            verdict = "unknown"
        else:
            verdict = "good"
        return GoodPositionSegment(a, b, verdict, witnesses, depth, failing)


def _endpoint_to_sigma(iem, e, a, b, depth):
    """A vertical route from the endpoint to a marked point avoiding the
    open segment; returns (direction, steps), None (definitely bad), or
    "unknown" at depth."""
    feet_up = _sigma_feet_up(iem)
    feet_down = _sigma_feet_down(iem)
    if e in feet_up or e in feet_down:
        return ("here", 0)
    results = []
    x = e
    for m in range(depth):
        if x in feet_up:
            return ("up", m)
        if m > 0 and a < x < b:
            results.append("blocked")
            break
        x = iem.evaluate(x, side=1)
    else:
        results.append("unknown")
    x = e
    for m in range(depth):
        if x in feet_down:
            return ("down", m)
        if m > 0 and a < x < b:
            results.append("blocked")
            break
        x = iem.invert(x, side=1)
    else:
        results.append("unknown")
    if "unknown" in results:
        return "unknown"
    return None


def _near_any(x, points, tol):
    if tol == 0:
        return x in points
    return any(abs(x - p) <= tol for p in points)


# ---------------------------------------------------------------------------
# First-return map of the vertical flow on a base segment


def vertical_return_map(surface: TranslationSurfaceModel, a, b,
                        max_passes: int = 10**5) -> StandardIEM:
    """First-return map of the vertical flow on the open segment (a, b) of
    the base line, as a standard i.e.m. (exact in rational mode).

    A leaf hitting a marked point is a connection and is reported."""
    iem = surface.iem
    with iem.mode.workprec():
        a, b = iem.mode.coerce(a), iem.mode.coerce(b)
        if not a < b or a < 0 or b > iem.total:
            raise DomainError("invalid segment")
        tol = iem.mode.tiny() * iem.total if not iem.mode.is_exact else 0
        down_feet = set(iem.bottom_points[1:-1]) | {iem.top_points[0],
                                                    iem.top_points[-1]}
        up_feet = set(iem.top_points[1:-1]) | {iem.top_points[0],
                                               iem.top_points[-1]}
        cuts = set()
        candidates = [(p, 1) for p in iem.top_points[1:-1]]
        candidates += [(a, 1), (b, -1)]  # the b-leaf is traced as a left limit
        for p, side in candidates:
            x = p
            for m in range(max_passes):
                if a <= x < b and not (m == 0 and (p == a or p == b)):
                    if x != a:
                        cuts.add(x)
                    break
                if m > 0 and _near_any(x, down_feet, tol):
                    raise ConnectionFound(
                        f"backward leaf from {p} hits a marked point",
                        report=(p, m))
                try:
                    x = iem.invert(x, side=side)
                except DomainError:
                    raise ConnectionFound(
                        f"backward leaf from {p} hits a marked point",
                        report=(p, m))
            else:
                raise ConnectionFound(
                    f"backward leaf from {p} never meets the segment "
                    f"within {max_passes} passes (periodic leaf?)",
                    report=(p, max_passes))
        # fuse cuts separated only by arithmetic noise
        ordered = []
        for c in sorted(cuts):
            if ordered and c - ordered[-1] <= tol:
                continue
            if c - a <= tol or b - c <= tol:
                continue
            ordered.append(c)
        points = [a] + ordered + [b]
        pieces = []
        for left, right in zip(points, points[1:]):
            mid = (left + right) / 2
            x = mid
            passes = 0
            for m in range(max_passes):
                if _near_any(x, up_feet, tol) and m > 0:
                    raise ConnectionFound(
                        f"forward leaf from {mid} hits a marked point",
                        report=(mid, m))
                x = iem.evaluate(x, side=1)
                passes += 1
                if a <= x < b:
                    break
            else:
                raise DomainError("forward tracing exceeded max_passes")
            pieces.append({"left": left, "right": right,
                           "shift": x - mid, "passes": passes})
        # merge spurious cuts: adjacent pieces continuing the same branch
        merged = [pieces[0]]
        for q in pieces[1:]:
            last = merged[-1]
            if q["shift"] == last["shift"] and q["passes"] == last["passes"]:
                last["right"] = q["right"]
            else:
                merged.append(q)
        names = [f"I{k+1}" for k in range(len(merged))]
        lengths = {nm: q["right"] - q["left"]
                   for nm, q in zip(names, merged)}
        order_bottom = [nm for nm, _ in sorted(
            zip(names, merged), key=lambda t: t[1]["left"] + t[1]["shift"])]
        from .combinatorics import PermutationPair
        pi = PermutationPair.from_orders(names, order_bottom, names)
        out = StandardIEM(pi, lengths, iem.mode)
        # verify the tiling: images must partition (0, b-a) after shifting
        imgs = sorted((q["left"] + q["shift"] - a,
                       q["right"] + q["shift"] - a) for q in merged)
        tol = iem.mode.tiny(40) if not iem.mode.is_exact else 0
        cursor = 0
        for lo, hi in imgs:
            if abs(lo - cursor) > tol:
                raise AssertionError("return-map images do not tile the segment")
            cursor = hi
        return out


# ---------------------------------------------------------------------------
# Appendix C diagnostics


@dataclass
class AppendixCDiagnostics:
    orbit_checkpoints: list[int]
    separation: list[float]          # s(N) = min |T^l(u^b_i) - u^t_j|
    covering: list[float]            # c(N) via a grid of targets
    level_indices: list[int]
    entrance_ratio: list[float]      # log r_i(n) / log ||B(n)||, min over i
    balance_ratio: list[float]       # max/min interval length per level
    separation_slope: float
    covering_slope: float

    def rows(self):
        out = []
        for n, s, c in zip(self.orbit_checkpoints, self.separation,
                           self.covering):
            out.append({"N_or_n": n, "separation": s, "covering": c,
                        "entrance_ratio": "", "balance_ratio": ""})
        for n, e, bal in zip(self.level_indices, self.entrance_ratio,
                             self.balance_ratio):
            out.append({"N_or_n": n, "separation": "", "covering": "",
                        "entrance_ratio": e, "balance_ratio": bal})
        return out


def appendix_c_diagnostics(iem: StandardIEM, n_orbit: int = 20000,
                           trace=None, levels: Sequence[int] | None = None,
                           grid: int = 257) -> AppendixCDiagnostics:
    """Quantitative minimality diagnostics.

    Orbit side: separation and covering series over the forward orbits of
    the u^b_i, at logarithmic checkpoints up to n_orbit. Level side: exact
    entrance times into I^(n) (via the Rokhlin towers) against ||B(n)||,
    and the length-balance ratio.
    """
    checkpoints = sorted({int(round(10 ** (e / 8)))
                          for e in range(8, int(8 * math.log10(n_orbit)) + 1)}
                         | {n_orbit})
    checkpoints = [c for c in checkpoints if 10 <= c <= n_orbit]
    with iem.mode.workprec():
        tops = [float(u) for u in iem.top_singularities()]
        pts: list[float] = []
        orbits = [u for u in iem.bottom_singularities()]
        sep = None
        sep_series, cov_series = [], []
        targets = np.linspace(0.0, float(iem.total), grid)
        ci = 0
        collected = []
        for m in range(checkpoints[-1]):
            for k in range(len(orbits)):
                xf = float(orbits[k])
                collected.append(xf)
                for u in tops:
                    gap = abs(xf - u)
                    if sep is None or gap < sep:
                        sep = gap
                orbits[k] = iem.evaluate(orbits[k], side=1)
            if ci < len(checkpoints) and m + 1 == checkpoints[ci]:
                arr = np.sort(np.array(collected))
                idx = np.searchsorted(arr, targets)
                left = arr[np.clip(idx - 1, 0, len(arr) - 1)]
                right = arr[np.clip(idx, 0, len(arr) - 1)]
                dists = np.minimum(np.abs(targets - left),
                                   np.abs(targets - right))
                cov_series.append(float(dists.max()))
                sep_series.append(float(sep))
                ci += 1
    level_indices, entrance, balance = [], [], []
    if trace is not None:
        levels = levels or list(range(4, trace.depth - 1, 4))
        with iem.mode.workprec():
            for n in levels:
                logb = math.log(cocycle_norm(trace.cocycle(0, n)))
                if logb <= 0:
                    continue
                rs = []
                for ub in iem.bottom_singularities():
                    rs.append(entrance_time_forward(trace, ub, n))
                for ut in iem.top_singularities():
                    rs.append(entrance_time_backward(trace, ut, n, side=-1))
                worst = min(math.log(max(r, 1)) / logb for r in rs)
                level_indices.append(n)
                entrance.append(worst)
                lens = [trace.iem(n).lengths[x] for x in iem.pi.alphabet]
                balance.append(float(max(lens) / min(lens)))
    sep_slope = _loglog_slope(checkpoints, sep_series)
    cov_slope = _loglog_slope(checkpoints, cov_series)
    return AppendixCDiagnostics(checkpoints, sep_series, cov_series,
                                level_indices, entrance, balance,
                                sep_slope, cov_slope)


def _loglog_slope(xs, ys) -> float:
    lx = [math.log(x) for x in xs]
    ly = [math.log(max(y, 1e-300)) for y in ys]
    n = len(lx)
    lx, ly = lx[n // 2:], ly[n // 2:]
    mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
    den = sum((x - mx) ** 2 for x in lx)
    return sum((x - mx) * (y - my) for x, y in zip(lx, ly)) / den
