"""Standard and generalized interval exchange maps.

A StandardIEM carries exact (or bigfloat) length data; its branches are
translations and everything about it is arithmetic. A GeneralizedIEM carries
the two singularity point lists plus one monotone branch per letter, each
with a Taylor-series derivative oracle through a declared order.

Evaluation treats intervals as half-open [left, right): `evaluate(x)` with
no side raises on an exact top-singularity hit in exact mode, while
`evaluate(x, side=+1/-1)` requests the one-sided limit (used by induction,
boundary values and orbit tracing).
"""
from __future__ import annotations

import bisect
import math
from typing import Callable, Sequence

import mpmath

from . import taylor
from .combinatorics import PermutationPair
from .errors import DomainError, PrecisionExhausted
from .numeric import EXACT, NumericMode, bigfloat, scalar_from_json, scalar_json


class StandardIEM:
    def __init__(self, pi: PermutationPair, lengths: dict, mode: NumericMode = EXACT):
        self.pi = pi
        self.mode = mode
        with mode.workprec():
            self.lengths = {a: mode.coerce(lengths[a]) for a in pi.alphabet}
            for a, lam in self.lengths.items():
                if not lam > 0:
                    raise DomainError(f"length of interval {a!r} must be positive")
            self.total = sum(self.lengths.values())
            self.top_points = self._points(pi.top_order())
            self.bottom_points = self._points(pi.bottom_order())
            self.translations = {
                a: self.bottom_points[pi.position_bottom(a) - 1]
                - self.top_points[pi.position_top(a) - 1]
                for a in pi.alphabet
            }

    def _points(self, order) -> list:
        pts = [self.mode.zero()]
        for a in order:
            pts.append(pts[-1] + self.lengths[a])
        return pts

    @property
    def d(self) -> int:
        return self.pi.d

    @property
    def is_standard(self) -> bool:
        return True

    def top_singularities(self) -> list:
        return self.top_points[1:-1]

    def bottom_singularities(self) -> list:
        return self.bottom_points[1:-1]

    def _clamp(self, x, pts):
        """Pull a point overshooting the ends by arithmetic noise back in."""
        if self.mode.is_exact:
            return x
        slack = self.mode.tiny(8) * self.total
        if pts[0] - slack <= x < pts[0]:
            return pts[0]
        if pts[-1] < x <= pts[-1] + slack:
            return pts[-1]
        return x

    def letter_at(self, x, side: int = 1, bottom: bool = False) -> str:
        """Letter of the (half-open) interval containing x."""
        pts = self.bottom_points if bottom else self.top_points
        order = self.pi.bottom_order() if bottom else self.pi.top_order()
        x = self._clamp(x, pts)
        if x < pts[0] or x > pts[-1]:
            raise DomainError(f"point {x} outside the interval")
        if side >= 0:
            if x == pts[-1]:
                raise DomainError(f"point {x} has no right limit at the interval end")
            i = bisect.bisect_right(pts, x) - 1
        else:
            if x == pts[0]:
                raise DomainError(f"point {x} has no left limit at the interval start")
            i = bisect.bisect_left(pts, x) - 1
        return order[i]

    def evaluate(self, x, side: int | None = None):
        if side is None:
            if x in self.top_points[1:-1]:
                raise DomainError(f"point {x} is a singularity of T")
            side = 1
        a = self.letter_at(x, side=side)
        with self.mode.workprec():
            return self._clamp(x, self.top_points) + self.translations[a]

    def invert(self, y, side: int | None = None):
        if side is None:
            if y in self.bottom_points[1:-1]:
                raise DomainError(f"point {y} is a singularity of T^-1")
            side = 1
        a = self.letter_at(y, side=side, bottom=True)
        with self.mode.workprec():
            return self._clamp(y, self.bottom_points) - self.translations[a]

    def branch_taylor(self, letter: str, x, order: int) -> taylor.TSeries:
        return taylor.TSeries.variable(x, order) + self.translations[letter]

    def branch_derivative(self, letter: str, x, k: int):
        if k == 0:
            return x + self.translations[letter]
        if k == 1:
            return self.mode.zero() + 1
        return self.mode.zero()

    def normalized(self) -> "StandardIEM":
        with self.mode.workprec():
            return StandardIEM(
                self.pi, {a: v / self.total for a, v in self.lengths.items()},
                self.mode)

    def to_json(self) -> dict:
        obj = self.pi.to_json()
        obj["lengths"] = {a: scalar_json(v) for a, v in self.lengths.items()}
        if not self.mode.is_exact:
            obj["bits"] = self.mode.bits
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "StandardIEM":
        pi = PermutationPair.from_json(obj)
        mode = bigfloat(obj["bits"]) if "bits" in obj else EXACT
        if any(isinstance(v, dict) for v in obj["lengths"].values()) \
                and mode.is_exact:
            mode = bigfloat()
        lengths = {a: scalar_from_json(v, mode)
                   for a, v in obj["lengths"].items()}
        return cls(pi, lengths, mode)


# ---------------------------------------------------------------------------
# Branches for generalized maps


def pi_like(x):
    """The constant pi in the scalar dialect of x."""
    return math.pi if isinstance(x, float) else +mpmath.pi


class Branch:
    """Monotone C^r map from [left, right] onto [bottom_left, bottom_right].

    Subclasses implement `taylor_at(x, order)` returning the expansion of
    T(x + t); everything else (values, derivatives, numeric inverse) derives
    from it.
    """

    order = 16

    def __init__(self, left, right, image_left, image_right):
        self.left, self.right = left, right
        self.image_left, self.image_right = image_left, image_right

    def taylor_at(self, x, order: int) -> taylor.TSeries:
        raise NotImplementedError

    def __call__(self, x):
        return self.taylor_at(x, 0)[0]

    def derivative(self, x, k: int = 1):
        return self.taylor_at(x, k).derivative_at_zero(k)

    def inverse(self, y, tol):
        """Monotone bisection + Newton polish."""
        lo, hi = self.left, self.right
        slack = (self.image_right - self.image_left) * 1e-12
        if self.image_left - slack <= y < self.image_left:
            y = self.image_left
        elif self.image_right < y <= self.image_right + slack:
            y = self.image_right
        if not (self.image_left <= y <= self.image_right):
            raise DomainError(f"{y} outside branch image")
        for _ in range(80):
            mid = (lo + hi) / 2
            if self(mid) < y:
                lo = mid
            else:
                hi = mid
            if hi - lo < tol:
                break
        x = (lo + hi) / 2
        for _ in range(6):
            fx, dfx = self(x) - y, self.derivative(x, 1)
            if dfx == 0:
                break
            x = x - fx / dfx
            x = min(max(x, self.left), self.right)
        return x

    def check_monotone(self, samples: int = 33) -> None:
        step = (self.right - self.left) / samples
        for i in range(samples + 1):
            x = self.left + step * i
            if not self.derivative(x, 1) > 0:
                raise DomainError("branch has a nonpositive derivative sample")


class TranslationBranch(Branch):
    def __init__(self, left, right, delta):
        super().__init__(left, right, left + delta, right + delta)
        self.delta = delta

    def taylor_at(self, x, order):
        return taylor.TSeries.variable(x, order) + self.delta


class AffineBranch(Branch):
    def __init__(self, left, right, image_left, slope):
        super().__init__(left, right, image_left,
                         image_left + slope * (right - left))
        self.slope = slope

    def taylor_at(self, x, order):
        t = taylor.TSeries.variable(x, order)
        return (t - self.left) * self.slope + self.image_left


class BumpBranch(Branch):
    """x + eps * sin(pi (x-l)/L)^m on top of the affine endpoint matching.

    The bump vanishes at both endpoints; for m >= r+1 it is flat to order r,
    so the branch has identity-like jets there.
    """

    def __init__(self, left, right, image_left, image_right, eps, power=2):
        super().__init__(left, right, image_left, image_right)
        self.eps, self.power = eps, int(power)

    def taylor_at(self, x, order):
        t = taylor.TSeries.variable(x, order)
        length = self.right - self.left
        u = (t - self.left) / length
        base = self.image_left + (self.image_right - self.image_left) * u
        bump = taylor.sin(u * pi_like(u[0])).power_int(self.power) * self.eps
        return base + bump


class MoebiusBranch(Branch):
    """Moebius reparametrization u -> u(1+c)/(1+cu) of the matched affine map."""

    def __init__(self, left, right, image_left, image_right, c):
        super().__init__(left, right, image_left, image_right)
        if not c > -1:
            raise DomainError("moebius parameter must exceed -1")
        self.c = c

    def taylor_at(self, x, order):
        t = taylor.TSeries.variable(x, order)
        u = (t - self.left) / (self.right - self.left)
        w = u * (1 + self.c) / (u * self.c + 1)
        return self.image_left + (self.image_right - self.image_left) * w


class PolyBranch(Branch):
    """u + u(1-u) * p(u) reparametrization with polynomial p."""

    def __init__(self, left, right, image_left, image_right, coeffs: Sequence):
        super().__init__(left, right, image_left, image_right)
        self.coeffs = list(coeffs)

    def taylor_at(self, x, order):
        t = taylor.TSeries.variable(x, order)
        u = (t - self.left) / (self.right - self.left)
        p = taylor.TSeries.constant(u.zero_scalar, order)
        for c in reversed(self.coeffs):
            p = p * u + c
        w = u + u * (1 - u) * p
        return self.image_left + (self.image_right - self.image_left) * w


class ComposedBranch(Branch):
    def __init__(self, outer: Branch, inner: Branch, depth_cap: int = 10**4):
        super().__init__(inner.left, inner.right,
                         outer(inner.image_left), outer(inner.image_right))
        self.outer, self.inner = outer, inner
        self.depth = 1 + getattr(outer, "depth", 0) + getattr(inner, "depth", 0)
        if self.depth > depth_cap:
            raise PrecisionExhausted("branch composition depth cap exceeded")

    def taylor_at(self, x, order):
        g = self.inner.taylor_at(x, order)
        f = self.outer.taylor_at(g[0], order)
        # compose: f(g(x+t) - g(x) shifted); f is expanded at g(x).
        dg = taylor.TSeries([g.zero_scalar] + g.coeffs[1:])
        out = taylor.TSeries.constant(f[0], order)
        power = taylor.TSeries.constant(g.zero_scalar + 1, order)
        for k in range(1, order + 1):
            power = power * dg
            out = out + power * f[k]
        return out


class RestrictedBranch(Branch):
    """A branch restricted to a subinterval of its domain."""

    def __init__(self, base: Branch, left, right):
        super().__init__(left, right, base(left), base(right))
        self.base = base
        self.depth = getattr(base, "depth", 0)

    def taylor_at(self, x, order):
        return self.base.taylor_at(x, order)


BRANCH_FAMILIES: dict[str, Callable] = {
    "translation": TranslationBranch,
    "affine": AffineBranch,
    "bump": BumpBranch,
    "moebius": MoebiusBranch,
    "poly": PolyBranch,
}


class GeneralizedIEM:
    def __init__(self, pi: PermutationPair, top_points: Sequence,
                 bottom_points: Sequence, branches: dict[str, Branch],
                 mode: NumericMode | None = None, order: int = 5,
                 validate: bool = True):
        self.pi = pi
        self.mode = mode or bigfloat()
        self.top_points = list(top_points)
        self.bottom_points = list(bottom_points)
        self.branches = dict(branches)
        self.order = order
        with self.mode.workprec():
            self.total = self.top_points[-1] - self.top_points[0]
            if validate:
                self._validate()

    def _validate(self):
        tol = self.mode.tiny(48) * max(1, abs(self.total))
        if self.top_points[0] != self.bottom_points[0] or \
                abs(self.top_points[-1] - self.bottom_points[-1]) > tol:
            raise DomainError("top and bottom partitions span different intervals")
        for a in self.pi.alphabet:
            br = self.branches[a]
            lt, rt = self.top_interval(a)
            lb, rb = self.bottom_interval(a)
            for got, want in ((br(lt), lb), (br(rt), rb)):
                if abs(got - want) > tol:
                    raise DomainError(
                        f"branch {a!r} endpoint image off by {abs(got - want)}")
            br.check_monotone()

    @property
    def d(self) -> int:
        return self.pi.d

    @property
    def is_standard(self) -> bool:
        return False

    def top_interval(self, a: str):
        p = self.pi.position_top(a)
        return self.top_points[p - 1], self.top_points[p]

    def bottom_interval(self, a: str):
        p = self.pi.position_bottom(a)
        return self.bottom_points[p - 1], self.bottom_points[p]

    def top_singularities(self) -> list:
        return self.top_points[1:-1]

    def bottom_singularities(self) -> list:
        return self.bottom_points[1:-1]

    def letter_at(self, x, side: int = 1, bottom: bool = False) -> str:
        pts = self.bottom_points if bottom else self.top_points
        order = self.pi.bottom_order() if bottom else self.pi.top_order()
        if x < pts[0] or x > pts[-1]:
            raise DomainError(f"point {x} outside the interval")
        if side >= 0:
            if x == pts[-1]:
                raise DomainError(f"point {x} has no right limit at the interval end")
            i = bisect.bisect_right(pts, x) - 1
        else:
            if x == pts[0]:
                raise DomainError(f"point {x} has no left limit at the interval start")
            i = bisect.bisect_left(pts, x) - 1
        return order[i]

    def evaluate(self, x, side: int | None = None):
        if side is None:
            if any(x == u for u in self.top_points[1:-1]):
                raise DomainError(f"point {x} is a singularity of T")
            side = 1
        with self.mode.workprec():
            return self.branches[self.letter_at(x, side=side)](x)

    def invert(self, y, side: int | None = None):
        if side is None:
            side = 1
        a = self.letter_at(y, side=side, bottom=True)
        with self.mode.workprec():
            return self.branches[a].inverse(y, self.mode.tiny(8))

    def branch_taylor(self, letter: str, x, order: int) -> taylor.TSeries:
        with self.mode.workprec():
            return self.branches[letter].taylor_at(x, order)

    def branch_derivative(self, letter: str, x, k: int = 1):
        with self.mode.workprec():
            return self.branches[letter].derivative(x, k)


# ---------------------------------------------------------------------------
# Connection detection


class ConnectionReport:
    """Result of searching for T^m(u^b_j) = u^t_i with m <= depth."""

    def __init__(self, found, witness, depth_searched, min_gap):
        self.found = found
        self.witness = witness  # (i, j, m), 1-based singularity indices
        self.depth_searched = depth_searched
        self.min_gap = min_gap

    def __repr__(self):
        return (f"ConnectionReport(found={self.found}, witness={self.witness}, "
                f"depth_searched={self.depth_searched}, min_gap={self.min_gap})")


def detect_connection(iem, depth: int) -> ConnectionReport:
    """Search the forward orbits of the u^b_j for hits on the u^t_i.

    Exact mode is definitive up to the stated depth. In bigfloat mode a gap
    below 2**(-bits/2) is flagged as a hit; the verdict is a documented
    heuristic, and min_gap is reported either way.
    """
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    mode = iem.mode
    with mode.workprec():
        tops = iem.top_singularities()
        threshold = None if mode.is_exact else mpmath.mpf(2) ** (-mode.bits // 2)
        min_gap = None
        best = None
        for j, ub in enumerate(iem.bottom_singularities(), start=1):
            x = ub
            for m in range(depth + 1):
                for i, ut in enumerate(tops, start=1):
                    gap = abs(x - ut)
                    if min_gap is None or gap < min_gap:
                        min_gap = gap
                    hit = (gap == 0) if mode.is_exact else (gap < threshold)
                    if hit and best is None:
                        best = (i, j, m)
                if best is not None:
                    break
                if m < depth:
                    x = iem.evaluate(x, side=1)
            if best is not None:
                break
        if best is not None:
            i, j, m = best
            x = iem.bottom_singularities()[j - 1]
            for _ in range(m):
                x = iem.evaluate(x, side=1)
            gap = abs(x - tops[i - 1])
            ok = (gap == 0) if mode.is_exact else (gap < threshold)
            if not ok:
                raise AssertionError("connection witness failed re-evaluation")
            return ConnectionReport(True, best, m, min_gap)
        return ConnectionReport(False, None, depth, min_gap)
