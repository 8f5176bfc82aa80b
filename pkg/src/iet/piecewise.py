"""Piecewise functions on the top partition, and the boundary operator.

Two representations coexist:

- PiecewiseFunction: per-letter callables with derivative oracles, the
  general front door (smooth data, branch logarithms, coboundaries);
- PiecewisePoly: per-letter polynomials in the local coordinate
  tau = (x - left)/len of each interval. This is the solver's workhorse:
  special Birkhoff sums act on it exactly (sums of affine reparametrized
  pieces stay polynomials of the same degree), so S(l, n) never needs the
  ||B(n)|| orbit points that make pointwise evaluation intractable.

The boundary operator pairs one-sided limits with the cycles of the
singularity permutation sigma:

    (d phi)_C = sum_{v in C} eps(v) phi(v),  eps(a,L) = -1, eps(a,R) = +1.

It kills coboundaries and, restricted to Gamma, has kernel Im Omega(pi)
and image the zero-sum hyperplane of R^Sigma.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
from mpmath import mp

from . import taylor
from .combinatorics import SigmaPermutation, sigma_and_cycles
from .errors import DomainError
from .numeric import EXACT, NumericMode


@dataclass
class BoundaryVector:
    """One real component per sigma-cycle, in the cycle order of sigma."""

    values: tuple
    sigma: SigmaPermutation

    def __iter__(self):
        return iter(self.values)

    def total(self):
        return sum(self.values)

    def max_abs(self) -> float:
        return max(abs(float(v)) for v in self.values)


def eps(halfpoint) -> int:
    return -1 if halfpoint[1] == "L" else 1


class PiecewiseFunction:
    """A function on the disjoint union of the top intervals.

    evaluators[letter] is a callable x -> value; derivatives are served by
    `taylor_at` (override) or by the per-letter TSeries factory. Boundary
    values are the one-sided limits at each half-point, checked against a
    Richardson extrapolation of interior samples at construction.
    """

    def __init__(self, iem, evaluators: dict[str, Callable], order: int = 0,
                 taylor_factories: dict[str, Callable] | None = None,
                 check_boundary: bool = True):
        self.iem = iem
        self.order = order
        self.evaluators = dict(evaluators)
        self.taylor_factories = dict(taylor_factories or {})
        self.boundary_values = self._boundary_values()
        if check_boundary:
            self._check_boundary_consistency()

    # -- construction helpers

    @classmethod
    def from_global(cls, iem, fn, order: int = 0,
                    taylor_factory: Callable | None = None):
        """Restrict one function on the closed interval to every piece."""
        ev = {a: fn for a in iem.pi.alphabet}
        tf = {a: taylor_factory for a in iem.pi.alphabet} if taylor_factory \
            else None
        return cls(iem, ev, order, tf)

    @classmethod
    def from_gamma(cls, iem, vector: Sequence):
        """A per-interval constant (an element of Gamma ~ R^A)."""
        values = dict(zip(iem.pi.alphabet, vector))
        ev = {a: (lambda x, v=values[a]: v) for a in iem.pi.alphabet}
        tf = {a: (lambda x, order, v=values[a]:
                  taylor.TSeries.constant(v, order))
              for a in iem.pi.alphabet}
        return cls(iem, ev, order=10**6, taylor_factories=tf)

    @classmethod
    def coboundary(cls, iem, psi, dpsi_taylor: Callable | None = None,
                   order: int = 0):
        """psi o T - psi for a function psi on the closure of I."""
        def ev_for(a):
            def ev(x, a=a):
                lt, _ = _top_interval(iem, a)
                return psi(iem.branch_taylor(a, x, 0)[0]) - psi(x)
            return ev

        def tf_for(a):
            def tf(x, order, a=a):
                tx = iem.branch_taylor(a, x, order)
                inner = dpsi_taylor(tx[0], order)
                shifted = _compose_series(inner, tx)
                return shifted - dpsi_taylor(x, order)
            return tf

        ev = {a: ev_for(a) for a in iem.pi.alphabet}
        tf = {a: tf_for(a) for a in iem.pi.alphabet} if dpsi_taylor else None
        return cls(iem, ev, order, tf)

    # -- evaluation

    def letter_of(self, x, side: int = 1) -> str:
        return self.iem.letter_at(x, side=side)

    def __call__(self, x, side: int = 1):
        return self.evaluators[self.letter_of(x, side)](x)

    def taylor_at(self, x, order: int, side: int = 1) -> taylor.TSeries:
        a = self.letter_of(x, side)
        tf = self.taylor_factories.get(a)
        if tf is None:
            raise DomainError(f"no derivative oracle on piece {a!r}")
        return tf(x, order)

    def derivative(self, x, k: int = 1, side: int = 1):
        if k == 0:
            return self(x, side)
        return self.taylor_at(x, k, side).derivative_at_zero(k)

    # -- boundary values

    def _boundary_values(self) -> dict:
        out = {}
        for a in self.iem.pi.alphabet:
            left, right = _top_interval(self.iem, a)
            out[(a, "L")] = self.evaluators[a](left)
            out[(a, "R")] = self.evaluators[a](right)
        return out

    def _check_boundary_consistency(self):
        """Extrapolated interior samples must approach the declared limits."""
        for a in self.iem.pi.alphabet:
            left, right = _top_interval(self.iem, a)
            h = (right - left) / 1024
            for hp, x0, direction in (((a, "L"), left, 1), ((a, "R"), right, -1)):
                f1 = self.evaluators[a](x0 + direction * h)
                f2 = self.evaluators[a](x0 + direction * 2 * h)
                extrap = 2 * f1 - f2
                scale = 1 + abs(self.boundary_values[hp])
                if abs(extrap - self.boundary_values[hp]) > scale * 0.01:
                    raise DomainError(
                        f"boundary value at {hp} is inconsistent with the "
                        f"evaluator limit")

    def boundary(self) -> BoundaryVector:
        return boundary_from_values(self.iem.pi, self.boundary_values)


def _top_interval(iem, a):
    p = iem.pi.position_top(a)
    return iem.top_points[p - 1], iem.top_points[p]


def _compose_series(f: taylor.TSeries, g: taylor.TSeries) -> taylor.TSeries:
    """f expanded at g[0], composed with the increment of g."""
    order = min(f.order, g.order)
    dg = taylor.TSeries([g.zero_scalar] + list(g.coeffs[1:order + 1]))
    out = taylor.TSeries.constant(f[0], order)
    power = taylor.TSeries.constant(g.zero_scalar + 1, order)
    for k in range(1, order + 1):
        power = power * dg
        out = out + power * f[k]
    return out


def boundary_from_values(pi, values: dict) -> BoundaryVector:
    """Apply the defining formula of the boundary operator to one-sided
    limits given per half-point; also asserts the half-point sum identity
    sum_C (d phi)_C = sum_a (phi(a,R) - phi(a,L))."""
    sigma = sigma_and_cycles(pi)
    comps = []
    for cyc in sigma.cycles:
        comps.append(sum(eps(hp) * values[hp] for hp in cyc))
    total = sum(comps)
    direct = sum(values[(a, "R")] - values[(a, "L")] for a in pi.alphabet)
    scale = 1 + max(abs(v) for v in values.values())
    if abs(total - direct) > scale * 1e-12 and \
            abs(total - direct) > scale * mpmath.mpf(2) ** -40:
        raise AssertionError("boundary sum identity failed (bug)")
    return BoundaryVector(tuple(comps), sigma)


# ---------------------------------------------------------------------------
# Piecewise polynomials in local coordinates


class PiecewisePoly:
    """Per-letter polynomials q_a(tau), tau = (x - left_a)/len_a in [0, 1].

    Coefficients may be Fraction (exact geometry) or mpf; all operations
    stay in the scalar dialect of the inputs.
    """

    def __init__(self, iem, coeffs: dict[str, list]):
        self.iem = iem
        self.coeffs = {a: list(c) for a, c in coeffs.items()}

    @classmethod
    def zero(cls, iem, degree: int):
        z = iem.mode.zero() if hasattr(iem.mode, "zero") else 0
        return cls(iem, {a: [z * 0 for _ in range(degree + 1)]
                         for a in iem.pi.alphabet})

    @classmethod
    def from_gamma(cls, iem, vector: Sequence):
        return cls(iem, {a: [v] for a, v in zip(iem.pi.alphabet, vector)})

    @classmethod
    def project(cls, iem, fn: PiecewiseFunction | Callable, degree: int,
                prec: int | None = None):
        """Interpolate each piece at Chebyshev nodes of [0,1]; spectrally
        accurate for smooth data, exact for polynomials of degree <= degree."""
        coeffs = {}
        with _workprec(prec):
            nodes = _cheb_nodes(degree, prec)
            for a in iem.pi.alphabet:
                left, right = _top_interval(iem, a)
                ln = right - left
                if isinstance(fn, PiecewiseFunction):
                    values = [fn.evaluators[a](left + t * ln) for t in nodes]
                else:
                    values = [fn(left + t * ln) for t in nodes]
                coeffs[a] = _interp_coeffs(nodes, values)
        return cls(iem, coeffs)

    @property
    def degree(self) -> int:
        return max(len(c) - 1 for c in self.coeffs.values())

    def eval_local(self, a: str, tau):
        acc = self.coeffs[a][-1] * 0
        for c in reversed(self.coeffs[a]):
            acc = acc * tau + c
        return acc

    def __call__(self, x, side: int = 1):
        a = self.iem.letter_at(x, side=side)
        left, right = _top_interval(self.iem, a)
        return self.eval_local(a, (x - left) / (right - left))

    def derivative_global(self, x, k: int = 1, side: int = 1):
        a = self.iem.letter_at(x, side=side)
        left, right = _top_interval(self.iem, a)
        ln = right - left
        c = self.coeffs[a]
        for _ in range(k):
            c = [c[j] * j for j in range(1, len(c))] or [c[0] * 0]
        tau = (x - left) / ln
        acc = c[-1] * 0
        for v in reversed(c):
            acc = acc * tau + v
        return acc / ln ** k

    def means(self) -> dict:
        """Per-interval mean values (exact in the coefficients)."""
        out = {}
        for a, c in self.coeffs.items():
            out[a] = sum(v / (k + 1) for k, v in enumerate(c))
        return out

    def boundary_values(self) -> dict:
        out = {}
        for a, c in self.coeffs.items():
            out[(a, "L")] = c[0]
            out[(a, "R")] = sum(c)
        return out

    def boundary(self) -> BoundaryVector:
        return boundary_from_values(self.iem.pi, self.boundary_values())

    def sup_estimate(self, samples: int = 33) -> float:
        best = 0.0
        for a in self.coeffs:
            for i in range(samples + 1):
                v = abs(float(self.eval_local(a, Fraction(i, samples)
                                              if _is_exact(self) else
                                              i / samples)))
                best = max(best, v)
        return best

    def __add__(self, other):
        if isinstance(other, PiecewisePoly):
            return PiecewisePoly(self.iem, {
                a: _poly_add(self.coeffs[a], other.coeffs[a])
                for a in self.coeffs})
        raise TypeError

    def __sub__(self, other):
        if isinstance(other, PiecewisePoly):
            return PiecewisePoly(self.iem, {
                a: _poly_add(self.coeffs[a], [-c for c in other.coeffs[a]])
                for a in self.coeffs})
        raise TypeError

    def __mul__(self, scalar):
        return PiecewisePoly(self.iem, {a: [c * scalar for c in cs]
                                        for a, cs in self.coeffs.items()})

    def subtract_gamma(self, vector: dict):
        out = {a: list(cs) for a, cs in self.coeffs.items()}
        for a in out:
            out[a][0] = out[a][0] - vector[a]
        return PiecewisePoly(self.iem, out)


def _is_exact(poly: PiecewisePoly) -> bool:
    for cs in poly.coeffs.values():
        for c in cs:
            return isinstance(c, (Fraction, int))
    return True


def _poly_add(a, b):
    n = max(len(a), len(b))
    a = list(a) + [a[-1] * 0] * (n - len(a))
    b = list(b) + [b[-1] * 0] * (n - len(b))
    return [x + y for x, y in zip(a, b)]


def _poly_affine_substitute(c, a0, b0):
    """Coefficients of q(a0 + b0 * t) from those of q(t) (Horner)."""
    acc = [c[-1] * 0]
    for v in reversed(c):
        # acc = acc * (a0 + b0 t) + v
        shifted = [x * a0 for x in acc] + [acc[-1] * 0]
        for i in range(len(acc)):
            shifted[i + 1] += acc[i] * b0
        shifted[0] += v
        acc = shifted[:len(c)]
    return acc


def _workprec(prec):
    return mp.workprec(prec) if prec else mp.workprec(mp.prec)


def _cheb_nodes(degree, prec):
    n = degree + 1
    if prec:
        return [(1 + mpmath.cos(mpmath.pi * (2 * i + 1) / (2 * n))) / 2
                for i in range(n)]
    return [(1 + math.cos(math.pi * (2 * i + 1) / (2 * n))) / 2
            for i in range(n)]


def _interp_coeffs(nodes, values):
    """Monomial coefficients of the interpolating polynomial (Newton form
    expanded; degrees stay <= ~24 so conditioning is acceptable)."""
    n = len(nodes)
    divided = list(values)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            divided[i] = (divided[i] - divided[i - 1]) / (nodes[i] - nodes[i - j])
    coeffs = [divided[-1]]
    for i in range(n - 2, -1, -1):
        # coeffs = coeffs * (t - nodes[i]) + divided[i]
        new = [c * (-nodes[i]) for c in coeffs] + [coeffs[-1] * 0]
        for k in range(len(coeffs)):
            new[k + 1] += coeffs[k]
        new[0] += divided[i]
        coeffs = new
    return coeffs


# ---------------------------------------------------------------------------
# Special Birkhoff sums on polynomials


def special_birkhoff_poly(trace, l: int, n: int,
                          poly: PiecewisePoly) -> PiecewisePoly:
    """S(l, n) acting on a PiecewisePoly at level l, exactly.

    Each return leg of the Rokhlin tower is an affine change of local
    coordinate, so the sum is coefficient arithmetic: cost O(d |Z| p^2),
    independent of the T-return times.
    """
    from .induction import tower_floors
    lvl_l = trace.iem(l)
    lvl_n = trace.iem(n)
    floors = tower_floors(trace, l, n)
    out = {}
    with trace.mode.workprec():
        for a in lvl_n.pi.alphabet:
            p = lvl_n.pi.position_top(a)
            left_n = lvl_n.top_points[p - 1]
            len_n = lvl_n.top_points[p] - left_n
            acc = None
            pos = left_n
            for letter, shift in floors[a]:
                q = lvl_l.pi.position_top(letter)
                left_l = lvl_l.top_points[q - 1]
                len_l = lvl_l.top_points[q] - left_l
                a0 = (pos - left_l) / len_l
                b0 = len_n / len_l
                piece = _poly_affine_substitute(poly.coeffs[letter], a0, b0)
                acc = piece if acc is None else _poly_add(acc, piece)
                pos = pos + shift
            out[a] = acc
    return PiecewisePoly(lvl_n, out)
