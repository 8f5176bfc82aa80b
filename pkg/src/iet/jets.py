"""The jet group and the conjugacy invariant of generalized i.e.m.'s.

An r-jet is the truncated expansion a_1 x + a_2 x^2 + ... + a_r x^r of an
orientation-preserving germ fixing 0 (a_1 > 0); composition and inversion
are truncated series operations. Per half-point v the map carries the jet
of x -> T(u^t(v) + x) - u^b(v); the signed, sigma-cycle-ordered product

    J(T, C) = j(v_0)^eps(v_0) o j(v_1)^eps(v_1) o ...

is a conjugacy invariant up to J^r-conjugacy, also preserved by one
Rauzy-Veech step. The conjugacy classes are: the identity, a linear jet,
or the parabolic normal form x +- x^k + a x^(2k-1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
from mpmath import mp

from .combinatorics import sigma_and_cycles
from .errors import DomainError
from .piecewise import PiecewiseFunction, boundary_from_values, eps


class Jet:
    """Coefficients (a_1, ..., a_r) of an orientation-preserving germ."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        self.coeffs = list(coeffs)
        if not self.coeffs:
            raise DomainError("a jet needs at least the linear coefficient")
        if not self.coeffs[0] > 0:
            raise DomainError("jets must be orientation preserving (a_1 > 0)")

    @classmethod
    def identity(cls, order: int, one=1) -> "Jet":
        return cls([one] + [one * 0] * (order - 1))

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def __repr__(self):
        return f"Jet({[float(c) for c in self.coeffs]})"

    def compose(self, other: "Jet") -> "Jet":
        """self o other, truncated at the common order."""
        if self.order != other.order:
            raise DomainError("jet orders differ")
        r = self.order
        # powers of other accumulated by Horner-free expansion
        out = [self.coeffs[0] * 0 for _ in range(r)]
        power = [c for c in other.coeffs]  # other^1
        for k in range(1, r + 1):
            ck = self.coeffs[k - 1]
            for i, p in enumerate(power):
                out[i] = out[i] + ck * p
            if k < r:
                power = _truncated_product(power, other.coeffs, r)
        return Jet(out)

    def inverse(self) -> "Jet":
        """Series reversion within the truncation order.

        Solves self(inv(x)) = x slot by slot: the k-th slot of the
        composition is a_1 * inv_k plus terms in lower inv slots, so each
        step zeroes one coefficient without disturbing the previous ones.
        """
        r = self.order
        a1 = self.coeffs[0]
        first = Fraction(1, 1) / a1 if isinstance(a1, (int, Fraction)) \
            else 1 / a1
        inv = [first] + [a1 * 0] * (r - 1)
        for k in range(1, r):
            comp = self.compose(Jet(inv)).coeffs
            inv[k] = inv[k] - comp[k] / a1
        return Jet(inv)

    def power(self, exponent: int) -> "Jet":
        if exponent == 1:
            return self
        if exponent == -1:
            return self.inverse()
        raise DomainError("jet exponents are +-1")

    def distance(self, other: "Jet") -> float:
        return max(abs(float(a - b))
                   for a, b in zip(self.coeffs, other.coeffs))

    def is_identity(self, tol) -> bool:
        if abs(float(self.coeffs[0] - 1)) > tol:
            return False
        return all(abs(float(c)) <= tol for c in self.coeffs[1:])


def _truncated_product(a, b, r):
    out = [a[0] * 0] * r
    # both a and b represent series starting at x^1: product starts at x^2
    for i, ai in enumerate(a):
        if i + 1 >= r:
            break
        for j, bj in enumerate(b):
            k = i + j + 1  # degree index: (i+1)+(j+1) -> coefficient slot k
            if k >= r:
                break
            out[k] = out[k] + ai * bj
    return out


def jet_compose(g: Jet, f: Jet) -> Jet:
    return g.compose(f)


@dataclass(frozen=True)
class ConjugacyNormalForm:
    kind: str          # "identity" | "linear" | "parabolic"
    linear: object = None       # a_1 for linear
    contact: int = 0            # k for parabolic
    sign: int = 0               # +-1 for parabolic
    residue: object = None      # the coefficient a at order 2k-1

    def distance(self, other: "ConjugacyNormalForm") -> float:
        if self.kind != other.kind:
            return math.inf
        if self.kind == "identity":
            return 0.0
        if self.kind == "linear":
            return abs(float(self.linear - other.linear))
        if (self.contact, self.sign) != (other.contact, other.sign):
            return math.inf
        a = 0.0 if self.residue is None else float(self.residue)
        b = 0.0 if other.residue is None else float(other.residue)
        return abs(a - b)


def normal_form(jet: Jet, zero_tol: float | None = None
                ) -> tuple[ConjugacyNormalForm, Jet]:
    """Reduce to the conjugacy normal form; returns (form, conjugator h)
    with h^-1 o jet o h equal to the form's representative.

    a_1 != 1: conjugate to the linear part (kill higher terms order by
    order). a_1 = 1 with contact k: rescale the leading term to +-1, then
    eliminate every order except 2k-1 by polynomial conjugations.
    """
    r = jet.order
    one = jet.coeffs[0] / jet.coeffs[0]
    tol = zero_tol if zero_tol is not None else _default_tol(jet)
    h = Jet.identity(r, one)
    cur = jet
    if abs(float(cur.coeffs[0] - 1)) > tol:
        a1 = cur.coeffs[0]
        for m in range(2, r + 1):
            c = cur.coeffs[m - 1]
            # conjugating by x + t x^m changes slot m by t(a_1 - a_1^m)
            t = c / (a1 ** m - a1)
            conj = _elementary(r, m, t, one)
            cur = conj.inverse().compose(cur).compose(conj)
            h = h.compose(conj)
        return ConjugacyNormalForm("linear", linear=a1), h
    # unipotent part: find the contact order
    k = None
    for m in range(2, r + 1):
        if abs(float(cur.coeffs[m - 1])) > tol:
            k = m
            break
    if k is None:
        return ConjugacyNormalForm("identity"), h
    # rescale leading coefficient to +-1 by a linear conjugation; the root
    # is irrational in general, so exact jets are upgraded to mpf here
    ak = cur.coeffs[k - 1]
    sign = 1 if ak > 0 else -1
    if isinstance(ak, (int, Fraction)):
        cur = Jet([mpmath.mpf(c.numerator) / c.denominator
                   if isinstance(c, Fraction) else mpmath.mpf(c)
                   for c in cur.coeffs])
        h = Jet([mpmath.mpf(c.numerator) / c.denominator
                 if isinstance(c, Fraction) else mpmath.mpf(c)
                 for c in h.coeffs])
        ak = cur.coeffs[k - 1]
        one = mpmath.mpf(1)
    if isinstance(ak, float):
        lam = abs(ak) ** (-1.0 / (k - 1))
    else:
        lam = mpmath.power(abs(ak), mpmath.mpf(-1) / (k - 1))
    scale = _linear_jet(r, lam, one)
    cur = scale.inverse().compose(cur).compose(scale)
    h = h.compose(scale)
    # eliminate orders k+1 .. r except 2k-1
    for m in range(k + 1, r + 1):
        if m == 2 * k - 1:
            continue
        c = cur.coeffs[m - 1]
        j = m - k + 1  # conjugate by x + t x^j, bracket shifts slot m
        t = -c / (sign * (k - j))
        conj = _elementary(r, j, t, one)
        cur = conj.inverse().compose(cur).compose(conj)
        h = h.compose(conj)
    residue = cur.coeffs[2 * k - 2] if 2 * k - 1 <= r else None
    return ConjugacyNormalForm("parabolic", contact=k, sign=sign,
                               residue=residue), h


def _default_tol(jet: Jet) -> float:
    if any(isinstance(c, mpmath.mpf) for c in jet.coeffs):
        return float(mpmath.mpf(2) ** (-mp.prec // 4))
    if any(isinstance(c, float) for c in jet.coeffs):
        return 1e-12
    return 0.0


def _elementary(r, m, t, one):
    coeffs = [one * 0] * r
    coeffs[0] = one
    coeffs[m - 1] = t
    return Jet(coeffs)


def _linear_jet(r, lam, one):
    coeffs = [one * 0] * r
    coeffs[0] = lam * one
    return Jet(coeffs)


# ---------------------------------------------------------------------------
# Branch jets and the invariant


def branch_jets(iem, r: int) -> dict:
    """j(T, v) per half-point: the r-jet of x -> T(u^t(v) + x) - u^b(v),
    one-sided from inside the interval."""
    pi = iem.pi
    out = {}
    with iem.mode.workprec():
        for a in pi.alphabet:
            p = pi.position_top(a)
            q = pi.position_bottom(a)
            for side in ("L", "R"):
                if side == "L":
                    ut = iem.top_points[p - 1]
                else:
                    ut = iem.top_points[p]
                series = iem.branch_taylor(a, ut, r)
                coeffs = [series[k] for k in range(1, r + 1)]
                out[(a, side)] = Jet(coeffs)
    return out


@dataclass
class InvariantFamily:
    forms: list[ConjugacyNormalForm]      # one per sigma-cycle
    jets: list[Jet]                       # the raw products J(T, C)
    cycles: tuple
    trivial: bool


def invariant(iem, r: int, zero_tol: float | None = None) -> InvariantFamily:
    """J(T, C) along each sigma-cycle from its lexicographically smallest
    half-point, with exponents eps(v); normal forms attached."""
    sigma = sigma_and_cycles(iem.pi)
    jets = branch_jets(iem, r)
    out_jets, forms = [], []
    with iem.mode.workprec():
        for cyc in sigma.cycles:
            start = min(range(len(cyc)), key=lambda i: cyc[i])
            ordered = cyc[start:] + cyc[:start]
            product = None
            for hp in ordered:
                factor = jets[hp].power(eps(hp))
                product = factor if product is None else \
                    product.compose(factor)
            out_jets.append(product)
            forms.append(normal_form(product, zero_tol)[0])
    trivial = all(f.kind == "identity" for f in forms)
    return InvariantFamily(forms, out_jets, sigma.cycles, trivial)


def boundary_log_slope(iem) -> object:
    """The boundary of log DT; equals the per-cycle log of the linear part
    of the invariant in J^1."""
    values = {}
    with iem.mode.workprec():
        for a in iem.pi.alphabet:
            p = iem.pi.position_top(a)
            for side, x in (("L", iem.top_points[p - 1]),
                            ("R", iem.top_points[p])):
                d1 = iem.branch_taylor(a, x, 1)[1]
                if not d1 > 0:
                    raise DomainError("DT <= 0 at a half-point")
                values[(a, side)] = mpmath.log(d1)
    return boundary_from_values(iem.pi, values)


# ---------------------------------------------------------------------------
# Invariance checks


@dataclass
class InvarianceReport:
    max_form_distance: float
    pairs: list


def _match_cycles(c1, c2):
    """Match sigma-cycles across a Rauzy-Veech step by half-point overlap
    (sigma changes at three points only, so overlap is decisive)."""
    pairs = []
    used = set()
    for i, a in enumerate(c1):
        best, score = None, -1
        for j, b in enumerate(c2):
            if j in used:
                continue
            ov = len(set(a) & set(b))
            if ov > score:
                best, score = j, ov
        used.add(best)
        pairs.append((i, best))
    return pairs


def check_invariance(iem_a, iem_b, r: int,
                     zero_tol: float | None = None) -> InvarianceReport:
    """Compare invariant families of two maps (a conjugated copy, or the
    map before/after one Rauzy-Veech step)."""
    fam_a = invariant(iem_a, r, zero_tol)
    fam_b = invariant(iem_b, r, zero_tol)
    pairs = _match_cycles(fam_a.cycles, fam_b.cycles)
    worst = 0.0
    matched = []
    for i, j in pairs:
        dist = fam_a.forms[i].distance(fam_b.forms[j])
        matched.append((fam_a.forms[i], fam_b.forms[j], dist))
        worst = max(worst, dist)
    return InvarianceReport(worst, matched)


def conjugate_iem(iem, h, r: int):
    """h o T o h^-1 as a GeneralizedIEM, for an interval diffeo h given as
    a Branch covering the closure of I."""
    from .iem import Branch, GeneralizedIEM, TranslationBranch
    from .taylor import TSeries

    class _ConjugatedBranch(Branch):
        def __init__(self, inner, left, right):
            self.inner = inner
            super().__init__(left, right,
                             self.taylor_at(left, 0)[0],
                             self.taylor_at(right, 0)[0])

        def taylor_at(self, x, order):
            y = h.inverse(x, iem.mode.tiny(8))
            hs = h.taylor_at(y, order)
            if order == 0:
                ts = self.inner.taylor_at(y, 0)
                return TSeries([h.taylor_at(ts[0], 0)[0]])
            inv = Jet([hs[k] for k in range(1, order + 1)]).inverse()
            s1 = TSeries([y] + inv.coeffs)
            s2 = _compose_at(self.inner.taylor_at(s1[0], order), s1)
            return _compose_at(h.taylor_at(s2[0], order), s2)

    def _compose_at(f, g):
        out = TSeries.constant(f[0], g.order)
        dg = TSeries([g.zero_scalar] + list(g.coeffs[1:]))
        power = TSeries.constant(g.zero_scalar + 1, g.order)
        for k in range(1, min(f.order, g.order) + 1):
            power = power * dg
            out = out + power * f[k]
        return out

    pi = iem.pi
    with iem.mode.workprec():
        top = [h(x) for x in iem.top_points]
        bottom = [h(x) for x in iem.bottom_points]
        branches = {}
        for a in pi.alphabet:
            p = pi.position_top(a)
            if iem.is_standard:
                lt, rt = iem.top_points[p - 1], iem.top_points[p]
                inner = TranslationBranch(lt, rt, iem.translations[a])
            else:
                inner = iem.branches[a]
            branches[a] = _ConjugatedBranch(inner, top[p - 1], top[p])
        return GeneralizedIEM(pi, top, bottom, branches, iem.mode,
                              order=r, validate=False)
