"""Kontsevich-Zorich cocycle diagnostics.

The rotation-number path is factored into minimal complete pieces
gamma(1) * gamma(2) * ... ; with Z(n) = B_{gamma(n)} and
B(n) = Z(n)...Z(1) the three Roth-type growth conditions read

  (a)  ||Z(n+1)|| = O(||B(n)||^tau) for all tau > 0,
  (b)  ||B(n)|Gamma_0|| = O(||B(n)||^{1-theta}) on the mean-zero hyperplane,
  (c)  ||B_s(k,l)|| and ||B_flat(k,l)^{-1}|| = O(||B(l)||^tau),

plus, in the restricted case, dim Gamma_s = g. Everything here is a
diagnostic: fitted exponents and tails are reported, never a certificate.

Matrices are exact integers; norms use the greatest-return-time convention
(see induction.cocycle_norm). Lyapunov estimation re-orthonormalizes a full
frame every Zorich step and accumulates the QR log-diagonals; the stable
space comes from a backward pullback sweep with the inverse matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mp

from . import linalg
from .combinatorics import (
    RauzyArrow,
    arrow_matrix,
    arrow_matrix_inverse,
    omega_matrix,
    path_completeness,
)
from .errors import DomainError
from .induction import cocycle_norm, zorich_accelerate


@dataclass
class Factor:
    """Minimal complete factor gamma(n) with Z(n) and the accumulated B(n)."""

    index: int          # n, 1-based
    start: int
    stop: int
    z: list[list[int]]
    b: list[list[int]]

    @property
    def norm_z(self) -> int:
        return cocycle_norm(self.z)

    @property
    def norm_b(self) -> int:
        return cocycle_norm(self.b)


def factor_minimal_complete(arrows: Sequence[RauzyArrow]) -> list[Factor]:
    """Split the path at the greedy earliest complete cuts and accumulate."""
    rep = path_completeness(arrows)
    factors: list[Factor] = []
    b = None
    prev = 0
    for n, cut in enumerate(rep.cut_indices, start=1):
        z = linalg.identity(arrows[0].source.d)
        for arrow in arrows[prev:cut]:
            z = linalg.mat_mul(arrow_matrix(arrow), z)
        b = z if b is None else linalg.mat_mul(z, b)
        factors.append(Factor(n, prev, cut, z, b))
        prev = cut
    return factors


def log_norm(m) -> float:
    return math.log(cocycle_norm(m))


# ---------------------------------------------------------------------------
# Condition (a)


@dataclass
class ConditionAReport:
    ratios: list[float]          # ratio_a(n) = log||Z(n+1)|| / log||B(n)||
    tail_max: float | None
    verdict: str                 # "consistent" | "rejected" | "insufficient"

    threshold: float = 0.25


def roth_condition_a(factors: Sequence[Factor],
                     threshold: float = 0.25) -> ConditionAReport:
    if len(factors) < 3:
        return ConditionAReport([], None, "insufficient", threshold)
    ratios = [math.log(factors[n].norm_z) / math.log(factors[n - 1].norm_b)
              for n in range(1, len(factors))]
    tail = ratios[len(ratios) // 2:]
    tail_max = max(tail)
    early_max = max(ratios[: max(1, len(ratios) // 2)])
    verdict = "consistent" if tail_max < threshold and tail_max <= early_max \
        else "rejected"
    return ConditionAReport(ratios, tail_max, verdict, threshold)


# ---------------------------------------------------------------------------
# Condition (b)


@dataclass
class ConditionBReport:
    theta_series: list[float]    # 1 - log||B(n)|G0|| / log||B(n)||
    theta_tail: float            # slope fit over the last half


def roth_condition_b(factors: Sequence[Factor], lengths: Sequence,
                     bits: int = 192) -> ConditionBReport:
    """Gamma_0 = mean-zero hyperplane w.r.t. the length vector; the
    restriction norm is measured on an orthonormalized basis, exactly in
    mpf arithmetic (the integer entries of B(n) convert exactly)."""
    d = len(lengths)
    with mp.workprec(bits):
        lam = []
        for v in lengths:
            if hasattr(v, "denominator") and not isinstance(v, float):
                lam.append(mpmath.mpf(v.numerator) / v.denominator)
            else:
                lam.append(mpmath.mpf(v))
        basis = _orthonormal_complement(lam, bits)
        logs_restricted = []
        logs_full = []
        for f in factors:
            bm = [[mpmath.mpf(x) for x in row] for row in f.b]
            img = [[sum(bm[i][k] * basis[k][j] for k in range(d))
                    for j in range(d - 1)] for i in range(d)]
            col_norm = max(
                mpmath.sqrt(sum(img[i][j] ** 2 for i in range(d)))
                for j in range(d - 1))
            logs_restricted.append(float(mpmath.log(col_norm)))
            logs_full.append(math.log(f.norm_b))
    theta = [1.0 - r / f for r, f in zip(logs_restricted, logs_full)]
    slope = _tail_slope(logs_full, logs_restricted)
    return ConditionBReport(theta, 1.0 - slope)


def _orthonormal_complement(lam, bits):
    """Orthonormal basis (as columns) of the hyperplane lam . x = 0."""
    d = len(lam)
    vecs = []
    for i in range(1, d):
        v = [mpmath.mpf(0)] * d
        v[0] = lam[i]
        v[i] = -lam[0]
        vecs.append(v)
    ortho = []
    for v in vecs:
        w = list(v)
        for u in ortho:
            c = sum(a * b for a, b in zip(w, u))
            w = [a - c * b for a, b in zip(w, u)]
        nrm = mpmath.sqrt(sum(a * a for a in w))
        ortho.append([a / nrm for a in w])
    return [[ortho[j][i] for j in range(d - 1)] for i in range(d)]  # columns


def _tail_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of y against x over the last half of samples."""
    n = len(xs)
    if n < 2:
        raise DomainError("need at least two samples for a slope")
    xs, ys = list(xs[n // 2:]), list(ys[n // 2:])
    if len(xs) < 2:
        xs, ys = list(xs), list(ys)
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    denom = sum((x - mx) ** 2 for x in xs)
    if denom == 0:
        raise DomainError("degenerate abscissae in slope fit")
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / denom


# ---------------------------------------------------------------------------
# Lyapunov spectrum and the Oseledets stable space


@dataclass
class OseledetsSplitting:
    exponents: list[float]           # per unit of log||B||, descending
    log_sums: np.ndarray             # cumulative QR log-diagonals (sorted desc)
    history: list[tuple[int, np.ndarray, float]]  # (arrow index, sums, log||B||)
    stable_dim: int
    stable_basis: np.ndarray         # d x stable_dim, orthonormal
    complement_basis: np.ndarray     # d x (d - stable_dim), orthonormal
    stable_residual_to_omega: float  # distance of Gamma_s to Im Omega
    det_drift: float                 # |sum of log-diagonals| (should be ~0)
    genus: int
    restricted: bool
    pi: object = None                # combinatorial data of level 0


def _group_matrices(arrows: Sequence[RauzyArrow], inverse: bool = False,
                    break_at: set[int] | None = None):
    """Per-Zorich-step integer matrices (kept small by grouping); groups are
    additionally split at the indices in break_at."""
    groups = zorich_accelerate(arrows)
    if break_at:
        split = []
        for g in groups:
            cuts = sorted(i for i in break_at if g.start < i < g.stop)
            prev = g.start
            for c in cuts + [g.stop]:
                split.append(type(g)(g.winner, prev, c))
                prev = c
        groups = split
    mats = []
    for g in groups:
        m = linalg.identity(arrows[0].source.d)
        idx = range(g.start, g.stop)
        if inverse:
            for i in idx:
                m = linalg.mat_mul(m, arrow_matrix_inverse(arrows[i]))
        else:
            for i in idx:
                m = linalg.mat_mul(arrow_matrix(arrows[i]), m)
        mats.append((g, m))
    return mats


def lyapunov_and_stable_space(arrows: Sequence[RauzyArrow], genus: int,
                              tau_min: float = 0.05,
                              break_at: set[int] | None = None) -> OseledetsSplitting:
    """Forward QR sweep for the exponents, backward pullback sweep for
    Gamma_s; needs at least ~50 Zorich steps to mean anything."""
    d = arrows[0].source.d
    groups = _group_matrices(arrows, break_at=break_at)
    if len(groups) < 2:
        raise DomainError("trace too shallow for Lyapunov estimation")
    q = np.eye(d)
    sums = np.zeros(d)
    logb = 0.0
    history = []
    b_scaled = np.eye(d)
    for g, m in groups:
        mf = np.array(m, dtype=float)
        q, r = np.linalg.qr(mf @ q)
        diag = np.abs(np.diag(r))
        sums += np.log(diag)
        b_scaled = mf @ b_scaled
        scale = np.abs(b_scaled).sum(axis=1).max()
        logb += math.log(scale)
        b_scaled /= scale
        history.append((g.stop, sums.copy(), logb))
    order = np.argsort(-sums)
    sums_sorted = sums[order]
    exponents = list(sums_sorted / logb) if logb > 0 else list(sums_sorted * 0)
    stable_dim = int(sum(1 for e in exponents if e < -tau_min))

    f = np.eye(d)
    for g, m in reversed(_group_matrices(arrows, inverse=True)):
        f, _ = np.linalg.qr(np.array(m, dtype=float) @ f)
    stable = f[:, :stable_dim] if stable_dim else np.zeros((d, 0))
    complement = f[:, stable_dim:]

    om = np.array(omega_matrix(arrows[0].source), dtype=float)
    resid = 0.0
    if stable_dim:
        qo, _ = np.linalg.qr(om)
        rank = int(np.linalg.matrix_rank(om))
        proj = qo[:, :rank] @ qo[:, :rank].T
        resid = float(np.abs(stable - proj @ stable).max())
    return OseledetsSplitting(
        exponents=exponents,
        log_sums=sums_sorted,
        history=history,
        stable_dim=stable_dim,
        stable_basis=stable,
        complement_basis=complement,
        stable_residual_to_omega=resid,
        det_drift=float(abs(sums.sum())),
        genus=genus,
        restricted=(stable_dim == genus),
        pi=arrows[0].source,
    )


def per_period_exponents(arrows: Sequence[RauzyArrow], period_len: int,
                         n_periods: int, burn_fraction: float = 0.5,
                         tau_min: float = 0.05) -> tuple[list[float], OseledetsSplitting]:
    """Tail-averaged per-period exponents for a periodic path.

    The raw Benettin average carries an O(1/n) alignment transient; the
    increment between the burn-in point and the end converges geometrically.
    """
    marks = {k * period_len for k in range(1, n_periods + 1)}
    split = lyapunov_and_stable_space(arrows, genus=0, tau_min=tau_min,
                                      break_at=marks)
    boundaries = {}
    for stop, sums, logb in split.history:
        if stop % period_len == 0:
            boundaries[stop // period_len] = sums
    burn = max(1, int(n_periods * burn_fraction))
    if burn not in boundaries or n_periods not in boundaries:
        raise DomainError("period boundaries missing from the sweep history")
    inc = (boundaries[n_periods] - boundaries[burn]) / (n_periods - burn)
    return sorted(inc, reverse=True), split


# ---------------------------------------------------------------------------
# Condition (c)


@dataclass
class ConditionCReport:
    restrict_ratios: list[float]   # per level l: log||B_s(k,l)|| / log||B(l)||
    quotient_ratios: list[float]   # per level l: log||B_flat(k,l)^-1|| / log||B(l)||
    samples: list[tuple[int, int]]


def _gram_schmidt(cols):
    """Orthonormalize mpf column vectors (list of columns)."""
    out = []
    for v in cols:
        w = list(v)
        for u in out:
            c = sum(a * b for a, b in zip(w, u))
            w = [a - c * b for a, b in zip(w, u)]
        nrm = mpmath.sqrt(sum(a * a for a in w))
        out.append([a / nrm for a in w])
    return out


def stable_frames_per_factor(factors: Sequence[Factor],
                             bits: int = 320) -> list[list[list]]:
    """Backward pullback sweep storing the orthonormal frame at every factor
    boundary; the first stable_dim columns of frames[k] span the level-k
    stable space Gamma_s^{(k)} (accuracy improves with the remaining tail).

    Runs in mpf arithmetic: in float64 the restriction norms bottom out at
    ||B|| * eps, which poisons the condition-(c) tails past ~30 factors.
    """
    d = len(factors[0].z)
    out: list = [None] * len(factors)
    with mp.workprec(bits):
        cols = [[mpmath.mpf(1) if i == j else mpmath.mpf(0) for i in range(d)]
                for j in range(d)]
        for i in range(len(factors) - 1, -1, -1):
            zinv = linalg.unimodular_inverse(factors[i].z)
            cols = [[sum(zinv[r][k] * col[k] for k in range(d))
                     for r in range(d)] for col in cols]
            cols = _gram_schmidt(cols)
            out[i] = [list(col) for col in cols]  # list of columns
    return out


def roth_condition_c(factors: Sequence[Factor], stable_dim: int,
                     frames: Sequence,
                     margin: int = 4, bits: int = 320) -> ConditionCReport:
    """Sampled (k, l) pairs per level l: k in {0, l//2, l-1}. The last
    `margin` levels are skipped: their stable frames are estimated from
    too short a tail to be meaningful."""
    if stable_dim == 0:
        raise DomainError("condition (c) needs a nontrivial stable space")
    d = len(factors[0].z)
    restrict, quotient, samples = [], [], []
    with mp.workprec(bits):
        for li in range(1, max(1, len(factors) - margin)):
            k_choices = sorted({0, li // 2, li - 1})
            best_r, best_q, used = None, None, None
            for ki in k_choices:
                bkl = _factor_product_exact(factors, ki, li)
                bklm = [[mpmath.mpf(x) for x in row] for row in bkl]
                qk = frames[ki][:stable_dim]
                uk = frames[ki][stable_dim:]
                ql = frames[li][:stable_dim]
                ul = frames[li][stable_dim:]
                m = _proj_matrix(ql, bklm, qk, d)
                nq = _proj_matrix(ul, bklm, uk, d)
                norm_m = _col_norm(m)
                ninv = linalg.inverse(nq, tol=mpmath.mpf(2) ** (-bits // 2))
                norm_ninv = _col_norm(ninv)
                logb = math.log(factors[li - 1].norm_b)
                r = float(mpmath.log(norm_m)) / logb
                qv = float(mpmath.log(norm_ninv)) / logb
                if best_r is None or r > best_r:
                    best_r, used = r, (ki, li)
                if best_q is None or qv > best_q:
                    best_q = qv
            restrict.append(best_r)
            quotient.append(best_q)
            samples.append(used)
    return ConditionCReport(restrict, quotient, samples)


def _proj_matrix(rows_basis, b, cols_basis, d):
    """Matrix rows_basis^T . B . cols_basis with bases as column lists."""
    bcols = [[sum(b[r][k] * col[k] for k in range(d)) for r in range(d)]
             for col in cols_basis]
    return [[sum(rb[r] * bc[r] for r in range(d)) for bc in bcols]
            for rb in rows_basis]


def _col_norm(m):
    return max(sum(abs(m[i][j]) for i in range(len(m)))
               for j in range(len(m[0])))


def _factor_product_exact(factors: Sequence[Factor], ki: int, li: int):
    m = linalg.identity(len(factors[0].z))
    for f in factors[ki:li]:
        m = linalg.mat_mul(f.z, m)
    return m


# ---------------------------------------------------------------------------
# Positivity windows (Appendix A growth claim)


@dataclass
class PositivityReport:
    status: str                  # "ok" | "violated" | "insufficient"
    window_length: int
    offending_window: tuple[int, int] | None


def positivity_window_check(factors: Sequence[Factor], d: int) -> PositivityReport:
    """Every window of 2d-3 consecutive complete factors must have a
    strictly positive product."""
    w = max(1, 2 * d - 3)
    if len(factors) < w:
        return PositivityReport("insufficient", w, None)
    for start in range(0, len(factors) - w + 1):
        m = linalg.identity(d)
        for f in factors[start:start + w]:
            m = linalg.mat_mul(f.z, m)
        if not linalg.is_positive(m):
            return PositivityReport("violated", w, (start, start + w))
    return PositivityReport("ok", w, None)
