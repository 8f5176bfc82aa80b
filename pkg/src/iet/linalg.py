"""Small dense linear algebra over exact rationals (and mpf with pivots).

Matrices are lists of row lists. Everything here is O(d^3) with d <= 10,
so clarity beats speed; the point is exactness: ranks, kernels and inverses
of the integer matrices Omega(pi) and B_gamma must be computed over Q.
"""
from __future__ import annotations

from fractions import Fraction


def identity(d: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(d)] for i in range(d)]


def zeros(n: int, m: int) -> list[list[int]]:
    return [[0] * m for _ in range(n)]


def transpose(a):
    return [list(col) for col in zip(*a)]


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    bt = list(zip(*b))
    return [[sum(a[i][p] * bt[j][p] for p in range(k)) for j in range(m)]
            for i in range(n)]


def mat_vec(a, v):
    return [sum(row[j] * v[j] for j in range(len(v))) for row in a]


def vec_mat(v, a):
    return [sum(v[i] * a[i][j] for i in range(len(v))) for j in range(len(a[0]))]


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def elementary(d: int, i: int, j: int, value: int = 1) -> list[list[int]]:
    e = zeros(d, d)
    e[i][j] = value
    return e


def col_sum_norm(a) -> int:
    """Greatest column sum of absolute values (Appendix C convention)."""
    return max(sum(abs(a[i][j]) for i in range(len(a))) for j in range(len(a[0])))


def is_nonnegative(a) -> bool:
    return all(x >= 0 for row in a for x in row)


def is_positive(a) -> bool:
    return all(x > 0 for row in a for x in row)


def _pivot_ok(x, tol):
    return x != 0 if tol is None else abs(x) > tol


def rref(a, tol=None):
    """Reduced row echelon form; returns (rows, pivot column indices).

    tol=None means exact arithmetic (entries coerced to Fraction);
    otherwise entries are used as-is and pivots below tol count as zero.
    """
    if tol is None:
        m = [[Fraction(x) for x in row] for row in a]
    else:
        m = [list(row) for row in a]
    nrow, ncol = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(ncol):
        if r == nrow:
            break
        best = max(range(r, nrow), key=lambda i: abs(m[i][c]))
        if not _pivot_ok(m[best][c], tol):
            continue
        m[r], m[best] = m[best], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(nrow):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a, tol=None) -> int:
    return len(rref(a, tol)[1])


def nullspace(a, tol=None):
    """Basis of the right kernel, one vector per free column."""
    m, pivots = rref(a, tol)
    ncol = len(a[0])
    free = [c for c in range(ncol) if c not in pivots]
    basis = []
    one = Fraction(1) if tol is None else 1.0
    for fc in free:
        v = [Fraction(0) if tol is None else 0.0] * ncol
        v[fc] = one
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][fc]
        basis.append(v)
    return basis


def solve(a, b, tol=None):
    """One solution of A x = b, or None if inconsistent."""
    nrow, ncol = len(a), len(a[0])
    aug = [list(a[i]) + [b[i]] for i in range(nrow)]
    m, pivots = rref(aug, tol)
    if ncol in pivots:
        return None
    x = [Fraction(0) if tol is None else 0.0] * ncol
    for r, pc in enumerate(pivots):
        x[pc] = m[r][ncol]
    return x


def inverse(a, tol=None):
    d = len(a)
    aug = [list(a[i]) + identity(d)[i] for i in range(d)]
    m, pivots = rref(aug, tol)
    if pivots != list(range(d)):
        raise ValueError("matrix is singular")
    return [row[d:] for row in m]


def unimodular_inverse(a) -> list[list[int]]:
    """Exact integer inverse of an integer matrix with det = +-1."""
    inv = inverse(a)
    out = []
    for row in inv:
        irow = []
        for x in row:
            f = Fraction(x)
            if f.denominator != 1:
                raise ValueError("matrix is not unimodular")
            irow.append(f.numerator)
        out.append(irow)
    return out


def char_poly(a) -> list[int]:
    """Characteristic polynomial of an integer matrix, coefficients of
    x^d, ..., x^0 (monic), via Faddeev-LeVerrier over Q."""
    d = len(a)
    coeffs = [Fraction(1)]
    mk = identity(d)
    for k in range(1, d + 1):
        amk = mat_mul(a, mk)
        ck = -Fraction(sum(amk[i][i] for i in range(d)), k)
        coeffs.append(ck)
        mk = [[Fraction(amk[i][j]) + (ck if i == j else 0) for j in range(d)]
              for i in range(d)]
    out = []
    for c in coeffs:
        f = Fraction(c)
        if f.denominator != 1:
            raise ValueError("characteristic polynomial should be integral")
        out.append(f.numerator)
    return out


def det(a):
    """Exact determinant via the constant char-poly coefficient."""
    d = len(a)
    cp = char_poly(a)
    return cp[-1] * (-1) ** d
