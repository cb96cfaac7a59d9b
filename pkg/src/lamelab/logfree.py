"""Log-free compatibility polynomials, their top terms, counts and Hilbert data.

At a pole p_i with l = 2 n_i a positive integer, the Frobenius recursion for the
second solution z^{-n_i} * sum c_k z^k has a vanishing leading factor at k = l + 1.
The value of the numerator there is the obstruction F_l(A, B). With all elliptic
inputs set to zero it reduces to the top term q_l(A_i, B).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import elliptic as ell_
from .errors import UnstableRange
from .weights import WeightVector, is_half_nat


# --------------------------------------------------------------------- site data

@dataclass(frozen=True)
class SiteData:
    """Pole positions, weights and derivative tables.

    wp[m, i, j] = wp^(m)(p_i - p_j) and zeta[m, i, j] = zeta^(m)(p_i - p_j); diagonal
    entries are unused. g2, g3 feed the regular part of the self terms.
    """

    p: tuple
    n: WeightVector
    wp: np.ndarray
    zeta: np.ndarray
    g2: complex
    g3: complex

    @property
    def r(self) -> int:
        return len(self.p)

    @property
    def order(self) -> int:
        return self.wp.shape[0] - 1


def site_from_lattice(p: Sequence[complex], n, L: ell_.Lattice, order: int | None = None) -> SiteData:
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    r = len(p)
    if order is None:
        ells = [int(2 * w) for w in n if is_half_nat(w)]
        order = max(ells + [1]) - 1
    p_arr = np.asarray(p, dtype=complex)
    wp_t = np.zeros((order + 1, r, r), dtype=complex)
    ze_t = np.zeros((order + 1, r, r), dtype=complex)
    for i in range(r):
        for j in range(r):
            if i == j:
                continue
            zd = ell_.zeta_derivatives(p_arr[i] - p_arr[j], L, order + 1)
            ze_t[:, i, j] = zd[: order + 1]
            wp_t[:, i, j] = -zd[1: order + 2]
    return SiteData(tuple(complex(x) for x in p_arr), n, wp_t, ze_t, L.g2, L.g3)


def zero_site(n, order: int) -> SiteData:
    """Site with every elliptic input zeroed (the top-term regime)."""
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    r = len(n)
    z = np.zeros((order + 1, r, r), dtype=complex)
    return SiteData(tuple([0j] * r), n, z, z.copy(), 0j, 0j)


def scale_site(site: SiteData, s: complex) -> SiteData:
    """Rescale elliptic inputs by their weights (zeta^(m): m+1, wp^(m): m+2, g2: 4, g3: 6)."""
    m = np.arange(site.order + 1)[:, None, None]
    return SiteData(site.p, site.n, site.wp * s ** (m + 2), site.zeta * s ** (m + 1),
                    site.g2 * s**4, site.g3 * s**6)


def _laurent_from_invariants(g2, g3, kmax):
    c = {2: g2 / 20.0, 3: g3 / 28.0}
    for k in range(4, kmax + 1):
        c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * sum(c[m] * c[k - m] for m in range(2, k - 1))
    return c


def _self_regular(site: SiteData, mmax: int):
    """Taylor coefficients at t^m of wp(t) - 1/t^2 and zeta(t) - 1/t."""
    kmax = mmax // 2 + 2
    c = _laurent_from_invariants(site.g2, site.g3, kmax)
    wreg = [0j] * (mmax + 1)
    zreg = [0j] * (mmax + 1)
    for k in range(2, kmax + 1):
        if 2 * k - 2 <= mmax:
            wreg[2 * k - 2] = c[k]
        if 2 * k - 1 <= mmax:
            zreg[2 * k - 1] = -c[k] / (2 * k - 1)
    return wreg, zreg


def _recursion(ell: int, Ai, Q: list):
    """Frobenius recursion c_K, returning the obstruction at K = ell + 1.

    K (K - ell - 1) c_K = A_i c_{K-1} + sum_{m=0}^{K-2} Q_m c_{K-2-m}, c_0 = 1.
    Works for numbers and for the Poly class below.
    """
    c = [1]
    for K in range(1, ell + 1):
        acc = Ai * c[K - 1]
        for m in range(0, K - 1):
            acc = acc + Q[m] * c[K - 2 - m]
        c.append(acc * Fraction(1, K * (K - ell - 1)))
    obstruction = Ai * c[ell]
    for m in range(0, ell):
        obstruction = obstruction + Q[m] * c[ell - 1 - m]
    return obstruction


def _q_series(ell: int, i: int, site: SiteData, A, B, one=1):
    """Q_m for m = 0..ell-1, the Taylor coefficients of the regular part of Q at p_i."""
    mmax = max(ell - 1, 0)
    if site.order < mmax:
        raise ValueError(f"site tables hold order {site.order}, need {mmax}")
    wreg, zreg = _self_regular(site, mmax)
    self_w = Fraction(ell, 2) * (Fraction(ell, 2) + 1)
    Q = []
    for m in range(mmax + 1):
        fact = math.factorial(m)
        acc = (self_w * wreg[m] + 0j) * one + A[i] * complex(zreg[m])
        for j in range(site.r):
            if j == i:
                continue
            nj = complex(site.n[j])
            acc = acc + (nj * (nj + 1) * site.wp[m, i, j] / fact) * one
            acc = acc + A[j] * complex(site.zeta[m, i, j] / fact)
        Q.append(acc)
    Q[0] = Q[0] + B
    return Q


def frobenius_Fl(ell: int, i: int, site: SiteData, A: Sequence[complex], B: complex) -> complex:
    """Log-free obstruction at site i, normalized so that its top part is q_top."""
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    Q = _q_series(ell, i, site, list(A), B)
    return complex(_recursion(ell, A[i], Q))


def q_top(ell: int, A: complex, B: complex) -> complex:
    lam = np.sqrt(complex(B))
    prod = 1 + 0j
    for j in range(ell + 1):
        prod *= A - (ell - 2 * j) * lam
    return (-1) ** ell / math.factorial(ell) ** 2 * prod


def q_top_via_determinant(ell: int, A: complex, B: complex) -> complex:
    """Top term from the operator (J0 - l/2) J_- + 2 lam J0 - A on polynomials of degree <= l."""
    lam = np.sqrt(complex(B))
    M = np.zeros((ell + 1, ell + 1), dtype=complex)
    for k in range(ell + 1):
        M[k, k] = 2 * lam * (k - ell / 2) - A
        if k >= 1:
            M[k - 1, k] = k * (k - 1 - ell)
    return -np.linalg.det(M) / math.factorial(ell) ** 2


def logfree_residual(n, site: SiteData, A: Sequence[complex], B: complex) -> np.ndarray:
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    if not n.all_half_nat:
        raise ValueError("logfree_residual needs every weight in (1/2)N")
    out = [frobenius_Fl(int(2 * w), i, site, A, B) for i, w in enumerate(n)]
    out.append(complex(sum(A)))
    return np.array(out)


# ----------------------------------------------------------- polynomial form

class Poly:
    """Sparse polynomial: exponent tuple -> coefficient (Fraction or complex)."""

    __slots__ = ("terms", "nvars")

    def __init__(self, terms=None, nvars=1):
        self.nvars = nvars
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def const(cls, c, nvars):
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def var(cls, idx, nvars):
        e = [0] * nvars
        e[idx] = 1
        return cls({tuple(e): Fraction(1)}, nvars)

    def _coerce(self, other):
        if isinstance(other, Poly):
            return other
        return Poly.const(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Poly(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Poly({k: -v for k, v in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly({k: v * other for k, v in self.terms.items()}, self.nvars)
        out = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return Poly(out, self.nvars)

    __rmul__ = __mul__

    def __call__(self, *vals):
        total = 0
        for k, v in self.terms.items():
            term = v
            for x, e in zip(vals, k):
                if e:
                    term = term * x**e
            total = total + term
        return total


@dataclass(frozen=True)
class LogFreePolynomial:
    """F_l as a polynomial in (A_1..A_r, B); exponent tuples end with the B exponent."""

    ell: int
    site_index: int
    coeffs: dict

    def __call__(self, A, B):
        return complex(Poly(self.coeffs, len(A) + 1)(*A, B))

    def weighted_part(self, degree: int) -> dict:
        return {k: v for k, v in self.coeffs.items() if sum(k[:-1]) + 2 * k[-1] == degree}

    def top_part(self) -> dict:
        """Terms of maximal (A, B)-weight, which must reproduce q_l(A_i, B)."""
        return self.weighted_part(self.ell + 1)


def logfree_polynomial(ell: int, i: int, site: SiteData) -> LogFreePolynomial:
    r = site.r
    nv = r + 1
    A = [Poly.var(j, nv) for j in range(r)]
    B = Poly.var(r, nv)
    Q = _q_series(ell, i, site, A, B, one=Poly.const(Fraction(1), nv))
    F = _recursion(ell, A[i], Q)
    coeffs = {k: complex(v) for k, v in F.terms.items() if abs(complex(v)) > 0}
    return LogFreePolynomial(ell, i, coeffs)


def q_top_coefficients(ell: int) -> dict:
    """Exact coefficients of q_l(A, B) keyed by (a, b) exponents."""
    A = Poly.var(0, 2)
    B = Poly.var(1, 2)
    Q = [B] + [Poly.const(Fraction(0), 2)] * max(ell - 1, 0)
    F = _recursion(ell, A, Q)
    return {k: Fraction(v) for k, v in sorted(F.terms.items())}


# ------------------------------------------------------------------- counting

def _binom(top: int, bottom: int) -> int:
    if bottom < 0 or top < bottom:
        return 0
    return math.comb(top, bottom)


def _reduced_totals(n: WeightVector):
    total = n.total_int
    I = n.half_integer_index_set
    for size in range(len(I) + 1):
        for J in itertools.combinations(I, size):
            nJ = total - sum(int(2 * n[j] + 1) for j in J)
            yield (-1) ** size, nJ


def count_F(n) -> int:
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    r = n.r
    return sum(sign * _binom(nJ + r - 1, r - 1) for sign, nJ in _reduced_totals(n))


def count_H(n) -> Fraction:
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    return Fraction(count_F(n) + n.delta, 2)


def type_one_configurations(n) -> list:
    """All k in Z_{>=0}^r with sum k = n and k_i <= 2 n_i whenever n_i is in (1/2)N."""
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    total = n.total_int
    bounds = [int(2 * w) if is_half_nat(w) else total for w in n]
    out = []
    for k in itertools.product(*[range(b + 1) for b in bounds]):
        if sum(k) == total:
            out.append(k)
    return out


def count_F_bruteforce(n) -> int:
    return len(type_one_configurations(n))


# ---------------------------------------------------------- Lefschetz basis

def _monomials(bounds, degree):
    out = [e for e in itertools.product(*[range(b + 1) for b in bounds]) if sum(e) == degree]
    # decreasing lexicographic: A1 is tried before A2, and so on
    return sorted(out, reverse=True)


class _ExactSpan:
    """Incremental row-echelon basis over Q, keyed by monomial."""

    def __init__(self):
        self.rows = []  # list of (pivot, dict)

    def _reduce(self, vec):
        vec = dict(vec)
        for pivot, row in self.rows:
            coef = vec.get(pivot, 0)
            if coef:
                for k, v in row.items():
                    vec[k] = vec.get(k, 0) - coef * v
                    if vec[k] == 0:
                        del vec[k]
        return vec

    def add(self, vec) -> bool:
        red = self._reduce(vec)
        if not red:
            return False
        pivot = max(red)
        inv = 1 / Fraction(red[pivot])
        row = {k: Fraction(v) * inv for k, v in red.items()}
        new_rows = []
        for p, rrow in self.rows:
            c = rrow.get(pivot, 0)
            if c:
                rrow = dict(rrow)
                for k, v in row.items():
                    rrow[k] = rrow.get(k, 0) - c * v
                    if rrow[k] == 0:
                        del rrow[k]
            new_rows.append((p, rrow))
        new_rows.append((pivot, row))
        self.rows = new_rows
        return True

    @property
    def rank(self):
        return len(self.rows)


def multiplication_rank(n, m: int) -> int:
    """Rank of multiplication by A_1 + ... + A_r from degree m to degree m + 1."""
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    bounds = [int(2 * w) for w in n]
    span = _ExactSpan()
    for e in _monomials(bounds, m):
        img = {}
        for i in range(len(bounds)):
            if e[i] < bounds[i]:
                f = list(e)
                f[i] += 1
                img[tuple(f)] = Fraction(1)
        if img:
            span.add(img)
    return span.rank


def lefschetz_basis(n) -> dict:
    """Monomials spanning the cokernel of multiplication by sum A_i in degrees 0..n.

    Returns {degree: [exponent tuples]}; candidates are scanned greedily in decreasing
    lexicographic order of exponents so A1 is preferred over A2.
    """
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    if not n.all_half_nat:
        raise ValueError("lefschetz_basis needs every weight in (1/2)N")
    bounds = [int(2 * w) for w in n]
    total = n.total_int
    basis = {}
    for deg in range(total + 1):
        span = _ExactSpan()
        if deg > 0:
            for e in _monomials(bounds, deg - 1):
                img = {}
                for i in range(len(bounds)):
                    if e[i] < bounds[i]:
                        f = list(e)
                        f[i] += 1
                        img[tuple(f)] = Fraction(1)
                if img:
                    span.add(img)
        chosen = []
        for e in _monomials(bounds, deg):
            if span.add({e: Fraction(1)}):
                chosen.append(e)
        basis[deg] = chosen
    return basis


def hilbert_direct_count(n, m: int) -> int:
    basis = lefschetz_basis(n)
    return sum(max(0, (m - deg) // 2 + 1) * len(mons) for deg, mons in basis.items() if deg <= m)


def hilbert_quasi_poly(n, m: int) -> int:
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    total = n.total_int
    if m < total:
        raise UnstableRange(f"m = {m} is below the stable range m >= {total}",
                            direct_count=hilbert_direct_count(n, m))
    prod = math.prod(int(2 * w + 1) for w in n)
    val = Fraction(m - total + 1, 2) * count_F(n) + Fraction(prod + (-1) ** m * n.delta, 4)
    if val.denominator != 1:
        raise ArithmeticError(f"non-integer Hilbert value {val}")
    return int(val)


def genus(n) -> tuple:
    """(arithmetic genus, orbifold genus) of the compactified log-free curve."""
    n = n if isinstance(n, WeightVector) else WeightVector(n)
    total = n.total_int
    F = count_F(n)
    prod = math.prod(int(2 * w + 1) for w in n)
    base = Fraction(total - 1, 2) * F + 1
    return base - Fraction(prod + n.delta, 4), base - Fraction(prod, 4)
