"""Symmetric rational equilibrium systems, their closed-form families, and the Treibich system.

The rational system of exponent l is

    F_mu(alpha) = sum_{nu != mu} [(alpha_mu - alpha_nu)^-l + (alpha_mu + alpha_nu)^-l] + x / alpha_mu^l = d_mu.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import elliptic as E
from .errors import ExceptionalParameter, PathFailure, RootMultiplicity
from .homotopy import Homotopy, TrackOptions, newton, track


class _NoSolution:
    def __repr__(self):
        return "NoSolution"

    def __bool__(self):
        return False


NoSolution = _NoSolution()


@dataclass
class EquilibriumSolution:
    alpha: np.ndarray
    normalization: str
    residual: float
    jacobian_condition: float = float("nan")


@dataclass(frozen=True)
class RationalSystemSpec:
    r: int
    l: int
    x: complex
    d: tuple | None = None

    def target(self, seed: int = 0) -> np.ndarray:
        if self.d is not None:
            return np.asarray(self.d, dtype=complex)
        return generic_rhs(self.r, seed)


def generic_rhs(r: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.5, 1.5, r) * np.exp(2j * np.pi * rng.uniform(size=r))


def _near_set(value, members, tol=1e-8):
    """Exact membership for rationals, distance test otherwise."""
    if isinstance(value, Fraction):
        return any(value == m for m in members)
    return any(abs(complex(value) - complex(m)) < tol for m in members)


def _exact(v):
    if isinstance(v, (Fraction, int, str)):
        return Fraction(v)
    z = complex(v)
    if z.imag == 0:
        f = Fraction(z.real).limit_denominator(10**6)
        if abs(float(f) - z.real) < 1e-14:
            return f
    return z


def _polish_roots(roots, residual, jac, maxit=6):
    x, ok, step = newton(residual, jac, np.asarray(roots, dtype=complex), tol=1e-15, maxit=maxit)
    return x, float(np.max(np.abs(residual(x)))) if len(x) else 0.0


# ------------------------------------------------------------ pair sums

def pair_sums(alpha, l: int):
    """S1[mu] = sum_{nu != mu} (a_mu - a_nu)^-l and S2[mu] = sum_{nu != mu} (a_mu + a_nu)^-l."""
    a = np.asarray(alpha, dtype=complex)
    k = len(a)
    off = ~np.eye(k, dtype=bool)
    diff = a[:, None] - a[None, :]
    summ = a[:, None] + a[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        S1 = np.where(off, 1.0 / np.where(off, diff, 1.0) ** l, 0.0).sum(axis=1)
        S2 = np.where(off, 1.0 / np.where(off, summ, 1.0) ** l, 0.0).sum(axis=1)
    return S1, S2


def rational_system(alpha, l: int, x) -> np.ndarray:
    a = np.asarray(alpha, dtype=complex)
    S1, S2 = pair_sums(a, l)
    return S1 + S2 + complex(x) / a**l


def rational_jacobian(alpha, l: int, x) -> np.ndarray:
    a = np.asarray(alpha, dtype=complex)
    k = len(a)
    off = ~np.eye(k, dtype=bool)
    diff = np.where(off, a[:, None] - a[None, :], 1.0)
    summ = np.where(off, a[:, None] + a[None, :], 1.0)
    dm = np.where(off, -l / diff ** (l + 1), 0.0)
    dp = np.where(off, -l / summ ** (l + 1), 0.0)
    J = -dm + dp
    J[np.diag_indices(k)] = dm.sum(axis=1) + dp.sum(axis=1) - l * complex(x) / a ** (l + 1)
    return J


def _rational_scale(a):
    a = np.asarray(a, dtype=complex)
    k = len(a)
    vals = [np.abs(a)]
    if k > 1:
        iu, ju = np.triu_indices(k, 1)
        vals += [np.abs(a[iu] - a[ju]), np.abs(a[iu] + a[ju])]
    return float(np.min(np.concatenate(vals)))


# ------------------------------------------------------------ families

def roots_of_unity_family(k: int, x):
    """Sum_{nu != mu} 1/(a_mu - a_nu) - x/a_mu = 0: solvable only at x = (k-1)/2."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if not _near_set(_exact(x), [Fraction(k - 1, 2)]):
        return NoSolution
    alpha = np.exp(2j * np.pi * np.arange(k) / k)
    res = float(np.max(np.abs(sol_x_system(alpha, x))))
    return EquilibriumSolution(alpha, "M=1", res)


def sol_x_system(alpha, x):
    a = np.asarray(alpha, dtype=complex)
    k = len(a)
    off = ~np.eye(k, dtype=bool)
    inv = np.where(off, 1.0 / np.where(off, a[:, None] - a[None, :], 1.0), 0.0)
    return inv.sum(axis=1) - complex(x) / a


def _gbinom(top, m: int):
    """Generalized binomial C(top, m) for complex top."""
    out = 1.0 + 0j
    for j in range(m):
        out *= (top - j) / (j + 1)
    return out


def laguerre_coefficients(k: int, x, lam) -> np.ndarray:
    """Ascending coefficients of L_k^{(-2kx-1)}(-2 lam x z) = sum C(k-2kx-1, k-m) (2 lam x z)^m / m!."""
    x = complex(x)
    lam = complex(lam)
    return np.array([_gbinom(k - 2 * k * x - 1, k - m) * (2 * lam * x) ** m / math.factorial(m)
                     for m in range(k + 1)])


def boundary_system(alpha, x):
    """f_mu = sum 1/(a_mu - a_nu) - (k-1) x / a_mu + sum_{nu != mu} x / a_nu."""
    a = np.asarray(alpha, dtype=complex)
    k = len(a)
    x = complex(x)
    inv = 1.0 / a
    return sol_x_system(a, 0.0) - (k - 1) * x * inv + x * (inv.sum() - inv)


def boundary_jacobian(alpha, x):
    a = np.asarray(alpha, dtype=complex)
    k = len(a)
    x = complex(x)
    off = ~np.eye(k, dtype=bool)
    d2 = np.where(off, 1.0 / np.where(off, a[:, None] - a[None, :], 1.0) ** 2, 0.0)
    J = d2 - x / a[None, :] ** 2
    J[np.diag_indices(k)] = -d2.sum(axis=1) + (k - 1) * x / a**2
    return J


def laguerre_family(k: int, x, lam=1.0) -> EquilibriumSolution:
    """Distinct-root solution of the boundary system with sum(1/alpha) = lam."""
    xe = _exact(x)
    x = complex(xe) if isinstance(xe, Fraction) else xe
    bad = [Fraction(j, 2 * k) for j in range(k - 1)]
    if _near_set(xe, bad):
        raise ExceptionalParameter(f"x = {x} lies in the excluded set of the boundary system",
                                   stratum="p(0)=0 or repeated roots")
    if k >= 2 and xe == Fraction(k - 1, 2 * k):
        # the Laguerre polynomial collapses to z^k; the solution is the
        # roots-of-unity ray, which has sum(1/alpha) = 0 so lam cannot be imposed
        sol = roots_of_unity_family(k, Fraction(k - 1, 2))
        resid = float(np.max(np.abs(boundary_system(sol.alpha, x))))
        cond = float(np.linalg.cond(boundary_jacobian(sol.alpha, x)))
        return EquilibriumSolution(sol.alpha, "roots of unity, M=1", resid, cond)
    if k == 1:
        alpha = np.array([1.0 / complex(lam)])
    else:
        coeffs = laguerre_coefficients(k, x, lam)
        alpha = np.roots(coeffs[::-1])
    x = complex(x)
    lam = complex(lam)

    # polish against the lam-normalized form, which has full rank
    def res(a):
        return sol_x_system(a, k * x) + x * lam

    def jac(a):
        kk = len(a)
        off = ~np.eye(kk, dtype=bool)
        d2 = np.where(off, 1.0 / np.where(off, a[:, None] - a[None, :], 1.0) ** 2, 0.0)
        J = d2.copy()
        J[np.diag_indices(kk)] = -d2.sum(axis=1) + k * x / a**2
        return J

    alpha, _ = _polish_roots(alpha, res, jac)
    alpha = np.array(sorted(alpha, key=lambda z: (z.real, z.imag)))
    resid = float(np.max(np.abs(boundary_system(alpha, x)))) if k > 1 else 0.0
    cond = float(np.linalg.cond(boundary_jacobian(alpha, x))) if k > 1 else 1.0
    return EquilibriumSolution(alpha, f"sum(1/alpha)={lam}", resid, cond)


def jacobi_coefficients(k: int, x, y) -> np.ndarray:
    """Ascending coefficients of P_k^{(-2x-1,-2y-1)}(z) in the falling-factorial form."""

    def falling(a, m):
        out = 1.0 + 0j
        for j in range(m):
            out *= a - j
        return out

    x, y = complex(x), complex(y)
    P = np.polynomial.Polynomial
    total = P([0j])
    for m in range(k + 1):
        term = math.comb(k, m) * falling(k - 2 * y - 1, m) * falling(k - 2 * x - 1, k - m)
        total = total + term * P([-1, 1]) ** m * P([1, 1]) ** (k - m)
    return (total / (2**k * math.factorial(k))).coef


def jacobi_exceptional(k: int, x, y):
    """Stratum of E_k hit by (x, y), or None."""
    xe, ye = _exact(x), _exact(y)
    half = [Fraction(j, 2) for j in range(k)]
    if _near_set(xe, half):
        return "alpha=1"
    if _near_set(ye, half):
        return "alpha=-1"
    s = xe + ye if isinstance(xe, Fraction) and isinstance(ye, Fraction) else complex(xe) + complex(ye)
    if _near_set(s, [Fraction(j, 2) for j in range(k - 1, 2 * k - 1)]):
        return "alpha=inf"
    return None


def jacobi_system(alpha, x, y):
    a = np.asarray(alpha, dtype=complex)
    return sol_x_system(a, 0.0) - complex(x) / (a - 1) - complex(y) / (a + 1)


def jacobi_jacobian(alpha, x, y):
    a = np.asarray(alpha, dtype=complex)
    k = len(a)
    off = ~np.eye(k, dtype=bool)
    d2 = np.where(off, 1.0 / np.where(off, a[:, None] - a[None, :], 1.0) ** 2, 0.0)
    J = d2.copy()
    J[np.diag_indices(k)] = -d2.sum(axis=1) + complex(x) / (a - 1) ** 2 + complex(y) / (a + 1) ** 2
    return J


def jacobi_family(k: int, x, y) -> EquilibriumSolution:
    stratum = jacobi_exceptional(k, x, y)
    if stratum is not None:
        raise ExceptionalParameter(f"(x, y) = ({x}, {y}) lies on the exceptional locus", stratum=stratum)
    coeffs = jacobi_coefficients(k, x, y)
    alpha = np.roots(coeffs[::-1]) if k > 1 else np.array([-coeffs[0] / coeffs[1]])
    alpha, resid = _polish_roots(alpha, lambda a: jacobi_system(a, x, y), lambda a: jacobi_jacobian(a, x, y))
    alpha = np.array(sorted(alpha, key=lambda z: (z.real, z.imag)))
    cond = float(np.linalg.cond(jacobi_jacobian(alpha, x, y)))
    return EquilibriumSolution(alpha, "fixed poles at +-1", resid, cond)


def jacobi_discriminant_factor(k: int, x, y) -> complex:
    """prod (j-2x-1)^(j-1) (j-2y-1)^(j-1) (k+j-2x-2y-2)^(k-j); vanishes only on E_k."""
    x, y = complex(x), complex(y)
    out = 1.0 + 0j
    for j in range(1, k + 1):
        out *= (j - 2 * x - 1) ** (j - 1) * (j - 2 * y - 1) ** (j - 1) * (k + j - 2 * x - 2 * y - 2) ** (k - j)
    return out


def hypergeometric_u_coefficients(r: int, x) -> np.ndarray:
    """Ascending coefficients of the monic-up-to-scale polynomial with roots u_2..u_r.

    With a_1 = 1 and u = a^2 the remaining equations read
    sum 1/(u_mu - u_nu) + 1/(u_mu - 1) + (x/2)/u_mu = 0; the roots solve
    z(z-1) q'' + 2(z + y(z-1)) q' + lam q = 0 with y = x/2, lam = -(r-1)(r+2y).
    """
    y = complex(x) / 2
    lam = -(r - 1) * (r + 2 * y)
    c = [1.0 + 0j]
    for j in range(r - 1):
        c.append(c[-1] * (j * (j + 1 + 2 * y) + lam) / ((j + 1) * (j + 2 * y)))
    return np.array(c)


def hypergeometric_block(r: int, x) -> list:
    """All (2r-2)!! solutions of the l = 1 system with d = (1, 0, ..., 0)."""
    xe = _exact(x)
    if _near_set(xe, [Fraction(-j) for j in range(2 * r - 1)]):
        raise ExceptionalParameter(f"x = {x} lies in the excluded set", stratum="u-polynomial degenerates")
    if r == 1:
        a = np.array([complex(x)])
        return [EquilibriumSolution(a, "d=e1", float(abs(rational_system(a, 1, x)[0] - 1)))]
    c = hypergeometric_u_coefficients(r, x)
    u = np.roots(c[::-1])
    sols = []
    for perm in itertools.permutations(range(r - 1)):
        for signs in itertools.product((1, -1), repeat=r - 1):
            a = np.concatenate([[1.0], np.array(signs) * np.sqrt(u[list(perm)])])
            kappa = rational_system(a, 1, x)[0]
            alpha = kappa * a
            target = np.zeros(r, dtype=complex)
            target[0] = 1
            alpha, _ = _polish_roots(alpha, lambda z: rational_system(z, 1, x) - target,
                                     lambda z: rational_jacobian(z, 1, x), maxit=3)
            resid = float(np.max(np.abs(rational_system(alpha, 1, x) - target)))
            cond = float(np.linalg.cond(rational_jacobian(alpha, 1, x)))
            sols.append(EquilibriumSolution(alpha, "d=e1", resid, cond))
    return sols


# ------------------------------------------------------------ power sums

def power_sum_reduction(q_coeffs, l: int, mode: str = "recursion"):
    """S1, S2 at every root of q (ascending coefficients), for exponents 1..l.

    mode "recursion" uses only derivatives of q at each root (Newton identities);
    mode "direct" sums over the numerically computed roots.
    Returns (roots, S1, S2) with S1[m-1][mu] = sum_{nu != mu} (a_mu - a_nu)^-m.
    """
    q = np.polynomial.Polynomial(np.asarray(q_coeffs, dtype=complex))
    roots = q.roots()
    k = len(roots)
    if mode == "direct":
        S1 = np.array([pair_sums(roots, m)[0] for m in range(1, l + 1)])
        S2 = np.array([pair_sums(roots, m)[1] for m in range(1, l + 1)])
        return roots, S1, S2
    if mode != "recursion":
        raise ValueError(f"unknown mode {mode!r}")
    derivs = [q.deriv(j) if j else q for j in range(l + 2)]
    qt = np.polynomial.Polynomial(q.coef * (-1.0) ** np.arange(len(q.coef)))
    dt = [qt.deriv(j) if j else qt for j in range(l + 1)]
    scale = np.max(np.abs(q.coef))
    S1 = np.zeros((l, k), dtype=complex)
    S2 = np.zeros((l, k), dtype=complex)
    for mu, a in enumerate(roots):
        q1 = derivs[1](a)
        # np.roots splits a double root by ~sqrt(eps), so q' there is only ~1e-8
        if abs(q1) < 1e-7 * scale * max(1.0, abs(a)) ** (k - 1):
            raise RootMultiplicity(f"root {a} is repeated")
        # q(a + w)/(w q'(a)) = prod_{nu != mu}(1 + w/(a - a_nu)) = sum (-1)^j c_j w^j
        c = [(-1) ** j * derivs[j + 1](a) / (math.factorial(j + 1) * q1) for j in range(l + 1)]
        S1[:, mu] = _newton_power_sums(c, l)
        qa = qt(a)
        ct = [(-1) ** j * dt[j](a) / (math.factorial(j) * qa) for j in range(l + 1)]
        St = _newton_power_sums(ct, l)
        S2[:, mu] = St - (2 * a) ** (-np.arange(1, l + 1, dtype=float))
    return roots, S1, S2


def _newton_power_sums(c, l):
    # m c_m + sum_{i=1}^m c_{m-i} S_i = 0 with c_0 = 1
    S = []
    for m in range(1, l + 1):
        S.append(-(m * c[m] + sum(c[m - i] * S[i - 1] for i in range(1, m))))
    return np.array(S)


# ------------------------------------------------------------ full rational system

def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _block_solutions(s: int, l: int, x, rng) -> list:
    """Solutions of the size-s block system with right-hand side (1, 0, ..., 0)."""
    x = complex(x)
    if s == 1:
        root = x ** (1.0 / l)
        return [np.array([root * np.exp(2j * np.pi * j / l)]) for j in range(l)]
    if l == 1:
        return [sol.alpha for sol in hypergeometric_block(s, x)]
    # ratios rho = alpha / alpha_1 solve the homogeneous equations 2..s
    if s == 2:
        P = np.polynomial.Polynomial
        poly = (P([0, 1]) ** l * (P([1, 1]) ** l + P([-1, 1]) ** l) + x * P([-1, 0, 1]) ** l)
        rhos = [np.array([1.0, rho]) for rho in poly.roots()]
    else:
        rhos = _ratio_multistart(s, l, x, rng, l ** (s - 1) * _double_factorial(2 * s - 2))
    out = []
    target = np.zeros(s, dtype=complex)
    target[0] = 1
    for rho in rhos:
        f1 = rational_system(rho, l, x)[0]
        for j in range(l):
            a1 = f1 ** (1.0 / l) * np.exp(2j * np.pi * j / l)
            alpha, _ = _polish_roots(a1 * rho, lambda z: rational_system(z, l, x) - target,
                                     lambda z: rational_jacobian(z, l, x), maxit=4)
            out.append(alpha)
    return out


def _ratio_multistart(s, l, x, rng, expected):
    def res(rho_tail):
        rho = np.concatenate([[1.0], rho_tail])
        return rational_system(rho, l, x)[1:]

    def jac(rho_tail):
        rho = np.concatenate([[1.0], rho_tail])
        return rational_jacobian(rho, l, x)[1:, 1:]

    found = []
    for _ in range(200 * expected):
        if len(found) >= expected:
            break
        z0 = (rng.normal(size=s - 1) + 1j * rng.normal(size=s - 1)) * 1.5
        with np.errstate(all="ignore"):
            z, ok, _ = newton(res, jac, z0, tol=1e-14, maxit=60)
        if not ok or not np.all(np.isfinite(z)):
            continue
        rho = np.concatenate([[1.0], z])
        if _rational_scale(rho) < 1e-6 or np.max(np.abs(rho)) > 1e6:
            continue
        if all(np.max(np.abs(rho - f)) > 1e-8 for f in found):
            found.append(rho)
    return found


def _double_factorial(m: int) -> int:
    return math.prod(range(m, 0, -2)) if m > 0 else 1


def expected_rational_count(r: int, l: int) -> int:
    return l**r * _double_factorial(2 * r - 1)


@dataclass
class RationalSolveReport:
    spec: RationalSystemSpec
    d: np.ndarray
    solutions: list
    expected_count: int
    stats: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.solutions)


def _start_configurations(r, l, x, t, rng):
    """Leading-order start points at d_mu = t^(mu+1), one per block-partition solution."""
    starts = []
    for part in _set_partitions(list(range(r))):
        blocks = sorted((sorted(b) for b in part), key=lambda b: b[0])
        per_block = []
        for b in blocks:
            smaller = sum(len(bb) for bb in blocks if bb[0] < b[0])
            x_eff = complex(x) + 2 * smaller
            scale = t ** (-(b[0] + 1) / l)
            per_block.append([(b, scale * sol) for sol in _block_solutions(len(b), l, x_eff, rng)])
        for combo in itertools.product(*per_block):
            a = np.zeros(r, dtype=complex)
            for b, vals in combo:
                a[b] = vals
            starts.append(a)
    return starts


def solve_rational_system(spec: RationalSystemSpec, seed: int = 0, opts: TrackOptions | None = None,
                          t: float | None = None) -> RationalSolveReport:
    r, l, x = spec.r, spec.l, complex(spec.x)
    if abs(x) == 0:
        raise ExceptionalParameter("x must be nonzero", stratum="x=0")
    d_target = spec.target(seed)
    rng = np.random.default_rng(seed)
    t = t if t is not None else 0.02 ** l
    d0 = t ** np.arange(1, r + 1, dtype=float) + 0j
    starts = _start_configurations(r, l, x, t, rng)

    def residual(a, s):
        return rational_system(a, l, x) - ((1 - s) * d0 + s * d_target)

    def jac(a, s):
        return rational_jacobian(a, l, x)

    def ds(a, s):
        return d0 - d_target

    H = Homotopy(residual, jac, ds, _rational_scale)
    opts = opts or TrackOptions(max_step=0.02, initial_step=1e-4, anti_jump=0.05, degenerate_scale=1e-9)
    finals = []
    failed = 0
    # diverging starts overflow before the tracker rejects them
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for a0 in starts:
            a1, ok, _ = newton(lambda a: residual(a, 0.0), lambda a: jac(a, 0.0), a0, tol=1e-14, maxit=30)
            if not ok:
                failed += 1
                continue
            res = track(H, a1, 0.0, 1.0, opts)
            if res.status != "ok":
                failed += 1
                continue
            a2, ok, _ = newton(lambda a: residual(a, 1.0), lambda a: jac(a, 1.0), res.x, tol=1e-15, maxit=10)
            finals.append(a2)
    sols = []
    for a in finals:
        if any(np.max(np.abs(a - s.alpha)) < 1e-8 * (1 + np.max(np.abs(a))) for s in sols):
            continue
        resid = float(np.max(np.abs(rational_system(a, l, x) - d_target)))
        sols.append(EquilibriumSolution(a, "ordered", resid, float(np.linalg.cond(rational_jacobian(a, l, x)))))
    sols.sort(key=lambda s: tuple(np.round(np.concatenate([s.alpha.real, s.alpha.imag]), 8)))
    stats = {"starts": len(starts), "failed": failed, "endpoints": len(finals),
             "duplicates": len(finals) - len(sols)}
    return RationalSolveReport(spec, d_target, sols, expected_rational_count(r, l), stats)


# ------------------------------------------------------------ Treibich system

def G_of(r: int) -> int:
    return 6**r * math.factorial(r + 1)


def _integer_partitions(r, max_part=None, max_len=4):
    max_part = r if max_part is None else max_part
    if r == 0:
        yield ()
        return
    if max_len == 0:
        return
    for first in range(min(r, max_part), 0, -1):
        for rest in _integer_partitions(r - first, first, max_len - 1):
            yield (first,) + rest


def treibich_census(r: int) -> int:
    """Sum over partitions k of r into at most 4 parts of placements times block counts.

    Placements of the parts onto the four half-periods number 4!/((4-#k)! Aut(k)).
    """
    total = Fraction(0)
    for k in _integer_partitions(r):
        aut = math.prod(math.factorial(k.count(v)) for v in set(k))
        placements = Fraction(math.factorial(4), math.factorial(4 - len(k)) * aut)
        multinom = math.factorial(r) // math.prod(math.factorial(v) for v in k)
        blocks = math.prod(3**v * _double_factorial(2 * v - 1) for v in k)
        total += placements * multinom * blocks
    assert total.denominator == 1
    return int(total)


def treibich_egf_count(r: int) -> int:
    """r! [x^r] (1 + A(x))^4 with A(x) = sum_{k>=1} 3^k (2k-1)!! x^k / k!."""
    coeffs = [Fraction(0)] + [Fraction(3**k * _double_factorial(2 * k - 1), math.factorial(k))
                              for k in range(1, r + 1)]
    one_plus = [Fraction(1)] + coeffs[1:]
    poly = [Fraction(1)] + [Fraction(0)] * r
    for _ in range(4):
        poly = [sum(poly[i] * one_plus[j - i] for i in range(j + 1)) for j in range(r + 1)]
    val = poly[r] * math.factorial(r)
    assert val.denominator == 1
    return int(val)


@dataclass(frozen=True)
class TreibichSpec:
    n: tuple
    r: int
    lattice: E.Lattice

    @property
    def weights(self) -> np.ndarray:
        return np.array([(2 * ni + 1) ** 2 for ni in self.n], dtype=float)


@dataclass
class TreibichReport:
    spec: TreibichSpec
    solutions: list
    ordered_paths: int
    endpoints: int
    escapes: int
    class_sizes: list
    max_residual: float

    @property
    def count(self) -> int:
        return len(self.solutions)


def _half_points(L):
    return np.array(L.half_periods(), dtype=complex)


def treibich_system(p, spec: TreibichSpec) -> np.ndarray:
    L = spec.lattice
    p = np.asarray(p, dtype=complex)
    r = len(p)
    hp = _half_points(L)
    w = spec.weights
    out = (E.wp((p[:, None] - hp[None, :]).ravel(), L, 1).reshape(r, 4) @ w).astype(complex)
    if r > 1:
        iu, ju = np.triu_indices(r, 1)
        dm = E.wp(p[iu] - p[ju], L, 1)
        dp = E.wp(p[iu] + p[ju], L, 1)
        np.add.at(out, iu, dm + dp)
        np.add.at(out, ju, -dm + dp)
    return out


def treibich_jacobian(p, spec: TreibichSpec) -> np.ndarray:
    L = spec.lattice
    p = np.asarray(p, dtype=complex)
    r = len(p)
    hp = _half_points(L)
    J = np.zeros((r, r), dtype=complex)
    diag = E.wp((p[:, None] - hp[None, :]).ravel(), L, 2).reshape(r, 4) @ spec.weights
    J[np.diag_indices(r)] = diag
    if r > 1:
        iu, ju = np.triu_indices(r, 1)
        d2m = E.wp(p[iu] - p[ju], L, 2)
        d2p = E.wp(p[iu] + p[ju], L, 2)
        np.add.at(J, (iu, iu), d2m + d2p)
        np.add.at(J, (ju, ju), d2m + d2p)
        J[iu, ju] += -d2m + d2p
        J[ju, iu] += -d2m + d2p
    return J


def _treibich_scale(p, L):
    from .glc import torus_dist
    p = np.asarray(p, dtype=complex)
    hp = _half_points(L)
    vals = [torus_dist((p[:, None] - hp[None, :]).ravel(), L)]
    if len(p) > 1:
        iu, ju = np.triu_indices(len(p), 1)
        vals += [torus_dist(p[iu] - p[ju], L), torus_dist(p[iu] + p[ju], L)]
    return float(np.min(np.concatenate(vals)))


def treibich_seed_scale(T: float):
    """Cluster at a half-period with F = T gamma: p = w/2 + eps alpha, eps = T^(-1/3), d = -gamma/2.

    Near a half-period wp'(z) = -2/z^3 + O(z), so the elliptic system is
    -(2/eps^3) F_3(alpha) + O(1) with the l = 3 rational system of weight (2n+1)^2.
    """
    return T ** (-1.0 / 3.0), -0.5


def _treibich_starts(spec: TreibichSpec, gamma, T, rng):
    eps, dfac = treibich_seed_scale(T)
    hp = _half_points(spec.lattice)
    w = spec.weights
    starts = []
    for assign in itertools.product(range(4), repeat=spec.r):
        blocks = [[mu for mu in range(spec.r) if assign[mu] == i] for i in range(4)]
        per = []
        for i, b in enumerate(blocks):
            if not b:
                continue
            sub = RationalSystemSpec(len(b), 3, w[i], tuple(dfac * gamma[b]))
            rep = solve_rational_system(sub, seed=int(rng.integers(1 << 31)))
            if rep.count != rep.expected_count:
                raise PathFailure(f"cluster seed system found {rep.count} of {rep.expected_count}")
            per.append([(b, hp[i] + eps * s.alpha) for s in rep.solutions])
        for combo in itertools.product(*per):
            p = np.zeros(spec.r, dtype=complex)
            for b, vals in combo:
                p[b] = vals
            starts.append(p)
    return starts


def _treibich_class_distance(p, q, L):
    from .glc import torus_dist
    p = np.asarray(p)
    q = np.asarray(q)
    dm = torus_dist((p[:, None] - q[None, :]).ravel(), L).reshape(len(p), len(q))
    dp = torus_dist((p[:, None] + q[None, :]).ravel(), L).reshape(len(p), len(q))
    cost = np.minimum(dm, dp)
    ri, ci = linear_sum_assignment(cost)
    return float(cost[ri, ci].max())


def treibich_count(spec: TreibichSpec, seed: int = 0, T: float = 1e6,
                   opts: TrackOptions | None = None) -> TreibichReport:
    """Ordered solutions by deformation from F = T gamma, then classes under signs and permutations."""
    L = spec.lattice
    r = spec.r
    rng = np.random.default_rng(seed)
    gamma = np.exp(2j * np.pi * rng.uniform(size=r)) * rng.uniform(0.7, 1.3, r)
    starts = _treibich_starts(spec, gamma, T, rng)
    target = T * gamma
    U = math.log(T) + 18.0

    def residual(p, u):
        return treibich_system(p, spec) - target * np.exp(-u)

    def jac(p, u):
        return treibich_jacobian(p, spec)

    def ds(p, u):
        return target * np.exp(-u)

    H = Homotopy(residual, jac, ds, lambda p: _treibich_scale(p, L))
    opts = opts or TrackOptions(max_step=0.3 / U, initial_step=0.01 / U, anti_jump=0.05, degenerate_scale=1e-9)
    finals = []
    escapes = 0
    for p0 in starts:
        p1, ok, _ = newton(lambda p: residual(p, 0.0), lambda p: jac(p, 0.0), p0, tol=1e-14, maxit=30)
        if not ok:
            escapes += 1
            continue
        res = track(H, p1, 0.0, U, opts)
        if res.status != "ok":
            escapes += 1
            continue
        p2, ok, _ = newton(lambda p: treibich_system(p, spec), lambda p: treibich_jacobian(p, spec),
                           res.x, tol=1e-14, maxit=10)
        if not ok or _treibich_scale(p2, L) < 1e-6:
            escapes += 1
            continue
        finals.append(p2)
    classes = []
    for idx, p in enumerate(finals):
        for c in classes:
            if _treibich_class_distance(c[0], p, L) < 1e-6:
                c[1].append(idx)
                break
        else:
            classes.append((p, [idx]))
    max_res = max((float(np.max(np.abs(treibich_system(p, spec)))) for p in finals), default=0.0)
    sols = [c[0] for c in classes]
    return TreibichReport(spec, sols, len(starts), len(finals), escapes,
                          [len(c[1]) for c in classes], max_res)
