"""Residue system of the generalized Lame ansatz, accessory parameters and fiber solving.

An ansatz point is a multiset a of N = sum(n_i) lifted roots plus the exponent h.
The ansatz e^{hz} prod sigma(z - a_mu) / prod sigma(z - p_i)^{n_i} solves a generalized
Lame equation exactly when every residue row vanishes.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import elliptic as E
from .errors import (ClusterAmbiguity, DedupAmbiguity, InconsistentB, PathFailure,
                     PoleAtLattice, PoleCollision, ZeroTotalWeight)
from .homotopy import Homotopy, TrackOptions, newton, track
from .weights import WeightVector, is_half_nat


class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def _wv(n) -> WeightVector:
    return n if isinstance(n, WeightVector) else WeightVector(n)


@dataclass(frozen=True)
class PoleConfig:
    p: tuple
    lattice: E.Lattice

    def __init__(self, p: Sequence[complex], lattice: E.Lattice):
        pts = tuple(complex(x) for x in p)
        for i, j in itertools.combinations(range(len(pts)), 2):
            if abs(E.reduce(pts[i] - pts[j], lattice).z) < 1e-10:
                raise PoleCollision(f"poles {i} and {j} coincide mod the lattice")
        object.__setattr__(self, "p", pts)
        object.__setattr__(self, "lattice", lattice)

    @property
    def r(self) -> int:
        return len(self.p)

    def with_p(self, p) -> "PoleConfig":
        return PoleConfig(p, self.lattice)


@dataclass(frozen=True)
class AnsatzPoint:
    a: tuple
    h: object
    n: WeightVector
    p: tuple
    branch: tuple | None = None

    @property
    def sigma(self) -> complex:
        return complex(sum(self.a, 0j) - sum(complex(w) * q for w, q in zip(self.n, self.p)))

    @property
    def finite(self) -> bool:
        return self.h is not INFINITY

    def canonical(self, L: E.Lattice) -> "AnsatzPoint":
        """Reduce roots into the fundamental cell (shifting h by eta) and sort them."""
        if not self.a:
            return self
        zr, m1, m2 = E.reduce_array(np.array(self.a), L)
        h = self.h
        if h is not INFINITY:
            # moving one root by omega moves h by eta(omega), since sum(n) = N
            h = complex(h) - sum(E.eta_of((int(x), int(y)), L) for x, y in zip(m1, m2))
        order = sorted(range(len(zr)), key=lambda k: (round(zr[k].real, 7), round(zr[k].imag, 7)))
        return AnsatzPoint(tuple(complex(zr[k]) for k in order), h, self.n, self.p, self.branch)


@dataclass(frozen=True)
class GLEParams:
    A: tuple
    B: complex
    B_sites: tuple = ()

    @property
    def A_sum(self) -> complex:
        return complex(sum(self.A))


@dataclass
class FiberSolution:
    point: AnsatzPoint
    multiplicity: Fraction
    paths: int
    residual: float


@dataclass
class FiberSolveReport:
    c: complex
    n: WeightVector
    solutions: list
    degenerate: list
    stats: dict
    degree_formula_value: int
    warnings: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.solutions)


@dataclass
class FiberOptions:
    seed: int = 0
    R: float | None = None
    dedup_tol: float = 1e-6
    threads: int = 1
    newton_tol: float = 1e-13
    multistart_factor: int = 80
    track: TrackOptions = field(default_factory=lambda: TrackOptions(anti_jump=0.05))


# ----------------------------------------------------------------- evaluation

def _site_arrays(n, P):
    return np.array([complex(w) for w in n]), np.array(P.p, dtype=complex)


def _zw(z, L):
    try:
        return E.zeta_wp(z, L)
    except PoleAtLattice as exc:
        raise PoleCollision(str(exc)) from exc


def _pieces(a, nv, pv, L, with_wp=True):
    a = np.asarray(a, dtype=complex)
    N = len(a)
    r = len(pv)
    iu, ju = np.triu_indices(N, 1)
    zs = np.concatenate([a[iu] - a[ju], (a[:, None] - pv[None, :]).ravel()])
    zz, pp = _zw(zs, L) if len(zs) else (np.zeros(0, complex), np.zeros(0, complex))
    m = len(iu)
    Zaa = np.zeros((N, N), dtype=complex)
    Zaa[iu, ju] = zz[:m]
    Zaa[ju, iu] = -zz[:m]
    Paa = np.zeros((N, N), dtype=complex)
    Paa[iu, ju] = pp[:m]
    Paa[ju, iu] = pp[:m]
    Zap = zz[m:].reshape(N, r)
    Pap = pp[m:].reshape(N, r)
    return Zaa, Paa, Zap, Pap


def _rows_and_jac(a, nv, pv, L):
    N = len(a)
    Zaa, Paa, Zap, Pap = _pieces(a, nv, pv, L)
    Z = Zap @ nv
    W = Pap @ nv
    T = Z.sum()
    rows = N * Zaa.sum(axis=1) - N * Z + T
    J = N * Paa - W[None, :]
    J[np.diag_indices(N)] = -N * Paa.sum(axis=1) + (N - 1) * W
    return rows, J


def residue_system(a, n, P: PoleConfig) -> np.ndarray:
    """Rows sum_i sum_{nu != mu} n_i (zeta(a_mu - a_nu) - zeta(a_mu - p_i) + zeta(a_nu - p_i))."""
    n = _wv(n)
    nv, pv = _site_arrays(n, P)
    a = np.asarray(a, dtype=complex)
    if len(a) <= 1:
        return np.zeros(len(a), dtype=complex)
    return _rows_and_jac(a, nv, pv, P.lattice)[0]


def residue_jacobian(a, n, P: PoleConfig) -> np.ndarray:
    n = _wv(n)
    nv, pv = _site_arrays(n, P)
    return _rows_and_jac(np.asarray(a, dtype=complex), nv, pv, P.lattice)[1]


def h_of(a, n, P: PoleConfig) -> complex:
    n = _wv(n)
    total = complex(n.total)
    if abs(total) < 1e-14:
        raise ZeroTotalWeight("h is a free parameter when the total weight vanishes")
    nv, pv = _site_arrays(n, P)
    a = np.asarray(a, dtype=complex)
    if len(a) == 0:
        return 0j
    zz, _ = _zw((a[:, None] - pv[None, :]).ravel(), P.lattice)
    return complex(np.sum(zz.reshape(len(a), -1) @ nv) / total)


def make_point(a, n, P: PoleConfig, h=None) -> AnsatzPoint:
    n = _wv(n)
    if h is None:
        h = h_of(a, n, P)
    return AnsatzPoint(tuple(complex(x) for x in a), h, n, P.p)


def _site_coefficients(a, h, n, P: PoleConfig):
    """Per-site A_i and B_i (B evaluated from each site separately)."""
    L = P.lattice
    nv, pv = _site_arrays(n, P)
    r = len(pv)
    a = np.asarray(a, dtype=complex)
    A = np.zeros(r, dtype=complex)
    C = np.zeros(r, dtype=complex)
    D = np.zeros(r, dtype=complex)
    Zpp = np.zeros((r, r), dtype=complex)
    Ppp = np.zeros((r, r), dtype=complex)
    for i, j in itertools.permutations(range(r), 2):
        Zpp[i, j], Ppp[i, j] = _zw(pv[i] - pv[j], L)
    for i in range(r):
        if len(a):
            za, pa = _zw(pv[i] - a, L)
        else:
            za, pa = np.zeros(0), np.zeros(0)
        others = [j for j in range(r) if j != i]
        C[i] = h + np.sum(za) - sum(nv[j] * Zpp[i, j] for j in others)
        D[i] = -np.sum(pa) + sum(nv[j] * Ppp[i, j] for j in others)
        A[i] = -2 * nv[i] * C[i]
    Bs = np.zeros(r, dtype=complex)
    for i in range(r):
        others = [j for j in range(r) if j != i]
        Bs[i] = (C[i] ** 2 + (1 - 2 * nv[i]) * D[i]
                 - sum(nv[j] * (nv[j] + 1) * Ppp[i, j] + A[j] * Zpp[i, j] for j in others))
    return A, Bs


def coefficients_AB(point: AnsatzPoint, P: PoleConfig, tol: float = 1e-6) -> GLEParams:
    if not point.finite:
        raise ValueError("coefficients_AB needs a finite h")
    A, Bs = _site_coefficients(point.a, complex(point.h), point.n, P)
    scale = max(1.0, float(np.max(np.abs(Bs))))
    if np.max(np.abs(Bs - Bs[0])) > tol * scale:
        raise InconsistentB(f"site values of B disagree: {Bs}")
    return GLEParams(tuple(complex(x) for x in A), complex(np.mean(Bs)), tuple(complex(x) for x in Bs))


def gle_potential(z, params: GLEParams, n, P: PoleConfig):
    n = _wv(n)
    nv, pv = _site_arrays(n, P)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    zz, pp = _zw((z[:, None] - pv[None, :]).ravel(), P.lattice)
    zz = zz.reshape(len(z), -1)
    pp = pp.reshape(len(z), -1)
    return pp @ (nv * (nv + 1)) + zz @ np.array(params.A) + params.B


def log_derivative(z, point: AnsatzPoint, P: PoleConfig):
    """(w'/w, (w'/w)') for the ansatz at the sample points."""
    nv, pv = _site_arrays(point.n, P)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    a = np.asarray(point.a, dtype=complex)
    phi = np.full(len(z), complex(point.h))
    dphi = np.zeros(len(z), dtype=complex)
    if len(a):
        za, pa = _zw((z[:, None] - a[None, :]).ravel(), P.lattice)
        phi += za.reshape(len(z), -1).sum(axis=1)
        dphi -= pa.reshape(len(z), -1).sum(axis=1)
    zp, pp = _zw((z[:, None] - pv[None, :]).ravel(), P.lattice)
    phi -= zp.reshape(len(z), -1) @ nv
    dphi += pp.reshape(len(z), -1) @ nv
    return phi, dphi


def verify_gle(point: AnsatzPoint, P: PoleConfig, sample_z, params: GLEParams | None = None) -> float:
    params = params or coefficients_AB(point, P)
    phi, dphi = log_derivative(sample_z, point, P)
    Q = gle_potential(sample_z, params, point.n, P)
    return float(np.max(np.abs(dphi + phi**2 - Q)))


@dataclass(frozen=True)
class AdditionValue:
    lift: complex
    reduced: complex
    shift: tuple


def addition_map(point_or_a, n, P: PoleConfig) -> AdditionValue:
    n = _wv(n)
    a = point_or_a.a if isinstance(point_or_a, AnsatzPoint) else point_or_a
    lift = complex(sum(a, 0j) - sum(complex(w) * q for w, q in zip(n, P.p)))
    red = E.reduce(lift, P.lattice)
    return AdditionValue(lift, red.z, red.shift)


def degree_formula(n, r: int | None = None) -> int:
    n = _wv(n)
    r = n.r if r is None else r
    total = n.total_int
    I = n.half_integer_index_set
    out = 0
    for size in range(len(I) + 1):
        for J in itertools.combinations(I, size):
            nJ = total - sum(int(2 * n[j] + 1) for j in J)
            if nJ + r >= r + 1:
                out += (-1) ** size * math.comb(nJ + r, r + 1)
    return out


def start_path_count(N: int, r: int) -> int:
    return math.factorial(N) * math.comb(N + r, r + 1)


# ---------------------------------------------------------------- distances

def torus_dist(z, L: E.Lattice):
    zr, _, _ = E.reduce_array(np.asarray(z, dtype=complex), L)
    # the half-open cell can split near-boundary neighbours; check adjacent translates
    best = np.abs(zr)
    for m1, m2 in ((1, 0), (0, 1), (1, 1), (1, -1)):
        w = m1 + m2 * L.tau
        best = np.minimum(best, np.minimum(np.abs(zr - w), np.abs(zr + w)))
    return best


def multiset_distance(a, b, L: E.Lattice) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) != len(b):
        return np.inf
    if len(a) == 0:
        return 0.0
    cost = torus_dist((a[:, None] - b[None, :]).ravel(), L).reshape(len(a), len(b))
    ri, ci = linear_sum_assignment(cost)
    return float(cost[ri, ci].max())


def local_scale(a, pv, L: E.Lattice) -> float:
    a = np.asarray(a, dtype=complex)
    N = len(a)
    d = [torus_dist((a[:, None] - pv[None, :]).ravel(), L)]
    if N > 1:
        iu, ju = np.triu_indices(N, 1)
        d.append(torus_dist(a[iu] - a[ju], L))
    return float(np.min(np.concatenate(d)))


# ------------------------------------------------------------- start systems

def _leading_system(labels, nv, gamma):
    """Scaled cluster model: residual and Jacobian of L_mu(x) - gamma_mu plus the gauge sum(x)."""
    N = len(labels)
    lab = np.asarray(labels)
    wpole = np.array([nv[b - 1] if b >= 1 else 0.0 for b in labels], dtype=complex)
    inpole = lab >= 1
    same = (lab[:, None] == lab[None, :]) & ~np.eye(N, dtype=bool)

    def res(x):
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = np.where(same, 1.0 / diff, 0.0)
        T = np.sum(np.where(inpole, wpole / np.where(inpole, x, 1.0), 0.0))
        L = N * inv.sum(axis=1) - N * np.where(inpole, wpole / np.where(inpole, x, 1.0), 0.0) + T
        out = np.empty(N, dtype=complex)
        out[:-1] = L[:-1] - gamma[:-1]
        out[-1] = x.sum()
        return out

    def jac(x):
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        inv2 = np.where(same, 1.0 / diff**2, 0.0)
        xs = np.where(inpole, x, 1.0)
        dT = np.where(inpole, -wpole / xs**2, 0.0)
        J = N * inv2 + dT[None, :]
        J[np.diag_indices(N)] = -N * inv2.sum(axis=1) + np.where(inpole, N * wpole / xs**2, 0.0) + dT
        J[-1, :] = 1.0
        return J

    return res, jac


def _solve_leading(labels, nv, gamma, rng, factor):
    N = len(labels)
    blocks = [sum(1 for b in labels if b == j) for j in range(max(labels) + 1)]
    expected = math.factorial(blocks[0] - 1) * math.prod(math.factorial(s) for s in blocks[1:])
    res, jac = _leading_system(labels, nv, gamma)
    lab = np.asarray(labels)
    found = []
    tries = 0
    while len(found) < expected and tries < factor * expected + 50:
        tries += 1
        x = (rng.normal(size=N) + 1j * rng.normal(size=N)) * rng.uniform(0.3, 3.0)
        x -= x.mean() if np.all(lab == 0) else 0
        ok = False
        for _ in range(80):
            try:
                F = res(x)
                dx = np.linalg.solve(jac(x), -F)
            except np.linalg.LinAlgError:
                break
            lam = 1.0
            f0 = np.linalg.norm(F)
            while lam > 1e-4:
                xn = x + lam * dx
                if np.all(np.isfinite(xn)) and np.linalg.norm(res(xn)) < (1 - 0.25 * lam) * f0 + 1e-300:
                    break
                lam *= 0.5
            x = x + lam * dx
            if np.linalg.norm(dx) < 1e-14 * (1 + np.linalg.norm(x)):
                ok = True
                break
        if not ok or not np.all(np.isfinite(x)):
            continue
        if np.linalg.norm(res(x)) > 1e-10 * (1 + np.linalg.norm(gamma)):
            continue
        same = (lab[:, None] == lab[None, :]) & ~np.eye(N, dtype=bool)
        if same.any() and np.min(np.abs(x[:, None] - x[None, :])[same]) < 1e-6:
            continue
        if np.any(np.abs(x[lab >= 1]) < 1e-6) or np.max(np.abs(x)) > 1e6:
            continue
        if all(np.max(np.abs(x - y)) > 1e-7 for y in found):
            found.append(x)
    return found, expected


def _start_points(n: WeightVector, P: PoleConfig, C: complex, gamma, rng, opts: FiberOptions):
    L = P.lattice
    N = n.total_int
    r = n.r
    nv, pv = _site_arrays(n, P)
    seeds = []  # (centers, x)
    deficits = []
    for labels in itertools.product(range(r + 1), repeat=N):
        if 0 not in labels:
            continue
        xs, expected = _solve_leading(labels, nv, gamma, rng, opts.multistart_factor)
        if len(xs) < expected:
            deficits.append((labels, len(xs), expected))
        k0 = sum(1 for b in labels if b == 0)
        rest = sum(pv[b - 1] for b in labels if b >= 1)
        for m1 in range(k0):
            for m2 in range(k0):
                b = (C - rest + m1 + m2 * L.tau) / k0
                centers = np.array([b if lb == 0 else pv[lb - 1] for lb in labels])
                # keep the lifted sum equal to C: one root of the cluster carries the lattice shift
                centers[labels.index(0)] -= m1 + m2 * L.tau
                for x in xs:
                    seeds.append((centers, x))
    # a cluster of more than 2 n_j roots at a half-integer pole loses solutions
    # (the leading model degenerates); those paths start at infinity
    return seeds, deficits


# ------------------------------------------------------------------ solving

def _fiber_homotopy(nv, pv, L, C, target):
    N = len(target)

    def residual(a, u):
        rows, _ = _rows_and_jac(a, nv, pv, L)
        out = np.empty(N, dtype=complex)
        out[:-1] = rows[:-1] - target[:-1] * np.exp(-u)
        out[-1] = a.sum() - C
        return out

    def jac(a, u):
        _, J = _rows_and_jac(a, nv, pv, L)
        J = J.copy()
        J[-1, :] = 1.0
        return J

    def ds(a, u):
        out = np.zeros(N, dtype=complex)
        out[:-1] = target[:-1] * np.exp(-u)
        return out

    return Homotopy(residual, jac, ds, lambda a: local_scale(a, pv, L))


def solve_square(a0, nv, pv, L, C, rows_target=None, tol=1e-13, maxit=30):
    N = len(a0)
    tgt = np.zeros(N, dtype=complex) if rows_target is None else rows_target
    H = _fiber_homotopy(nv, pv, L, C, tgt)
    return newton(lambda a: H.residual(a, 0.0), lambda a: H.jac(a, 0.0), a0, tol=tol, maxit=maxit)


def _classify_degenerate(a, pv, L, tol=1e-4):
    near = []
    for x in a:
        d = torus_dist(x - pv, L)
        j = int(np.argmin(d))
        near.append(j if d[j] < tol else -1)
    k = [near.count(j) for j in range(len(pv))]
    return {"k": k, "roots": [complex(x) for x in a]}


def solve_fiber(n, P: PoleConfig, c: complex, opts: FiberOptions | None = None) -> FiberSolveReport:
    """All interior points of the fiber of the addition map over c, by cluster-start homotopy."""
    opts = opts or FiberOptions()
    n = _wv(n)
    N = n.total_int
    if N < 1:
        raise ZeroTotalWeight("solve_fiber needs total weight >= 1")
    L = P.lattice
    nv, pv = _site_arrays(n, P)
    C = complex(c) + complex(np.sum(nv * pv))
    deg = degree_formula(n)
    if N == 1:
        a = (C,)
        pt = make_point(a, n, P).canonical(L)
        sol = FiberSolution(pt, Fraction(1), 1, 0.0)
        return FiberSolveReport(complex(c), n, [sol], [], {"paths": 1, "interior_paths": 1,
                                                         "degenerate_paths": 0, "failed_paths": 0}, deg)
    rng = np.random.default_rng(opts.seed)
    phases = np.exp(2j * np.pi * rng.uniform(size=N - 1))
    gamma = np.empty(N, dtype=complex)
    gamma[:-1] = phases
    gamma[-1] = -phases.sum()
    with np.errstate(all="ignore"):
        seeds, deficits = _start_points(n, P, C, gamma, rng, opts)
    missing = sum(e - f for _, f, e in deficits)

    # choose R so every cluster is small compared with the distance between cluster centres
    R = opts.R or 1e3
    for centers, x in seeds:
        # clusters must also stay clear of poles they are not attached to
        pts = np.concatenate([centers, pv])
        iu, ju = np.triu_indices(len(pts), 1)
        dc = torus_dist(pts[iu] - pts[ju], L)
        dc = dc[dc > 1e-9]
        dmin = float(dc.min()) if len(dc) else 1.0
        R = max(R, 200.0 * float(np.max(np.abs(x))) / max(dmin, 1e-6))
    target = R * gamma

    starts = []
    for centers, x in seeds:
        a0 = centers + x / R
        a1, ok, _ = solve_square(a0, nv, pv, L, C, rows_target=target)
        if ok:
            starts.append(a1)
    stats = {"paths": start_path_count(N, n.r), "tracked_paths": len(starts), "R": R,
             "paths_at_infinity": missing, "start_failures": len(seeds) - len(starts)}
    if len(seeds) + missing != stats["paths"] or len(starts) != len(seeds):
        raise PathFailure(f"start system incomplete: {len(starts)} of {stats['paths']} paths")
    H = _fiber_homotopy(nv, pv, L, C, target)
    U = math.log(R) + 20.0
    topts = dataclasses.replace(opts.track, max_step=min(opts.track.max_step, 0.3 / U),
                                initial_step=min(opts.track.initial_step, 0.02 / U))

    def run(a0):
        return track(H, a0, 0.0, U, topts)

    if opts.threads and opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(a0) for a0 in starts]

    interior, degenerate, failed = [], [], 0
    for res in results:
        if res.status == "failed":
            if local_scale(res.x, pv, L) < 1e-3:
                degenerate.append(_classify_degenerate(res.x, pv, L, tol=1e-3))
            else:
                failed += 1
            continue
        a_end = res.x
        if res.status == "ok":
            a_fin, ok, _ = solve_square(a_end, nv, pv, L, C, tol=opts.newton_tol)
            if ok and local_scale(a_fin, pv, L) > 1e-5 and np.max(np.abs(a_fin - a_end)) < 1e-4:
                interior.append(a_fin)
                continue
        degenerate.append(_classify_degenerate(a_end, pv, L))
    stats.update({"interior_paths": len(interior), "degenerate_paths": len(degenerate) + missing,
                  "failed_paths": failed})

    points = [make_point(a, n, P).canonical(L) for a in interior]
    groups = []
    for idx, pt in enumerate(points):
        for g in groups:
            d = multiset_distance(g[0].a, pt.a, L)
            if d < opts.dedup_tol:
                g[1].append(idx)
                break
            # a loose user tolerance decides on its own; the band only guards tight ones
            if d < min(10 * opts.dedup_tol, 1e-3):
                raise DedupAmbiguity(f"endpoints at distance {d:.2e}")
        else:
            groups.append((pt, [idx]))
    sols = []
    for pt, members in groups:
        resid = float(np.max(np.abs(residue_system(pt.a, n, P))))
        sols.append(FiberSolution(pt, Fraction(len(members), math.factorial(N)), len(members), resid))
    sols.sort(key=lambda s: tuple((round(z.real, 8), round(z.imag, 8)) for z in s.point.a))
    report = FiberSolveReport(complex(c), n, sols, degenerate, stats, deg)
    if any(s.multiplicity.denominator != 1 for s in sols):
        msg = "non-integral path multiplicity; paths probably jumped between branches"
        report.warnings.append(msg)
        warnings.warn(msg)
    if len(sols) > 1:
        dmin = min(multiset_distance(s.point.a, t.point.a, L) for s, t in itertools.combinations(sols, 2))
        if dmin < 1e-4:
            msg = f"two fiber points within {dmin:.1e}; target may be near the branch divisor"
            report.warnings.append(msg)
            warnings.warn(msg)
    return report


def _match_sum(a, C, L):
    """Re-lift roots so that sum(a) = C: lattice part on one root, remainder spread evenly."""
    diff = C - a.sum()
    red = E.reduce(diff, L)
    a = a.copy()
    a[0] += diff - red.z
    return a + red.z / len(a)


def refine_fiber(points: Sequence[AnsatzPoint], n, P: PoleConfig, c: complex, tol=1e-13):
    """Newton-continue known fiber points to a nearby (p, tau, c)."""
    n = _wv(n)
    nv, pv = _site_arrays(n, P)
    C = complex(c) + complex(np.sum(nv * pv))
    out = []
    for pt in points:
        a0 = _match_sum(np.array(pt.a, dtype=complex), C, P.lattice)
        a1, ok, _ = solve_square(a0, nv, pv, P.lattice, C, tol=tol)
        if not ok:
            raise PathFailure("fiber refinement did not converge")
        out.append(make_point(a1, n, P))
    return out


# ------------------------------------------------------------------ boundary

@dataclass(frozen=True)
class BoundaryPoint:
    k: tuple
    point: AnsatzPoint
    branch: tuple


def boundary_typeI(n, P: PoleConfig) -> list:
    """Type-I boundary configurations [k_1 p_1, ..., k_r p_r] with their branch points."""
    from .logfree import type_one_configurations
    n = _wv(n)
    out = []
    for k in type_one_configurations(n):
        a = tuple(q for q, kk in zip(P.p, k) for _ in range(kk))
        branch = tuple(2 * (w - kk) for w, kk in zip(n, k)) + (Fraction(1),)
        out.append(BoundaryPoint(tuple(k), AnsatzPoint(a, INFINITY, n, P.p, branch), branch))
    return out


def boundary_cluster_roots(n_j, k_j: int, s: complex = 1.0):
    """Leading offsets alpha of a size-k_j cluster at a pole of weight n_j (scale parameter s)."""
    from .equilibrium import laguerre_family
    if k_j == 0:
        return np.zeros(0, dtype=complex)
    x = complex(n_j) / k_j
    return np.asarray(laguerre_family(k_j, x, s / x).alpha)


def boundary_typeII_constraints(n, P: PoleConfig, point_prime: AnsatzPoint, collapsed: Sequence[int]):
    """Log-free obstructions F_{2 n_s}(A', B') at each collapsed pole s."""
    from .logfree import frobenius_Fl, site_from_lattice
    n = _wv(n)
    A, Bs = _site_coefficients(point_prime.a, complex(point_prime.h), point_prime.n, P)
    B = complex(np.mean(Bs))
    ells = [int(2 * n[s]) for s in collapsed]
    site = site_from_lattice(P.p, n, P.lattice, order=max(ells) - 1)
    return np.array([frobenius_Fl(int(2 * n[s]), s, site, A, B) for s in collapsed])


# -------------------------------------------------------------- degeneration

@dataclass
class DegenerationTrack:
    k: int
    limit_roots: tuple
    limit_point: AnsatzPoint | None
    cluster_alpha: tuple
    h_shift: complex | None
    sigma_limit: complex | None


@dataclass
class DegenerationReport:
    n: WeightVector
    omega: tuple
    tracks: list
    strata: dict
    expected_shift: complex
    c: complex


def _degeneration_homotopy(nv, pv_rest, L, C0, p2, omega_v, t0, t1):
    """Track in s in [0, 1] with p1 = p2 + omega + t(s), t(s) = t0 (t1/t0)^s."""
    log_ratio = np.log(t1 / t0)

    def tval(s):
        return t0 * np.exp(s * log_ratio)

    def poles(s):
        return np.concatenate([[p2 + omega_v + tval(s)], pv_rest])

    def residual(a, s):
        pv = poles(s)
        rows, _ = _rows_and_jac(a, nv, pv, L)
        out = rows.copy()
        out[-1] = a.sum() - C0 - np.sum(nv * pv)
        return out

    def jac(a, s):
        _, J = _rows_and_jac(a, nv, poles(s), L)
        J = J.copy()
        J[-1, :] = 1.0
        return J

    def ds(a, s):
        pv = poles(s)
        N = len(a)
        dp1 = tval(s) * log_ratio
        _, pp = _zw(a - pv[0], L)
        d_rows = (-N * nv[0] * pp + nv[0] * pp.sum()) * dp1
        out = d_rows.copy()
        out[-1] = -nv[0] * dp1
        return out

    def scale(a):
        return local_scale(a, poles(0.0)[1:], L)

    return Homotopy(residual, jac, ds, scale), tval, poles


def _richardson(v1, v2, v4):
    """Second-order extrapolation to t = 0 from samples at t, t/2, t/4."""
    return (v1 - 6 * v2 + 8 * v4) / 3


def trace_degeneration(n, P: PoleConfig, c: complex, omega=(0, 0), t0: complex = 0.3 * np.exp(0.7j),
                       t_end: float = 3e-4, opts: FiberOptions | None = None) -> DegenerationReport:
    """Track the fiber over c while p_1 = p_2 + omega + t collapses onto p_2.

    P supplies p_2..p_r; p_1 is overwritten along the path. Samples are taken at
    t = 4 t_end, 2 t_end, t_end and extrapolated to t = 0. Much smaller t is useless
    for clustered roots: a - p_2 = t beta loses digits like eps / t.
    Cluster coefficients are reported as alpha = 2 beta - 1 with beta = (a - p_2) / t.
    """
    opts = opts or FiberOptions()
    n = _wv(n)
    L = P.lattice
    nv = np.array([complex(w) for w in n])
    p2 = P.p[1]
    omega_v = omega[0] + omega[1] * L.tau
    pv_rest = np.array(P.p[1:], dtype=complex)
    P0 = PoleConfig((p2 + omega_v + t0,) + tuple(P.p[1:]), L)
    rep = solve_fiber(n, P0, c, opts)
    C0 = complex(c)
    phase = np.exp(1j * np.angle(t0))
    ts = [t0] + [m * t_end * phase for m in (4, 2, 1)]
    segments = [_degeneration_homotopy(nv, pv_rest, L, C0, p2, omega_v, ta, tb)[0]
                for ta, tb in zip(ts[:-1], ts[1:])]
    topts = TrackOptions(anti_jump=0.05, degenerate_scale=0.0, max_step=0.05)
    expected_shift = -complex(n[0]) * E.eta_of(omega, L)
    tracks = []
    for sol in rep.solutions:
        a = _match_sum(np.array(sol.point.a, dtype=complex), C0 + np.sum(nv * P0.p), L)
        samples = []
        for H in segments:
            res = track(H, a, 0.0, 1.0, topts)
            if res.status != "ok":
                raise PathFailure(f"degeneration path failed: {res.message}")
            a = res.x
            samples.append(a.copy())
        tracks.append(_analyze_degeneration(samples, ts[1:], n, nv, p2, omega_v, pv_rest, L))
    strata = {}
    for tr in tracks:
        strata[tr.k] = strata.get(tr.k, 0) + 1
    return DegenerationReport(n, tuple(omega), tracks, dict(sorted(strata.items())), expected_shift, C0)


def _analyze_degeneration(samples, ts, n, nv, p2, omega_v, pv_rest, L):
    d = [torus_dist(a - p2, L) for a in samples]
    ratio = d[2] / d[0]
    near = ratio < 0.4
    far = ratio > 0.9
    if np.any(~near & ~far):
        raise ClusterAmbiguity(f"roots neither cluster nor stay away: distance ratios {ratio}")
    k = int(near.sum())
    betas = []
    for a, t in zip(samples, ts):
        zr, _, _ = E.reduce_array(a[near] - p2, L)
        betas.append(zr / t)
    if k:
        # align the samples root by root before extrapolating
        for j in (1, 2):
            cost = np.abs(betas[0][:, None] - betas[j][None, :])
            _, ci = linear_sum_assignment(cost)
            betas[j] = betas[j][ci]
    b0 = _richardson(*betas)
    alpha = tuple(sorted((complex(2 * b - 1) for b in b0), key=lambda z: (z.real, z.imag)))
    hs = []
    for a, t in zip(samples, ts):
        pv = np.concatenate([[p2 + omega_v + t], pv_rest])
        zz, _ = _zw((a[:, None] - pv[None, :]).ravel(), L)
        hs.append(np.sum(zz.reshape(len(a), -1) @ nv) / len(a))
    h_lim = _richardson(*hs)

    # far roots: Richardson on the multiset as well
    fars = [a[~near] for a in samples]
    roots = _richardson(*fars) if len(fars[0]) else fars[0]
    n_red = [n[0] + n[1] - k] + list(n[2:])
    limit_point = shift = sigma_lim = None
    if len(roots) >= 1 and n_red[0] != 0:
        n_red = WeightVector(n_red)
        P_red = PoleConfig(tuple(pv_rest), L)
        nv_red = np.array([complex(w) for w in n_red])
        sigma_lim = complex(roots.sum() - np.sum(nv_red * pv_rest))
        if len(roots) > 1:
            a_red, ok, _ = solve_square(roots, nv_red, pv_rest, L, roots.sum())
            if not ok:
                raise PathFailure("limit point polish failed")
        else:
            a_red = roots
        limit_point = make_point(a_red, n_red, P_red)
        shift = complex(h_lim - limit_point.h)
    return DegenerationTrack(k, tuple(complex(x) for x in roots), limit_point, alpha, shift, sigma_lim)
