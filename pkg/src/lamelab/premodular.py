"""Monodromy data, deformed Hecke functions and pre-modular forms of ansatz solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import elliptic as E
from .errors import DegenerateDeformation, DegreeDeficit, PathFailure, PoleAtLattice, PoleAtSingularity
from .glc import (AnsatzPoint, FiberOptions, PoleConfig, _wv, degree_formula, refine_fiber,
                  solve_fiber, torus_dist)


def _zeta1(z, L):
    try:
        return complex(E.zeta(z, L))
    except PoleAtLattice as exc:
        raise PoleAtSingularity(str(exc)) from None


def hecke_Z(t: complex, s: complex, L: E.Lattice) -> complex:
    """Z_{t,s} = zeta(t + s tau) - t eta1 - s eta2."""
    return complex(E.zeta(t + s * L.tau, L)) - t * L.eta1 - s * L.eta2


def zeta_n(z: complex, n, p: Sequence[complex], L: E.Lattice) -> complex:
    """sum_i n_i zeta(z - p_i)."""
    return sum(complex(w) * _zeta1(z - q, L) for w, q in zip(_wv(n), p))


def deformed_Z(n, t: complex, s: complex, p: Sequence[complex], L: E.Lattice) -> complex:
    n = _wv(n)
    return zeta_n(t + s * L.tau, n, p, L) / complex(n.total) - t * L.eta1 - s * L.eta2


def fundamental_z(point: AnsatzPoint, P: PoleConfig) -> complex:
    """zeta_n(sigma_n(a), p)/n - h; lattice invariant in a."""
    if not point.finite:
        raise PoleAtSingularity("fundamental_z is infinite on the Type-I boundary (h = oo)")
    return zeta_n(point.sigma, point.n, P.p, P.lattice) / complex(point.n.total) - complex(point.h)


def ts_of(sigma: complex, h: complex, L: E.Lattice) -> tuple:
    """Solve t + s tau = sigma, t eta1 + s eta2 = h."""
    M = np.array([[1.0, L.tau], [L.eta1, L.eta2]], dtype=complex)
    t, s = np.linalg.solve(M, np.array([sigma, h], dtype=complex))
    return complex(t), complex(s)


# ------------------------------------------------------------------ monodromy

@dataclass
class MonodromyData:
    t: complex
    s: complex
    lambda1: complex   # e^{-2 pi i s}, sign excluded
    lambda2: complex   # e^{2 pi i t}
    ratio1: complex | None = None   # w(z0 + 1)/w(z0) by continuation along a segment
    ratio2: complex | None = None   # w(z0 + tau)/w(z0)
    sign1: complex | None = None
    sign2: complex | None = None
    z0: complex | None = None

    @property
    def eigenvalues(self) -> tuple:
        s1 = 1 if self.sign1 is None else self.sign1
        s2 = 1 if self.sign2 is None else self.sign2
        return s1 * self.lambda1, s2 * self.lambda2


def _segment(z0, omega, m):
    return z0 + omega * np.linspace(0.0, 1.0, m + 1)


def choose_base_point(singular: Sequence[complex], L: E.Lattice, samples: int = 64) -> complex:
    """Base point in the open cell whose two period segments stay far from the singular points."""
    sing = np.asarray(singular, dtype=complex)
    best, best_d = None, -1.0
    for u in np.linspace(0.05, 0.95, 13):
        for v in np.linspace(0.1, 0.9, 13):
            z0 = u + v * L.tau
            pts = np.concatenate([_segment(z0, 1.0, samples), _segment(z0, L.tau, samples)])
            if len(sing):
                d = float(np.min(torus_dist((pts[:, None] - sing[None, :]).ravel(), L)))
            else:
                d = 1.0
            if d > best_d:
                best, best_d = z0, d
    return complex(best)


def _log_sigma_increment(z0: complex, omega: complex, L: E.Lattice, m: int) -> complex:
    """Continuous change of log sigma along z0 -> z0 + omega."""
    vals = np.asarray(E.sigma(_segment(z0, omega, m), L), dtype=complex)
    steps = np.log(vals[1:] / vals[:-1])
    return complex(np.sum(steps))


def continuation_ratio(point: AnsatzPoint, P: PoleConfig, z0: complex, omega: complex, m: int = 400) -> complex:
    """w(z0 + omega)/w(z0) for the ansatz, continued along the straight segment."""
    L = P.lattice
    logr = complex(point.h) * omega
    for a in point.a:
        logr += _log_sigma_increment(z0 - a, omega, L, m)
    for w, q in zip(point.n, P.p):
        logr -= complex(w) * _log_sigma_increment(z0 - q, omega, L, m)
    return complex(np.exp(logr))


def monodromy_of(point: AnsatzPoint, P: PoleConfig, z0: complex | None = None, direct: bool = True,
                 m: int = 400) -> MonodromyData:
    if not point.finite:
        raise ValueError("monodromy data needs an interior point")
    L = P.lattice
    t, s = ts_of(point.sigma, complex(point.h), L)
    out = MonodromyData(t, s, complex(np.exp(-2j * np.pi * s)), complex(np.exp(2j * np.pi * t)))
    if direct:
        if z0 is None:
            z0 = choose_base_point(list(point.a) + list(P.p), L)
        out.z0 = z0
        out.ratio1 = continuation_ratio(point, P, z0, 1.0, m)
        out.ratio2 = continuation_ratio(point, P, z0, L.tau, m)
        out.sign1 = out.ratio1 / out.lambda1
        out.sign2 = out.ratio2 / out.lambda2
    return out


# ---------------------------------------------------------- characteristic poly

@dataclass
class CharPoly:
    c: complex
    N: int
    values: np.ndarray          # z_n over the fiber, repeated by multiplicity
    points: list = field(default_factory=list)
    fiber_size: int = 0
    warnings: list = field(default_factory=list)

    @property
    def coefficients(self) -> np.ndarray:
        """A_1..A_N with W(Z) = Z^N + sum (-1)^j A_j Z^{N-j}."""
        poly = np.poly(self.values)
        return np.array([(-1) ** j * poly[j] for j in range(1, self.N + 1)], dtype=complex)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.values)))) ** self.N if self.N else 1.0

    def __call__(self, Z: complex) -> complex:
        return complex(np.prod(Z - self.values))


def _values_from_points(points, P):
    return np.array([fundamental_z(pt, P) for pt in points], dtype=complex)


def char_poly(n, P: PoleConfig, c: complex, opts: FiberOptions | None = None) -> CharPoly:
    n = _wv(n)
    N = degree_formula(n)
    rep = solve_fiber(n, P, c, opts)
    pts, vals = [], []
    for sol in rep.solutions:
        k = max(1, int(round(float(sol.multiplicity))))
        pts.extend([sol.point] * k)
        vals.extend([fundamental_z(sol.point, P)] * k)
    if len(vals) < N:
        raise DegreeDeficit(f"found {len(vals)} fiber values, expected {N}")
    return CharPoly(complex(c), N, np.array(vals, dtype=complex), pts, rep.count, list(rep.warnings))


def char_poly_from_points(points: Sequence[AnsatzPoint], P: PoleConfig, c: complex, N: int | None = None) -> CharPoly:
    vals = _values_from_points(points, P)
    N = len(vals) if N is None else N
    if len(vals) < N:
        raise DegreeDeficit(f"found {len(vals)} fiber values, expected {N}")
    return CharPoly(complex(c), N, vals, list(points), len(points))


# ------------------------------------------------------------ pre-modular form

@dataclass
class PremodularValue:
    Z: complex
    Phi: complex
    degree: int
    fiber_size: int
    scale: float
    cp: CharPoly


def premodular_value(n, t, s, P: PoleConfig, opts: FiberOptions | None = None, seed_points=None) -> PremodularValue:
    """Phi = W_n(Z_{n;t,s}) at c = t + s tau.

    seed_points, when given, are fiber points at nearby data that get refined by
    Newton instead of re-solving the fiber.
    """
    n = _wv(n)
    L = P.lattice
    c = t + s * L.tau
    if seed_points is not None:
        cp = char_poly_from_points(refine_fiber(seed_points, n, P, c), P, c)
    else:
        cp = char_poly(n, P, c, opts)
    Z = deformed_Z(n, t, s, P.p, L)
    return PremodularValue(Z, cp(Z), cp.N, cp.fiber_size, cp.scale, cp)


def premodular_eval(n, t, s, P: PoleConfig, opts: FiberOptions | None = None) -> complex:
    return premodular_value(n, t, s, P, opts).Phi


# ---------------------------------------------------------------- Hitchin case

def hitchin_phi(p: complex, t: complex, s: complex, L: E.Lattice) -> complex:
    """Phi for n = (1/2, 1/2) at poles (p, -p); the fiber is one point so W(Z) = Z."""
    c = t + s * L.tau
    return 0.5 * (_zeta1(c - p, L) + _zeta1(c + p, L)) - t * L.eta1 - s * L.eta2


def hitchin_relation(p: complex, t: complex, s: complex, L: E.Lattice) -> complex:
    """2(wp(p) - wp(c)) Z_{t,s} - wp'(c); vanishes exactly when hitchin_phi does (for wp(p) != wp(c))."""
    c = t + s * L.tau
    return (2 * (complex(E.wp(p, L)) - complex(E.wp(c, L))) * hecke_Z(t, s, L)
            - complex(E.wp(c, L, order=1)))


# -------------------------------------------------------------- isomonodromy

def _central(f, x, h):
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def phi_function(n, t, s, opts: FiberOptions | None = None, seed_points=None):
    """Phi as a function of (p, tau), suitable for finite differences."""
    n = _wv(n)
    if len(n) == 2 and all(w == 0.5 for w in n) and seed_points is None:
        def hitchin(p, tau):
            if abs(p[0] + p[1]) > 1e-12:
                return premodular_value(n, t, s, PoleConfig(p, E.Lattice(tau)), opts).Phi
            return hitchin_phi(p[0], t, s, E.Lattice(tau))
        return hitchin

    def phi(p, tau):
        P = PoleConfig(p, E.Lattice(tau))
        return premodular_value(n, t, s, P, opts, seed_points=seed_points).Phi
    return phi


def isomonodromy_rhs(n, t, s, p: Sequence[complex], u: Sequence[complex], tau: complex, h: float = 1e-5,
                     phi=None, opts: FiberOptions | None = None) -> complex:
    """d tau/dx = -(sum u_i dPhi/dp_i)/(dPhi/dtau) along p(x) = p + x u."""
    p = np.asarray(p, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if np.all(u == 0):
        return 0j
    if phi is None:
        seed = None
        if not (len(p) == 2 and abs(p[0] + p[1]) < 1e-12 and all(complex(w) == 0.5 for w in _wv(n))):
            P0 = PoleConfig(p, E.Lattice(tau))
            seed = char_poly(n, P0, t + s * tau, opts).points
        phi = phi_function(n, t, s, opts, seed_points=seed)
    dx = _central(lambda x: phi(p + x * u, tau), 0.0, h)
    dtau = _central(lambda y: phi(p, tau + y), 0.0, h)
    scale = max(1.0, abs(phi(p, tau + h)), abs(dx))
    if abs(dtau) < 1e-8 * scale:
        raise DegenerateDeformation(f"|dPhi/dtau| = {abs(dtau):.2e} is too small")
    return complex(-dx / dtau)


def project_tau(phi, p, tau, tol=1e-12, maxit=30, h=1e-6) -> complex:
    """Newton in tau on Phi(p, tau) = 0."""
    for _ in range(maxit):
        f = phi(p, tau)
        d = (phi(p, tau + h) - phi(p, tau - h)) / (2 * h)
        if d == 0:
            raise DegenerateDeformation("dPhi/dtau vanished during projection")
        step = f / d
        tau = tau - step
        if tau.imag <= 0:
            raise PathFailure("projection left the upper half plane")
        if abs(step) < tol * max(1.0, abs(tau)):
            return tau
    raise PathFailure("tau projection did not converge")


@dataclass
class FlowPoint:
    x: float
    tau: complex
    phi_abs: float


def isomonodromy_flow(n, t, s, p0, u, tau0, dx: float = 1e-3, steps: int = 10,
                      opts: FiberOptions | None = None) -> list:
    """Explicit Euler in x with Newton re-projection of tau after every step."""
    p0 = np.asarray(p0, dtype=complex)
    u = np.asarray(u, dtype=complex)
    phi = phi_function(n, t, s, opts)
    tau = project_tau(phi, p0, complex(tau0))
    traj = [FlowPoint(0.0, tau, abs(phi(p0, tau)))]
    for k in range(1, steps + 1):
        x = k * dx
        p_prev = p0 + (x - dx) * u
        slope = isomonodromy_rhs(n, t, s, p_prev, u, tau, phi=phi)
        tau = project_tau(phi, p0 + x * u, tau + dx * slope)
        traj.append(FlowPoint(x, tau, abs(phi(p0 + x * u, tau))))
    return traj
