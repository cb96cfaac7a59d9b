"""Weierstrass sigma, zeta and wp for the lattice Z + Z*tau.

Everything is evaluated from nome series in q = exp(i*pi*tau) after reducing the
argument into the half-open fundamental cell, then corrected by quasi-periodicity.
Functions accept scalars or numpy arrays and return the same shape.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import PoleAtLattice, PrecisionWarning

_POLE_TOL = 1e-10
_MAX_ORDER = 8


def _cot_polys(kmax):
    # d^j/dx^j cot(x) = P_j(cot x), P_{j+1}(c) = -(1 + c^2) P_j'(c)
    polys = [np.array([0.0, 1.0])]
    for _ in range(kmax):
        polys.append(-npoly.polymul([1.0, 0.0, 1.0], npoly.polyder(polys[-1])))
    return polys


_COT = _cot_polys(_MAX_ORDER + 1)


@dataclass(frozen=True)
class Lattice:
    """Lattice Z + Z*tau with quasi-periods and invariants.

    eta2 is summed from its own series rather than taken from the Legendre relation,
    so that relation remains an honest check.
    """

    tau: complex
    precision_target: float = 1e-12
    omega1: complex = field(init=False, default=1.0)
    omega2: complex = field(init=False)
    eta1: complex = field(init=False)
    eta2: complex = field(init=False)
    g2: complex = field(init=False)
    g3: complex = field(init=False)
    nterms: int = field(init=False)

    def __post_init__(self):
        tau = complex(self.tau)
        if not tau.imag > 0:
            raise ValueError(f"Im(tau) must be positive, got {tau}")
        if tau.imag < 0.3:
            warnings.warn(f"Im(tau) = {tau.imag:.3g} < 0.3; nome series lose accuracy",
                          PrecisionWarning, stacklevel=3)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "omega2", tau)
        nterms = int(math.ceil(40.0 / (math.pi * tau.imag))) + 8
        object.__setattr__(self, "nterms", nterms)
        n = np.arange(1, nterms + 1, dtype=float)
        q2n = np.exp(2j * np.pi * tau * n)
        lam = q2n / (1.0 - q2n)
        object.__setattr__(self, "_n", n)
        object.__setattr__(self, "_q2n", q2n)
        object.__setattr__(self, "_lambert", lam)
        e2 = 1.0 - 24.0 * np.sum(n * lam)
        e4 = 1.0 + 240.0 * np.sum(n**3 * lam)
        e6 = 1.0 - 504.0 * np.sum(n**5 * lam)
        object.__setattr__(self, "eta1", complex(np.pi**2 / 3.0 * e2))
        object.__setattr__(self, "g2", complex(4.0 * np.pi**4 / 3.0 * e4))
        object.__setattr__(self, "g3", complex(8.0 * np.pi**6 / 27.0 * e6))
        half = np.array([tau / 2.0])
        object.__setattr__(self, "eta2", complex(2.0 * _zeta_cell(half, self, 0)[0]))

    @property
    def q(self) -> complex:
        return complex(np.exp(1j * np.pi * self.tau))

    def legendre_defect(self) -> float:
        return abs(self.eta1 * self.omega2 - self.eta2 * self.omega1 - 2j * np.pi)

    def half_periods(self):
        """The four 2-torsion points 0, 1/2, tau/2, (1+tau)/2."""
        return (0j, 0.5 + 0j, self.tau / 2, (1 + self.tau) / 2)


@dataclass(frozen=True)
class ReducedPoint:
    z: complex
    shift: tuple

    def original(self, L: Lattice) -> complex:
        return self.z + self.shift[0] + self.shift[1] * L.tau


def _wrap(z):
    arr = np.asarray(z, dtype=complex)
    return np.atleast_1d(arr).ravel(), arr.shape


def _unwrap(vals, shape):
    if shape == ():
        return complex(vals[0])
    return vals.reshape(shape)


def _reduce_arrays(z, L):
    y = z.imag / L.tau.imag
    x = z.real - y * L.tau.real
    m2 = np.floor(y + 0.5)
    m1 = np.floor(x + 0.5)
    zr = z - m1 - m2 * L.tau
    return zr, m1, m2


def _check_poles(zr, m1, m2, L):
    lam = np.abs(m1 + m2 * L.tau)
    bad = np.abs(zr) < _POLE_TOL * np.maximum(1.0, lam)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise PoleAtLattice(f"argument {zr[idx] + m1[idx] + m2[idx] * L.tau} lies on the lattice")


def reduce(z: complex, L: Lattice) -> ReducedPoint:
    arr = np.array([complex(z)])
    zr, m1, m2 = _reduce_arrays(arr, L)
    return ReducedPoint(complex(zr[0]), (int(m1[0]), int(m2[0])))


def reduce_array(z, L: Lattice):
    """Vectorized reduction: returns (z_reduced, m1, m2) arrays."""
    arr, _ = _wrap(z)
    zr, m1, m2 = _reduce_arrays(arr, L)
    return zr, m1.astype(int), m2.astype(int)


def eta_of(omega, L: Lattice) -> complex:
    m1, m2 = omega
    return m1 * L.eta1 + m2 * L.eta2


def _zeta_cell(zr, L, order):
    """order-th derivative of zeta on points of the fundamental cell (no reduction)."""
    cot = 1.0 / np.tan(np.pi * zr)
    n = L._n
    arg = 2.0 * np.pi * np.outer(n, zr)
    if order % 2 == 0:
        trig = np.sin(arg)
    else:
        trig = np.cos(arg)
    if order % 4 in (2, 3):
        trig = -trig
    weights = L._lambert * (2.0 * np.pi * n) ** order
    series = 4.0 * np.pi * (weights @ trig)
    val = np.pi ** (order + 1) * npoly.polyval(cot, _COT[order]) + series
    if order == 0:
        val = val + L.eta1 * zr
    elif order == 1:
        val = val + L.eta1
    return val


def _zeta_core(z, L, order):
    zr, m1, m2 = _reduce_arrays(z, L)
    _check_poles(zr, m1, m2, L)
    val = _zeta_cell(zr, L, order)
    if order == 0:
        val = val + m1 * L.eta1 + m2 * L.eta2
    return val


def zeta(z, L: Lattice, order: int = 0):
    """Weierstrass zeta (or its order-th derivative)."""
    arr, shape = _wrap(z)
    return _unwrap(_zeta_core(arr, L, order), shape)


def wp(z, L: Lattice, order: int = 0):
    """order-th derivative of Weierstrass wp; wp^(k) = -zeta^(k+1)."""
    if not 0 <= order <= 7:
        raise ValueError("wp order must be in 0..7")
    arr, shape = _wrap(z)
    return _unwrap(-_zeta_core(arr, L, order + 1), shape)


def zeta_wp(z, L: Lattice):
    """zeta(z) and wp(z) in one pass (shared reduction and trig)."""
    arr, shape = _wrap(z)
    zr, m1, m2 = _reduce_arrays(arr, L)
    _check_poles(zr, m1, m2, L)
    cot = 1.0 / np.tan(np.pi * zr)
    n = L._n
    arg = 2.0 * np.pi * np.outer(n, zr)
    s, c = np.sin(arg), np.cos(arg)
    lam = L._lambert
    z0 = L.eta1 * zr + np.pi * cot + 4.0 * np.pi * (lam @ s) + m1 * L.eta1 + m2 * L.eta2
    p0 = np.pi**2 * (1.0 + cot * cot) - L.eta1 - 4.0 * np.pi * ((lam * 2.0 * np.pi * n) @ c)
    return _unwrap(z0, shape), _unwrap(p0, shape)


def wp_derivatives(z, L: Lattice, kmax: int):
    """Array of wp^(m)(z) for m = 0..kmax, stacked along the first axis."""
    arr, shape = _wrap(z)
    zr, m1, m2 = _reduce_arrays(arr, L)
    _check_poles(zr, m1, m2, L)
    out = np.array([-_zeta_cell(zr, L, m + 1) for m in range(kmax + 1)])
    return out.reshape((kmax + 1,) + shape)


def zeta_derivatives(z, L: Lattice, kmax: int):
    """Array of zeta^(m)(z) for m = 0..kmax, stacked along the first axis."""
    arr, shape = _wrap(z)
    zr, m1, m2 = _reduce_arrays(arr, L)
    _check_poles(zr, m1, m2, L)
    rows = [_zeta_cell(zr, L, m) for m in range(kmax + 1)]
    rows[0] = rows[0] + m1 * L.eta1 + m2 * L.eta2
    return np.array(rows).reshape((kmax + 1,) + shape)


def _log_sigma_cell(zr, L):
    e = np.exp(2j * np.pi * zr)
    q2n = L._q2n[:, None]
    logprod = np.sum(np.log1p(-q2n * e) + np.log1p(-q2n / e) - 2.0 * np.log1p(-q2n), axis=0)
    return L.eta1 * zr * zr / 2.0 + logprod


def sigma(z, L: Lattice):
    """Weierstrass sigma normalized as sigma(z) = z + O(z^5); exactly 0 on the lattice."""
    arr, shape = _wrap(z)
    zr, m1, m2 = _reduce_arrays(arr, L)
    core = np.sin(np.pi * zr) / np.pi * np.exp(_log_sigma_cell(zr, L))
    omega = m1 + m2 * L.tau
    eta = m1 * L.eta1 + m2 * L.eta2
    sign = np.where(((m1 + m2 + m1 * m2) % 2) == 0, 1.0, -1.0)
    val = sign * np.exp(eta * (zr + omega / 2.0)) * core
    lam = np.abs(omega)
    val = np.where(np.abs(zr) < 1e-14 * np.maximum(1.0, lam), 0.0, val)
    return _unwrap(val, shape)


def wp_laurent(L: Lattice, kmax: int):
    """Coefficients c_k (k = 2..kmax) of wp(z) = z^-2 + sum c_k z^(2k-2)."""
    c = {2: L.g2 / 20.0, 3: L.g3 / 28.0}
    for k in range(4, kmax + 1):
        c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * sum(c[m] * c[k - m] for m in range(2, k - 1))
    return {k: v for k, v in c.items() if k <= kmax}
