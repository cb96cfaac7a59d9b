import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lamelab import Lattice
from lamelab import elliptic as E
from lamelab.errors import PoleAtLattice

from conftest import cell_points

unit = st.floats(0.03, 0.97)


def test_invariants_match_theta_oracle(L, oracle):
    assert abs(L.g2 - oracle.g2) < 1e-10 * abs(oracle.g2)
    assert abs(L.g3 - oracle.g3) < 1e-10 * abs(oracle.g3)
    assert abs(L.eta1 - complex(oracle.eta1)) < 1e-12
    assert abs(L.eta2 - oracle.eta2) < 1e-11


@pytest.mark.parametrize("tau", [1j, 0.2 + 1.1j, cmath.exp(1j * math.pi / 3), -0.4 + 0.7j])
def test_legendre_relation(tau):
    L = Lattice(tau)
    assert L.legendre_defect() < 10 * L.precision_target


def test_symmetric_lattices_kill_an_invariant():
    assert abs(Lattice(1j).g3) < 1e-12
    assert abs(Lattice(cmath.exp(1j * math.pi / 3)).g2) < 1e-12


def test_tau_must_be_in_upper_half_plane():
    with pytest.raises(ValueError):
        Lattice(0.3)
    with pytest.raises(ValueError):
        Lattice(0.3 - 1j)


def test_reduce_examples(L):
    assert E.reduce(0, L) == E.ReducedPoint(0j, (0, 0))
    r = E.reduce(1.3 + 0.2 * L.tau, L)
    assert r.shift == (1, 0) and abs(r.z - (0.3 + 0.2 * L.tau)) < 1e-14
    r = E.reduce(-0.5, L)
    assert r.shift == (0, 0) and r.z == -0.5


@given(unit, unit, st.integers(-3, 3), st.integers(-3, 3))
def test_reduce_round_trip(u, v, m1, m2):
    L = Lattice(0.2 + 1.1j)
    z = (u - 0.5) + (v - 0.5) * L.tau + m1 + m2 * L.tau
    r = E.reduce(z, L)
    assert abs(r.original(L) - z) < 1e-12
    assert r.shift == (m1, m2)


def test_values_match_theta_oracle(L, oracle, rng):
    for z in cell_points(rng, L, 12):
        assert abs(E.zeta(z, L) - oracle.zeta(z)) < 1e-10 * max(1, abs(oracle.zeta(z)))
        assert abs(E.wp(z, L) - oracle.wp(z)) < 1e-10 * max(1, abs(oracle.wp(z)))
        assert abs(E.sigma(z, L) - oracle.sigma(z)) < 1e-10 * max(1, abs(oracle.sigma(z)))


def test_parity(L, rng):
    z = cell_points(rng, L, 100) - 0.5 - 0.5 * L.tau
    assert np.allclose(E.sigma(-z, L), -E.sigma(z, L), rtol=1e-12, atol=1e-13)
    assert np.allclose(E.zeta(-z, L), -E.zeta(z, L), rtol=1e-12, atol=1e-12)
    assert np.allclose(E.wp(-z, L), E.wp(z, L), rtol=1e-12, atol=1e-12)
    assert np.allclose(E.wp(-z, L, order=1), -E.wp(z, L, order=1), rtol=1e-12, atol=1e-11)


def test_sigma_quasi_periodicity(L, rng):
    z = cell_points(rng, L, 50)
    lhs = E.sigma(z + 1, L)
    rhs = -E.sigma(z, L) * np.exp(L.eta1 * (z + 0.5))
    assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) < 1e-10


def test_sigma_normalization(L):
    z = 1e-4 * cmath.exp(0.3j)
    assert abs(E.sigma(z, L) / z - 1) < 1e-7


def test_zeta_quasi_periods(L, rng):
    z = cell_points(rng, L, 50)
    assert np.max(np.abs(E.zeta(z + 1, L) - E.zeta(z, L) - L.eta1)) < 1e-11
    assert np.max(np.abs(E.zeta(z + L.tau, L) - E.zeta(z, L) - L.eta2)) < 1e-11
    assert abs(E.zeta(0.5, L) - L.eta1 / 2) < 1e-11


def test_zeta_laurent(L):
    for r in (0.05, 0.025):
        z = r * cmath.exp(0.4j)
        rest = E.zeta(z, L) - 1 / z + L.g2 / 60 * z**3
        assert abs(rest) < 2 * abs(L.g3) / 140 * r**5 + 1e-12


@given(unit, unit)
def test_weierstrass_cubic(u, v):
    L = Lattice(0.2 + 1.1j)
    z = u + v * L.tau
    p, dp, ddp = (complex(E.wp(z, L, order=k)) for k in range(3))
    scale = max(1.0, abs(p) ** 3)
    assert abs(dp**2 - (4 * p**3 - L.g2 * p - L.g3)) < 1e-9 * scale
    assert abs(ddp - (6 * p**2 - L.g2 / 2)) < 1e-9 * max(1.0, abs(p) ** 2)


def test_derivative_consistency(L, rng):
    h = 1e-5
    for z in cell_points(rng, L, 20, margin=0.15):
        fd = (E.zeta(z + h, L) - E.zeta(z - h, L)) / (2 * h)
        assert abs(fd + E.wp(z, L)) < 1e-7 * max(1, abs(E.wp(z, L)))


def test_eta_of(L):
    assert E.eta_of((0, 0), L) == 0
    assert E.eta_of((1, 0), L) == L.eta1
    lhs = E.eta_of((0, 1), L) * 1 - E.eta_of((1, 0), L) * L.tau
    assert abs(lhs + 2j * math.pi) < 1e-10


def test_lattice_points_raise(L):
    with pytest.raises(PoleAtLattice):
        E.zeta(1 + L.tau, L)
    assert E.sigma(2.0, L) == 0
