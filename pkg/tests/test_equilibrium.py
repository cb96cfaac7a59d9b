import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lamelab import Lattice
from lamelab import equilibrium as eq
from lamelab.errors import ExceptionalParameter, RootMultiplicity


def _sorted(z):
    return np.array(sorted(np.asarray(z, dtype=complex), key=lambda w: (round(w.real, 9), round(w.imag, 9))))


def test_roots_of_unity():
    sol = eq.roots_of_unity_family(3, 1)
    assert np.allclose(_sorted(sol.alpha), _sorted(np.roots([1, 0, 0, -1])))
    assert sol.residual < 1e-12
    assert not eq.roots_of_unity_family(3, 0.9)
    assert eq.roots_of_unity_family(3, 0.9) is eq.NoSolution


def test_laguerre_two_points():
    sol = eq.laguerre_family(2, 1, 1.0)
    a = sol.alpha
    # rescale so that a1 + a2 = 1, then a1 a2 = x / (4x - 1)
    a = a / a.sum()
    assert abs(a[0] * a[1] - Fraction(1, 3)) < 1e-12
    assert sol.residual < 1e-10


@pytest.mark.parametrize("k,x", [(2, 1.0), (3, 0.7 + 0.2j), (4, 2.5), (5, 0.9 - 0.4j)])
def test_laguerre_generic_rank(k, x):
    sol = eq.laguerre_family(k, x, 1.3)
    assert np.max(np.abs(eq.boundary_system(sol.alpha, x))) < 1e-10
    assert abs(np.sum(1 / sol.alpha) - 1.3) < 1e-10
    assert np.linalg.matrix_rank(eq.boundary_jacobian(sol.alpha, x), tol=1e-8) == k - 1


@pytest.mark.parametrize("k", [2, 3, 4])
def test_laguerre_special_point(k):
    x = Fraction(k - 1, 2 * k)
    sol = eq.laguerre_family(k, x)
    unity = np.exp(2j * np.pi * np.arange(k) / k)
    assert np.allclose(_sorted(sol.alpha), _sorted(unity))
    assert np.max(np.abs(eq.boundary_system(sol.alpha, x))) < 1e-10
    assert np.linalg.matrix_rank(eq.boundary_jacobian(sol.alpha, float(x)), tol=1e-8) == k - 2


def test_laguerre_exceptional():
    for j in range(3):
        with pytest.raises(ExceptionalParameter):
            eq.laguerre_family(4, Fraction(j, 8))


def test_jacobi_single_root():
    for x, y in [(0.3, 0.8), (1.2 + 0.5j, -0.4j)]:
        sol = eq.jacobi_family(1, x, y)
        assert abs(sol.alpha[0] - (y - x) / (x + y)) < 1e-12


@pytest.mark.parametrize("k,x,y", [(2, 0.3, 0.8), (3, 1.2 + 0.5j, -0.4j), (4, 2.25, 0.1), (5, 0.7, -0.35 + 1j)])
def test_jacobi_family(k, x, y):
    sol = eq.jacobi_family(k, x, y)
    assert np.max(np.abs(eq.jacobi_system(sol.alpha, x, y))) < 1e-10
    assert np.linalg.matrix_rank(eq.jacobi_jacobian(sol.alpha, x, y), tol=1e-9) == k
    # discriminant from the roots, against the closed product up to a k-dependent constant
    c = eq.jacobi_coefficients(k, x, y)
    a = np.roots(c[::-1])
    disc = c[-1] ** (2 * k - 2) * np.prod([(a[i] - a[j]) ** 2 for i in range(k) for j in range(i + 1, k)])
    const = 2.0 ** (-k * (k - 1)) * math.prod(j ** (j - 2 * k + 2) for j in range(1, k + 1))
    want = const * eq.jacobi_discriminant_factor(k, x, y)
    assert abs(disc - want) < 1e-8 * abs(want)


def test_jacobi_exceptional():
    with pytest.raises(ExceptionalParameter) as exc:
        eq.jacobi_family(3, Fraction(1, 2), 0.3)
    assert exc.value.stratum == "alpha=1"
    with pytest.raises(ExceptionalParameter) as exc:
        eq.jacobi_family(3, 0.3, 1)
    assert exc.value.stratum == "alpha=-1"
    with pytest.raises(ExceptionalParameter) as exc:
        eq.jacobi_family(3, Fraction(3, 4), Fraction(3, 4))
    assert exc.value.stratum == "alpha=inf"
    assert eq.jacobi_discriminant_factor(3, Fraction(3, 4), Fraction(3, 4)) == 0


def test_power_sum_small():
    roots, S1, S2 = eq.power_sum_reduction([-1, 0, 1], 1)
    i = int(np.argmin(np.abs(roots - 1)))
    assert abs(S1[0, i] - 0.5) < 1e-14


@given(st.integers(0, 2**32 - 1))
def test_power_sums_match_direct(seed):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=6) + 1j * rng.normal(size=6)
    roots, S1, S2 = eq.power_sum_reduction(q, 3)
    _, D1, D2 = eq.power_sum_reduction(q, 3, mode="direct")
    scale = max(1.0, np.max(np.abs(D1)), np.max(np.abs(D2)))
    assert np.max(np.abs(S1 - D1)) < 1e-8 * scale
    assert np.max(np.abs(S2 - D2)) < 1e-8 * scale
    qp = np.polynomial.Polynomial(q)
    assert np.allclose(S1[0], qp.deriv(2)(roots) / (2 * qp.deriv(1)(roots)))


def test_power_sum_repeated_root():
    with pytest.raises(RootMultiplicity):
        eq.power_sum_reduction([1, -2, 1], 2)


def test_rational_single():
    rep = eq.solve_rational_system(eq.RationalSystemSpec(1, 1, 0.7, (1.3,)))
    assert rep.count == 1
    assert abs(rep.solutions[0].alpha[0] - 0.7 / 1.3) < 1e-12


@pytest.mark.parametrize("r,l,want", [(2, 1, 3), (3, 1, 15), (2, 3, 27)])
def test_rational_counts(r, l, want):
    rep = eq.solve_rational_system(eq.RationalSystemSpec(r, l, 0.7 + 0.2j), seed=3)
    assert rep.count == rep.expected_count == want
    for s in rep.solutions:
        assert s.residual < 1e-10


@given(st.complex_numbers(min_magnitude=0.5, max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.integers(1, 3))
def test_scaling_covariance(s, l):
    rng = np.random.default_rng(5)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    lhs = eq.rational_system(s * a, l, 0.7)
    assert np.allclose(lhs, eq.rational_system(a, l, 0.7) / s**l)


@pytest.mark.parametrize("x", [0.7 + 0.2j, 2.0, -0.5 + 1j])
def test_hypergeometric_two(x):
    sols = eq.hypergeometric_block(2, x)
    assert len(sols) == 2
    # with a_1 = 1 the second equation reads 2u/(u - 1) + x = 0 in u = a_2^2
    u = np.roots(eq.hypergeometric_u_coefficients(2, x)[::-1])[0]
    assert abs(u - x / (x + 2)) < 1e-12
    for s in sols:
        assert s.residual < 1e-10 and s.jacobian_condition < 1e8
        ratio = (s.alpha[1] / s.alpha[0]) ** 2
        assert abs(ratio - x / (x + 2)) < 1e-10


@pytest.mark.parametrize("r", [3, 4])
def test_hypergeometric_count(r):
    sols = eq.hypergeometric_block(r, 0.7 + 0.2j)
    assert len(sols) == math.prod(range(2 * r - 2, 0, -2))
    for s in sols:
        assert s.residual < 1e-10


def test_treibich_r1():
    L = Lattice(0.15 + 1.05j)
    rep = eq.treibich_count(eq.TreibichSpec((0, 0, 0, 0), 1, L))
    assert rep.count == 6
    assert sorted(rep.class_sizes) == [2] * 6
    assert rep.max_residual < 1e-9


def test_treibich_seed_scale():
    # wp'(eps) ~ -2 / eps^3: a cluster at T gamma sits at distance T^(-1/3)
    eps, dfac = eq.treibich_seed_scale(1e6)
    assert abs(eps - 1e-2) < 1e-15 and dfac == -0.5


@pytest.mark.parametrize("r", range(1, 7))
def test_counting_identities(r):
    assert eq.G_of(r) == 6**r * math.factorial(r + 1)
    assert eq.treibich_census(r) == eq.G_of(r) == eq.treibich_egf_count(r)
    assert eq.G_of(r) // (2**r * math.factorial(r)) == 3**r * (r + 1)


def test_counting_examples():
    assert eq.G_of(1) == 12 and eq.G_of(2) == 216
