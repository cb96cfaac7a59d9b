import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lamelab import Lattice
from lamelab import elliptic as E
from lamelab import glc
from lamelab import premodular as pm
from lamelab.errors import PoleAtSingularity

ts = st.complex_numbers(max_magnitude=0.45, allow_nan=False, allow_infinity=False)
C0 = 0.37 + 0.29j


@pytest.fixture(scope="module")
def fiber(L):
    n = ["1/2", "3/2"]
    P = glc.PoleConfig([0, 0.31 + 0.42j], L)
    return n, P, glc.solve_fiber(n, P, C0)


# ------------------------------------------------------------------ Hecke

def test_hecke_half_period(L):
    assert abs(pm.hecke_Z(0.5, 0, L)) < 1e-12


@given(ts, ts)
def test_hecke_symmetries(t, s):
    L = Lattice(0.2 + 1.1j)
    if abs(E.reduce(t + s * L.tau, L).z) < 0.05:
        return
    z = pm.hecke_Z(t, s, L)
    assert abs(pm.hecke_Z(t + 1, s, L) - z) < 1e-9 * max(1, abs(z))
    assert abs(pm.hecke_Z(t, s + 1, L) - z) < 1e-9 * max(1, abs(z))
    assert abs(pm.hecke_Z(-t, -s, L) + z) < 1e-9 * max(1, abs(z))
    assert abs(pm.deformed_Z(["3"], t, s, [0], L) - z) < 1e-12 * max(1, abs(z))


def test_deformed_pole_residue(L):
    n, p = ["1/2", "3/2"], [0.1 + 0.1j, 0.5 + 0.4j]
    for i, w in enumerate((0.5, 1.5)):
        for eps in (1e-4, 1e-5):
            z = p[i] + eps
            t, s = pm.ts_of(z, 0, L)
            # z = t + s tau with the eta part removed
            t, s = ((z - (z.imag / L.tau.imag) * L.tau).real, z.imag / L.tau.imag)
            assert abs(eps * pm.deformed_Z(n, t, s, p, L) - w / 2) < 5 * eps


def test_deformed_homogeneity(L):
    """Rescaling the lattice by mu: t, s fixed, p -> mu p, Z -> Z / mu."""
    n, p = ["1/2", "3/2"], [0.1 + 0.1j, 0.5 + 0.4j]
    t, s = 0.21 + 0.03j, 0.33 - 0.05j
    mu = 1.3 * np.exp(0.4j)
    z1 = pm.deformed_Z(n, t, s, p, L)
    # a lattice mu(Z + tau Z) has eta scaled by 1/mu; build the sums by hand
    zeta = lambda z: complex(E.zeta(z / mu, L)) / mu
    c = mu * (t + s * L.tau)
    val = sum(w * zeta(c - mu * q) for w, q in zip((0.5, 1.5), p)) / 2 - (t * L.eta1 + s * L.eta2) / mu
    assert abs(val - z1 / mu) < 1e-12 * abs(z1)


# ------------------------------------------------------------ fundamental z

def test_fundamental_matches_deformed(fiber, L):
    n, P, rep = fiber
    for sol in rep.solutions:
        md = pm.monodromy_of(sol.point, P, direct=False)
        assert abs(pm.deformed_Z(n, md.t, md.s, P.p, L) - pm.fundamental_z(sol.point, P)) < 1e-9
        moved = glc.AnsatzPoint(sol.point.a, sol.point.h + 0.25j, sol.point.n, sol.point.p)
        assert abs(pm.fundamental_z(moved, P) - pm.fundamental_z(sol.point, P) + 0.25j) < 1e-12


def test_fundamental_infinite_on_boundary(L):
    P = glc.PoleConfig([0, 0.31 + 0.42j], L)
    bp = glc.boundary_typeI(["1/2", "3/2"], P)[0]
    with pytest.raises(PoleAtSingularity):
        pm.fundamental_z(bp.point, P)


def test_fundamental_grows_near_boundary(L):
    n = ["1/2", "3/2"]
    P = glc.PoleConfig([0, 0.31 + 0.42j], L)
    vals = []
    for eps in (1e-2, 1e-3, 1e-4):
        # a symmetric pair would cancel in h, so approach along two different rays
        a = [P.p[1] + eps, P.p[1] + 2j * eps]
        vals.append(abs(pm.fundamental_z(glc.make_point(a, n, P), P)))
    assert vals[0] < vals[1] < vals[2] and vals[2] > 1e3


# -------------------------------------------------------------- monodromy

def test_legendre_determinant(L):
    assert abs(L.eta2 - L.tau * L.eta1 + 2j * np.pi) < 1e-12


def test_classical_ts(L, oracle):
    P = glc.PoleConfig([0], L)
    a = 0.31 + 0.27j
    md = pm.monodromy_of(glc.make_point([a], ["1"], P), P, direct=False)
    assert abs(md.t + md.s * L.tau - a) < 1e-12
    assert abs(md.t * L.eta1 + md.s * L.eta2 - oracle.zeta(a)) < 1e-10


def test_continuation_ratio(fiber):
    n, P, rep = fiber
    for sol in rep.solutions:
        md = pm.monodromy_of(sol.point, P)
        assert abs(abs(md.ratio1) - abs(md.lambda1)) < 1e-8 * abs(md.lambda1)
        assert abs(abs(md.ratio2) - abs(md.lambda2)) < 1e-8 * abs(md.lambda2)
        # half-integer weights: the continuation sign is +-1
        assert min(abs(md.sign1 - 1), abs(md.sign1 + 1)) < 1e-8


def test_integer_profile_sign(L):
    P = glc.PoleConfig([0.1 + 0.1j, 0.55 + 0.45j], L)
    rep = glc.solve_fiber(["1", "1"], P, C0)
    for sol in rep.solutions:
        md = pm.monodromy_of(sol.point, P)
        assert abs(md.sign1 - 1) < 1e-8 and abs(md.sign2 - 1) < 1e-8


def test_paired_solutions(fiber, L):
    n, P, rep = fiber
    other = glc.solve_fiber(n, P, -C0)
    pairs = 0
    for s1 in rep.solutions:
        ab1 = glc.coefficients_AB(s1.point, P)
        for s2 in other.solutions:
            ab2 = glc.coefficients_AB(s2.point, P)
            if abs(ab1.B - ab2.B) > 1e-6:
                continue
            pairs += 1
            z0 = pm.choose_base_point(list(s1.point.a) + list(s2.point.a) + list(P.p), L)
            m1, m2 = pm.monodromy_of(s1.point, P, z0), pm.monodromy_of(s2.point, P, z0)
            for v in (m1.t + m2.t, m1.s + m2.s):
                assert abs(v - round(v.real)) < 1e-8
            # the two solutions span the kernel; the Wronskian forces the product to 1
            assert abs(m1.ratio1 * m2.ratio1 - 1) < 1e-8
            assert abs(m1.ratio2 * m2.ratio2 - 1) < 1e-8
    assert pairs == len(rep.solutions)


# --------------------------------------------------------------- char poly

def test_ellipticity(L):
    n = ["1/2", "3/2"]
    P = glc.PoleConfig([0.1 + 0.05j, 0.47 + 0.38j], L)
    base = pm.char_poly(n, P, C0)
    assert base.N == 4
    for w in (1.0, L.tau):
        other = pm.char_poly(n, P, C0 + w)
        assert np.max(np.abs(other.coefficients - base.coefficients)) < 1e-7 * base.scale


def test_s_transform_homogeneity(L):
    """tau -> -1/tau rescales the lattice by 1/tau; A_j picks up tau^j."""
    n = ["1/2", "3/2"]
    tau = L.tau
    P = glc.PoleConfig([0.1 + 0.05j, 0.47 + 0.38j], L)
    Ls = Lattice(-1 / tau)
    Ps = glc.PoleConfig([q / tau for q in P.p], Ls)
    A = pm.char_poly(n, P, C0).coefficients
    As = pm.char_poly(n, Ps, C0 / tau).coefficients
    want = np.array([tau ** (j + 1) * a for j, a in enumerate(A)])
    assert np.max(np.abs(As - want)) < 1e-7 * max(1, np.max(np.abs(want)))


def test_half_period_factorization(L):
    tau = L.tau
    P = glc.PoleConfig([0, 0.5, tau / 2, -(1 + tau) / 2], L)
    cp = pm.char_poly(["1/2"] * 4, P, C0)
    ref = []
    for w in (0.5, tau / 2, (1 + tau) / 2):
        x = C0 - w
        ref += [0.25 * complex(E.wp(x, L, order=2)) / complex(E.wp(x, L, order=1))] * 2
    assert np.max(np.abs(np.poly(cp.values) - np.poly(ref))) < 1e-8 * max(1, np.max(np.abs(np.poly(ref))))


# ---------------------------------------------------------------- Phi

def test_phi_vanishes_on_solutions(fiber):
    n, P, rep = fiber
    pts = [s.point for s in rep.solutions]
    for pt in pts:
        md = pm.monodromy_of(pt, P, direct=False)
        pv = pm.premodular_value(n, md.t, md.s, P, seed_points=pts)
        assert abs(pv.Phi) < 1e-7 * pv.scale
        assert pv.degree == 4 and pv.fiber_size == 4


def test_phi_off_locus(fiber):
    n, P, rep = fiber
    rng = np.random.default_rng(1)
    for _ in range(3):
        t, s = rng.uniform(-0.5, 0.5, 2) + 1j * rng.uniform(-0.1, 0.1, 2)
        pv = pm.premodular_value(n, t, s, P)
        # solved points sit below 1e-14 on this scale
        assert abs(pv.Phi) > 1e-5 * pv.scale


def _hitchin_p(t, s, L, p=0.3 + 0.2j):
    for _ in range(40):
        f = pm.hitchin_phi(p, t, s, L)
        d = (pm.hitchin_phi(p + 1e-6, t, s, L) - pm.hitchin_phi(p - 1e-6, t, s, L)) / 2e-6
        p -= f / d
    return p


def test_hitchin(L):
    t, s = 0.23 + 0.05j, 0.31 - 0.02j
    p = _hitchin_p(t, s, L)
    c = t + s * L.tau
    closed = complex(E.wp(c, L)) + complex(E.wp(c, L, order=1)) / (2 * pm.hecke_Z(t, s, L))
    assert abs(complex(E.wp(p, L)) - closed) < 1e-8 * max(1, abs(closed))
    assert abs(pm.hitchin_relation(p, t, s, L)) < 1e-8
    general = pm.premodular_value(["1/2", "1/2"], t, s, glc.PoleConfig([p, -p], L))
    assert general.degree == 1
    assert abs(general.Phi) < 1e-8


def test_isomonodromy(L):
    t, s = 0.23 + 0.05j, 0.31 - 0.02j
    p = _hitchin_p(t, s, L)
    n = ["1/2", "1/2"]
    rhs = pm.isomonodromy_rhs(n, t, s, [p, -p], [1, -1], L.tau)
    G = lambda pp, tt: pm.hitchin_relation(pp, t, s, Lattice(tt))
    h = 1e-5
    dGp = (G(p + h, L.tau) - G(p - h, L.tau)) / (2 * h)
    dGt = (G(p, L.tau + h) - G(p, L.tau - h)) / (2 * h)
    assert abs(rhs + dGp / dGt) < 1e-5 * max(1, abs(rhs))
    assert pm.isomonodromy_rhs(n, t, s, [p, -p], [0, 0], L.tau) == 0
    traj = pm.isomonodromy_flow(n, t, s, [p, -p], [1, -1], L.tau, dx=1e-3, steps=2)
    assert all(f.phi_abs < 1e-5 for f in traj)
    assert abs(traj[1].tau - (traj[0].tau + 1e-3 * rhs)) < 1e-5


def test_factorization_near_collision(L):
    t, s = 0.23 + 0.05j, 0.31 - 0.02j
    p2 = 0.31 + 0.42j
    ref = (pm.premodular_value(["2"], t, s, glc.PoleConfig([p2], L)).Phi
           * pm.premodular_value(["1"], t, s, glc.PoleConfig([p2], L)).Phi)
    v = pm.premodular_value(["1/2", "3/2"], t, s, glc.PoleConfig([p2 + 1e-2 * np.exp(0.7j), p2], L)).Phi
    assert abs(v / ref - 1) < 0.1
