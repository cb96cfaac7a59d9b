"""Independent reference values for the lattice Z + tau Z, built on mpmath's Jacobi thetas."""

import mpmath

mpmath.mp.dps = 30


class ThetaOracle:
    def __init__(self, tau):
        self.tau = mpmath.mpc(tau)
        self.q = mpmath.exp(1j * mpmath.pi * self.tau)
        th1p = mpmath.jtheta(1, 0, self.q, 1)
        self.th1p = th1p
        self.eta1 = -mpmath.pi**2 / 3 * mpmath.jtheta(1, 0, self.q, 3) / th1p
        t2, t3, t4 = (mpmath.jtheta(k, 0, self.q) for k in (2, 3, 4))
        c = mpmath.pi**2 / 3
        self.e = (c * (t3**4 + t4**4), -c * (t2**4 + t3**4), c * (t2**4 - t4**4))

    def zeta(self, z):
        x = mpmath.pi * mpmath.mpc(z)
        return complex(self.eta1 * z + mpmath.pi * mpmath.jtheta(1, x, self.q, 1) / mpmath.jtheta(1, x, self.q))

    def wp(self, z):
        x = mpmath.pi * mpmath.mpc(z)
        th = mpmath.jtheta(1, x, self.q)
        d1 = mpmath.jtheta(1, x, self.q, 1)
        d2 = mpmath.jtheta(1, x, self.q, 2)
        # wp = -zeta' = -eta1 - pi^2 (th'' th - th'^2) / th^2
        return complex(-self.eta1 - mpmath.pi**2 * (d2 * th - d1**2) / th**2)

    def sigma(self, z):
        z = mpmath.mpc(z)
        return complex(mpmath.exp(self.eta1 * z**2 / 2) * mpmath.jtheta(1, mpmath.pi * z, self.q)
                       / (mpmath.pi * self.th1p))

    @property
    def g2(self):
        e1, e2, e3 = self.e
        return complex(2 * (e1**2 + e2**2 + e3**2))

    @property
    def g3(self):
        e1, e2, e3 = self.e
        return complex(4 * e1 * e2 * e3)

    @property
    def eta2(self):
        # zeta(z + tau) - zeta(z) at z = -tau/2, by oddness
        return 2 * self.zeta(self.tau / 2)
