"""Weyl sequences for the essential-spectrum lines of H_theta.

The trial states are

    phi_n = c_n eta_n(x) r^(-(d+s-1)/2) exp(i (r^(1+s)/(1+s) + lam f(r) + th(r)) / hbar)

with ``f(r) = (r^(1-s) - 1)/(1-s) + 1`` (s < 1) or ``log r + 1`` (s = 1), and
``th(r) = -int_2^r q(t) t^(-s) dt`` the long-range phase correction.  The
cut-off variable x is either r itself or f(r).

Two evaluation routes exist.  ``weyl_residual`` applies the assembled sector
matrix to grid samples of phi_n.  ``weyl_residual_exact`` applies the
continuous operator pointwise in multiple precision and integrates over the
support; it reaches the dyadic shells of the f-variable, which lie far
beyond any finite-difference grid when s = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate

from .distortion import DistortionParams, cutoff_eval, switch_eval
from .errors import ArgumentError
from .operator import RadialGrid, SectorOperator, angular_eigenvalue, raw_coefficients
from .potential import PotentialModel, q_eval
from .spectral import ess_line

PHASES = ("integral", "none")
VARIABLES = ("r", "f")


@dataclass(frozen=True)
class WeylSpec:
    s: float
    lam: float
    n: int
    hbar: float
    model: PotentialModel = field(default=None)
    phase: str = "integral"
    variable: str = "f"

    def __post_init__(self):
        if self.model is None:
            object.__setattr__(self, "model", PotentialModel(s=self.s))
        if not 0 < self.s <= 1:
            raise ArgumentError("s must lie in (0, 1]")
        if int(self.n) != self.n or self.n < 1:
            raise ArgumentError("dyadic index n must be an integer >= 1")
        if not self.hbar > 0:
            raise ArgumentError("hbar must be positive")
        if self.phase not in PHASES:
            raise ArgumentError(f"phase must be one of {PHASES}")
        if self.variable not in VARIABLES:
            raise ArgumentError(f"cut-off variable must be one of {VARIABLES}")
        if self.model.s != self.s:
            raise ArgumentError("potential model exponent differs from s")
        if self.phase == "integral" and not self.model.is_zero:
            if self.model.family != "power-decay" or not self.model.rho > self.s:
                raise ArgumentError("integral phase needs the power-decay family with rho > s")

    @property
    def uses_phase_integral(self):
        return self.phase == "integral" and not self.model.is_zero


def f_variable(s, r, order=0):
    r = np.asarray(r, dtype=float)
    if s < 1:
        vals = ((r ** (1 - s) - 1) / (1 - s) + 1, r ** (-s), -s * r ** (-s - 1))
    else:
        vals = (np.log(r) + 1, 1 / r, -1 / r**2)
    return vals[order]


def f_inverse(s, y):
    y = np.asarray(y, dtype=float)
    if s < 1:
        return ((y - 1) * (1 - s) + 1) ** (1 / (1 - s))
    return np.exp(y - 1)


def eta(n, x, order=0):
    """Dyadic bump: rises on [2^n, 1.25 2^n], falls on [1.75 2^n, 2^(n+1)]."""
    a = 2.0**n
    k = 1 / (0.25 * a)
    tu = 1 + (np.asarray(x, dtype=float) - a) * k
    td = 1 + (2 * a - np.asarray(x, dtype=float)) * k
    u = [switch_eval("exp", tu, j) for j in range(order + 1)]
    v = [switch_eval("exp", td, j) for j in range(order + 1)]
    if order == 0:
        return u[0] * v[0]
    if order == 1:
        return k * (u[1] * v[0] - u[0] * v[1])
    if order == 2:
        return k * k * (u[2] * v[0] - 2 * u[1] * v[1] + u[0] * v[2])
    raise ArgumentError("eta derivative order must be 0..2")


def support_radii(spec: WeylSpec):
    lo, hi = 2.0**spec.n, 2.0 ** (spec.n + 1)
    if spec.variable == "r":
        return lo, hi
    return float(f_inverse(spec.s, lo)), float(f_inverse(spec.s, hi))


def phase_correction(m: PotentialModel, s, r, panel_nodes=10):
    """``th(r) = -int_2^r q(t) t^(-s) dt`` at sorted or unsorted radii.

    The first node is reached from 2 by adaptive quadrature, the rest by
    Gauss-Legendre panels between consecutive nodes.
    """
    r = np.asarray(r, dtype=float)
    if m.is_zero:
        return np.zeros_like(r)
    order = np.argsort(r)
    rs = r[order]

    def integrand(t):
        return q_eval(m, t) * t ** (-s)

    start, _ = integrate.quad(integrand, 2.0, rs[0], epsabs=1e-13, epsrel=1e-13, limit=200)
    xg, wg = np.polynomial.legendre.leggauss(panel_nodes)
    a, b = rs[:-1], rs[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * xg[None, :]
    pieces = half * (integrand(pts) @ wg)
    out = np.empty_like(rs)
    out[0] = start
    out[1:] = start + np.cumsum(pieces)
    res = np.empty_like(out)
    res[order] = -out
    return res


def total_phase(spec: WeylSpec, r):
    r = np.asarray(r, dtype=float)
    s = spec.s
    ph = r ** (1 + s) / (1 + s) + spec.lam * f_variable(s, r)
    if spec.uses_phase_integral:
        ph = ph + phase_correction(spec.model, s, r)
    return ph


def _check_support(spec, grid):
    lo, hi = support_radii(spec)
    if lo <= grid.r_min or hi >= grid.r_max:
        raise ArgumentError(
            f"support [{lo:.6g}, {hi:.6g}] is not inside the grid [{grid.r_min}, {grid.r_max}]"
        )
    return lo, hi


def weyl_vector(spec: WeylSpec, grid: RadialGrid):
    """Samples of phi_n on the interior nodes, unit weighted norm."""
    _check_support(spec, grid)
    r = grid.interior
    x = r if spec.variable == "r" else f_variable(spec.s, r)
    amp = eta(spec.n, x) * r ** (-(grid.d + spec.s - 1) / 2)
    vec = amp * np.exp(1j * total_phase(spec, r) / spec.hbar)
    nrm = np.sqrt(np.sum(grid.interior_weights * np.abs(vec) ** 2))
    return vec / nrm


def target_point(s, beta, lam, offset=0.0):
    return complex(lam, ess_line(s, beta)) + offset


def _check_saturated(spec, p):
    lo, _ = support_radii(spec)
    if cutoff_eval(p.cutoff, lo ** (2 * p.s), 0) < 1:
        raise ArgumentError("Weyl support must lie where the distortion cut-off equals 1")


def weyl_residual(spec: WeylSpec, op: SectorOperator, offset=0.0):
    """Weighted norm of ``(H_theta - z) phi_n`` on the grid."""
    p = op.params.distortion
    if op.params.s != spec.s:
        raise ArgumentError("operator and Weyl spec use different s")
    if op.params.model != spec.model:
        raise ArgumentError("operator and Weyl spec use different potentials")
    _check_saturated(spec, p)
    vec = weyl_vector(spec, op.grid)
    z = target_point(spec.s, op.params.beta, spec.lam, offset)
    res = op.apply(vec) - z * vec
    return op.norm(res)


# multiple-precision route


def _q_mp(m: PotentialModel, z):
    if m.is_zero:
        return mpmath.mpf(0)
    y = 1 + z * z
    if m.family == "quadratic":
        return m.kappa * y
    if m.family == "power-decay":
        return m.kappa * mpmath.power(y, (2 * m.s - m.rho) / 2)
    ell = mpmath.log(y) / 2 + 1
    return m.kappa * mpmath.power(ell, -1 - m.rho) * y


def _dq_mp(m: PotentialModel, r):
    y = 1 + r * r
    if m.is_zero:
        return mpmath.mpf(0)
    if m.family == "quadratic":
        return 2 * m.kappa * r
    if m.family == "power-decay":
        e = (2 * m.s - m.rho) / 2
        return m.kappa * e * mpmath.power(y, e - 1) * 2 * r
    a = -1 - m.rho
    ell = mpmath.log(y) / 2 + 1
    return m.kappa * (a * mpmath.power(ell, a - 1) * (r / y) * y + mpmath.power(ell, a) * 2 * r)


def _saturated_jet_mp(s, th, r):
    """r_theta and three derivatives where the cut-off equals 1."""
    if s < 1:
        two_s = 2 * s
        u = r**two_s + two_s * th
        u1 = two_s * r ** (two_s - 1)
        u2 = two_s * (two_s - 1) * r ** (two_s - 2)
        u3 = two_s * (two_s - 1) * (two_s - 2) * r ** (two_s - 3)
    else:
        two_s = 2
        u = r * r + 2 * th * mpmath.log(r)
        u1 = 2 * r + 2 * th / r
        u2 = 2 - 2 * th / r**2
        u3 = 4 * th / r**3
    m = mpmath.mpf(1) / two_s
    rt = mpmath.power(u, m)
    v1, v2, v3 = u1 / u, u2 / u, u3 / u
    rt1 = m * rt * v1
    rt2 = m * rt * ((m - 1) * v1**2 + v2)
    rt3 = m * rt * ((m - 1) * (m - 2) * v1**3 + 3 * (m - 1) * v1 * v2 + v3)
    return u, rt, rt1, rt2, rt3


def _f_mp(s, r):
    if s < 1:
        return r ** (-s), -s * r ** (-s - 1)
    return 1 / r, -1 / r**2


def weyl_residual_exact(spec: WeylSpec, p: DistortionParams, ell=0, offset=0.0, nodes=48, extra_digits=30):
    """Continuous ``||(H_theta - z) phi_n|| / ||phi_n||`` in multiple precision.

    The leading terms of the residual cancel to relative order r^(-2s), so
    the working precision grows with the support radius.  Quadrature is
    Gauss-Legendre on the three pieces of the bump in the cut-off variable.
    """
    if p.s != spec.s:
        raise ArgumentError("distortion and Weyl spec use different s")
    _check_saturated(spec, p)
    s, d, hb_f = spec.s, p.d, spec.hbar
    lo_r, hi_r = support_radii(spec)
    dps = int(extra_digits + 2 * math.log10(hi_r) + 10)
    beta = float(np.imag(p.theta))
    z_c = target_point(s, beta, spec.lam, offset)
    a = 2.0**spec.n
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    lam_ang = angular_eigenvalue(ell, d)
    g_exp = -(d + s - 1) / 2
    m = spec.model
    with mpmath.workdps(dps):
        th = mpmath.mpc(complex(p.theta))
        hb = mpmath.mpf(hb_f)
        k = hb * hb / 2
        z = mpmath.mpc(z_c)
        lam = mpmath.mpf(spec.lam)
        res_sq = mpmath.mpf(0)
        nrm_sq = mpmath.mpf(0)
        for lo, hi in ((a, 1.25 * a), (1.25 * a, 1.75 * a), (1.75 * a, 2 * a)):
            for xn, wn in zip(xg, wg):
                xf = lo + (hi - lo) * (xn + 1) / 2
                wq = mpmath.mpf(wn * (hi - lo) / 2)
                e0, e1, e2 = (float(eta(spec.n, xf, j)) for j in range(3))
                if spec.variable == "f":
                    xm = mpmath.mpf(xf)
                    r = mpmath.e ** (xm - 1) if s == 1 else ((xm - 1) * (1 - s) + 1) ** (1 / mpmath.mpf(1 - s))
                    x1, x2 = _f_mp(s, r)
                    jac = 1 / x1
                else:
                    r = mpmath.mpf(xf)
                    x1, x2 = mpmath.mpf(1), mpmath.mpf(0)
                    jac = mpmath.mpf(1)
                pw = r**g_exp
                pw1 = g_exp * pw / r
                pw2 = g_exp * (g_exp - 1) * pw / r**2
                A = e0 * pw
                A1 = e1 * x1 * pw + e0 * pw1
                A2 = (e2 * x1 * x1 + e1 * x2) * pw + 2 * e1 * x1 * pw1 + e0 * pw2
                f1, f2 = _f_mp(s, r)
                P1 = r**s + lam * f1
                P2 = s * r ** (s - 1) + lam * f2
                if spec.uses_phase_integral:
                    qr = _q_mp(m, r)
                    P1 += -qr * r ** (-s)
                    P2 += -_dq_mp(m, r) * r ** (-s) + s * qr * r ** (-s - 1)
                u, rt, rt1, rt2, rt3 = _saturated_jet_mp(s, th, r)
                a2, a1, a0 = raw_coefficients(r, rt, rt1, rt2, rt3, d, lam_ang)
                i_h = 1j / hb
                lap = (
                    a2 * (A2 + 2 * i_h * A1 * P1 + i_h * A * P2 - A * P1 * P1 / (hb * hb))
                    + a1 * (A1 + i_h * A * P1)
                    + a0 * A
                )
                pot = -u / 2 + _q_mp(m, rt)
                R = k * lap + (pot - z) * A
                meas = r ** (d - 1) * jac * wq
                res_sq += abs(R) ** 2 * meas
                nrm_sq += abs(A) ** 2 * meas
        return float(mpmath.sqrt(res_sq / nrm_sq))
