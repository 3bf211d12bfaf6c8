"""Radial perturbations q(r) with closed-form analytic continuation.

Families
--------
``zero``
    q = 0.
``power-decay`` (s < 1)
    q = kappa <r>**(2s - rho), <r> = (1 + r**2)**(1/2).
``log-decay`` (s = 1)
    q = kappa (log<r> + 1)**(-1 - rho) <r>**2.
``quadratic``
    q = kappa <r>**2.  Not a long-range perturbation; with kappa = 1 and s = 1
    it turns the repulsive oscillator into a confining one, which gives exact
    eigenvalues for solver self-tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distortion import DistortionParams, cutoff_eval, distortion_jet
from .errors import ArgumentError, DomainError

FAMILIES = ("zero", "power-decay", "log-decay", "quadratic")


@dataclass(frozen=True)
class PotentialModel:
    family: str = "zero"
    kappa: float = 0.0
    rho: float = 0.5
    s: float = 0.5
    beta0: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ArgumentError(f"unknown potential family {self.family!r}")
        if not 0 < self.s <= 1:
            raise ArgumentError(f"s must lie in (0, 1], got {self.s!r}")
        if self.family in ("power-decay", "log-decay") and not 0 < self.rho < 1:
            raise ArgumentError(f"rho must lie in (0, 1), got {self.rho!r}")
        if self.family == "power-decay" and self.s == 1:
            raise ArgumentError("power-decay family is the s < 1 model")
        if self.family == "log-decay" and self.s != 1:
            raise ArgumentError("log-decay family is the s = 1 model")
        if not self.beta0 > 0:
            raise ArgumentError("beta0 must be positive")

    @property
    def is_zero(self):
        return self.family == "zero" or self.kappa == 0


def _power_jet(y, y1, y2, e):
    """y**e and three derivatives, for y with y''' = 0."""
    p0 = y**e
    p1 = e * y ** (e - 1) * y1
    p2 = e * (e - 1) * y ** (e - 2) * y1**2 + e * y ** (e - 1) * y2
    p3 = e * (e - 1) * (e - 2) * y ** (e - 3) * y1**3 + 3 * e * (e - 1) * y ** (e - 2) * y1 * y2
    return p0, p1, p2, p3


def _q_jet(m: PotentialModel, r):
    """q and its first three radial derivatives at (real or complex) r."""
    r = np.asarray(r)
    y = 1 + r * r
    y1, y2 = 2 * r, 2.0 + 0 * r
    zero = np.zeros_like(y)
    if m.family == "zero":
        return zero, zero, zero, zero
    if m.family == "quadratic":
        return m.kappa * y, m.kappa * y1, m.kappa * y2, zero
    if m.family == "power-decay":
        e = (2 * m.s - m.rho) / 2
        return tuple(m.kappa * v for v in _power_jet(y, y1, y2, e))
    # log-decay: kappa * ell**a * y with ell = log<r> + 1
    a = -1 - m.rho
    ell = 0.5 * np.log(y) + 1
    l1 = r / y
    l2 = (1 - r * r) / y**2
    l3 = (2 * r**3 - 6 * r) / y**3
    f0 = ell**a
    f1 = a * ell ** (a - 1) * l1
    f2 = a * (a - 1) * ell ** (a - 2) * l1**2 + a * ell ** (a - 1) * l2
    f3 = (
        a * (a - 1) * (a - 2) * ell ** (a - 3) * l1**3
        + 3 * a * (a - 1) * ell ** (a - 2) * l1 * l2
        + a * ell ** (a - 1) * l3
    )
    q0 = f0 * y
    q1 = f1 * y + f0 * y1
    q2 = f2 * y + 2 * f1 * y1 + f0 * y2
    q3 = f3 * y + 3 * f2 * y1 + 3 * f1 * y2
    return tuple(m.kappa * v for v in (q0, q1, q2, q3))


def q_eval(m: PotentialModel, r, order=0):
    """``order``-th radial derivative of q at real radius ``r >= 0``."""
    if order not in (0, 1, 2, 3):
        raise ArgumentError(f"derivative order must be 0..3, got {order!r}")
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ArgumentError("radius must be >= 0")
    val = _q_jet(m, r)[order]
    return float(val) if scalar else np.asarray(val, dtype=float)


def _check_branch(z, what):
    if np.any(np.abs(np.angle(z)) >= np.pi / 2):
        raise DomainError(f"{what} crosses the branch cut of the principal continuation")


def q_complex(m: PotentialModel, z):
    """Closed form of q at complex radius ``z`` (principal branches)."""
    z = np.asarray(z, dtype=complex)
    if m.family == "zero":
        return np.zeros_like(z)
    y = 1 + z * z
    _check_branch(y, "1 + r_theta^2")
    if m.family == "quadratic":
        return m.kappa * y
    if m.family == "power-decay":
        return m.kappa * np.exp((2 * m.s - m.rho) / 2 * np.log(y))
    ell = 0.5 * np.log(y) + 1
    _check_branch(ell, "log<r_theta> + 1")
    return m.kappa * np.exp((-1 - m.rho) * np.log(ell)) * y


def _check_pair(m, p):
    if m.s != p.s:
        raise ArgumentError(f"potential exponent s={m.s} differs from distortion s={p.s}")


def q_theta_eval(m: PotentialModel, p: DistortionParams, r, tol=None):
    """Distorted potential ``q_theta(r) = q(r_theta)``.

    ``tol`` is accepted for interface symmetry; the closed forms are exact.
    """
    _check_pair(m, p)
    if abs(p.theta.imag) >= m.beta0:
        raise DomainError(f"|Im theta| = {abs(p.theta.imag)} is not below beta0 = {m.beta0}")
    scalar = np.ndim(r) == 0
    rt = distortion_jet(p, r).rt
    val = q_complex(m, rt)
    return complex(val[0]) if scalar else val


def q_theta_taylor(m: PotentialModel, p: DistortionParams, r):
    """First-order expansion of q_theta in theta: returns ``(q(r), coefficient)``.

    The coefficient is ``r**(1-2s) chi_R(r**(2s)) q'(r)`` for s < 1 and
    ``r**(-1) log(r) chi_R(r**2) q'(r)`` for s = 1.
    """
    _check_pair(m, p)
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    q0 = q_eval(m, r, 0)
    q1 = q_eval(m, r, 1)
    if p.s < 1:
        first = r ** (1 - 2 * p.s) * cutoff_eval(p.cutoff, r ** (2 * p.s), 0) * q1
    else:
        chi = cutoff_eval(p.cutoff, r * r, 0)
        safe = np.where(r > 0, r, 1.0)
        first = np.where(chi > 0, np.log(safe) / safe * chi * q1, 0.0)
    if scalar:
        return float(q0), float(first)
    return q0, first


def envelope(m: PotentialModel, r, k):
    """Decay envelope allowed for the k-th derivative of a long-range q."""
    r = np.asarray(r, dtype=float)
    br = np.sqrt(1 + r * r)
    if m.s < 1:
        return br ** (2 * m.s - k - m.rho)
    with np.errstate(divide="ignore"):
        return np.log(br) ** (-1 - m.rho) * br ** (2 - k)


@dataclass
class LongRangeReport:
    constants: list = field(default_factory=list)
    refined_constants: list = field(default_factory=list)
    passed: list = field(default_factory=list)

    @property
    def ok(self):
        return all(self.passed)

    def to_dict(self):
        return {
            "constants": list(self.constants),
            "refined_constants": list(self.refined_constants),
            "passed": list(self.passed),
            "ok": self.ok,
        }


def _sup_ratio(m, r, k):
    env = envelope(m, r, k)
    q = np.abs(q_eval(m, r, k))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.isinf(env), 0.0, q / env)
    return float(np.max(ratio))


def condition_long_range_check(m: PotentialModel, k_max=3, grid=None, stability=1.05):
    """Best constants C_k in |q^(k)| <= C_k * envelope_k on ``grid``.

    A constant passes when it is finite and the sup on the refined grid
    (midpoints added, range extended to twice the largest radius) exceeds it
    by less than the factor ``stability``.
    """
    if not 0 <= k_max <= 3:
        raise ArgumentError("k_max must lie in 0..3")
    if grid is None:
        grid = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 4000)])
    r = np.sort(np.asarray(grid, dtype=float))
    top = r[-1]
    ext = np.geomspace(top, 2 * top, 65)[1:] if top > 0 else np.array([])
    fine = np.sort(np.concatenate([r, 0.5 * (r[1:] + r[:-1]), ext]))
    report = LongRangeReport()
    for k in range(k_max + 1):
        c = _sup_ratio(m, r, k)
        cf = _sup_ratio(m, fine, k)
        if c == 0:
            ok = cf == 0
        else:
            ok = bool(np.isfinite(c) and np.isfinite(cf) and cf / c < stability)
        report.constants.append(c)
        report.refined_constants.append(cf)
        report.passed.append(ok)
    return report
