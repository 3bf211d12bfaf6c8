"""Radial complex distortion ``r -> r_theta`` and the coefficients built from it.

For ``s < 1`` the distorted radius is

    r_theta = (r**(2s) + 2 s theta chi_R(r**(2s)))**(1/(2s))

and for ``s = 1``

    r_theta = (r**2 + 2 theta chi_R(r**2) log r)**(1/2),

with ``chi_R(t) = chi_1(t / R**(2s))`` a smooth switch from 0 (t <= R**(2s)) to
1 (t >= 2 R**(2s)).  Everything here is vectorised over ``r`` and works for
complex ``theta``; only the inverse map is restricted to real ``theta``.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import ArgumentError, ContractionError, ConvergenceError, DomainError, NumericalError

SWITCH_KINDS = ("exp",)

MAX_INVERSION_ITERATIONS = 200


def _exp_switch(t, order=0):
    """C-infinity switch phi(t-1)/(phi(t-1)+phi(2-t)), phi(x)=exp(-1/x), and its
    derivatives up to order 3.

    Inside (1, 2) the switch is the logistic function of
    g(t) = 1/(t-1) - 1/(2-t), evaluated through ``expit`` so that neither end
    overflows.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    if order == 0:
        out[t >= 2.0] = 1.0
    inside = (t > 1.0) & (t < 2.0)
    if not inside.any():
        return out
    a = t[inside] - 1.0
    b = 2.0 - t[inside]
    g = 1.0 / a - 1.0 / b
    s0 = expit(-g)
    p0 = s0 * expit(g)  # s0 * (1 - s0) without cancellation
    if order == 0:
        out[inside] = s0
        return out
    g1 = -1.0 / a**2 - 1.0 / b**2
    s1 = -p0 * g1
    if order == 1:
        out[inside] = s1
        return out
    g2 = 2.0 / a**3 - 2.0 / b**3
    s2 = -s1 * (1.0 - 2.0 * s0) * g1 - p0 * g2
    if order == 2:
        out[inside] = s2
        return out
    g3 = -6.0 / a**4 - 6.0 / b**4
    p1 = s1 * (1.0 - 2.0 * s0)
    out[inside] = (
        -(s2 * (1.0 - 2.0 * s0) - 2.0 * s1**2) * g1
        - s1 * (1.0 - 2.0 * s0) * g2
        - p1 * g2
        - p0 * g3
    )
    return out


_SWITCHES = {"exp": _exp_switch}


def switch_eval(kind, t, order=0):
    """Evaluate the unit switch ``chi_1`` (or a derivative) of the given family."""
    if order not in (0, 1, 2, 3):
        raise ArgumentError(f"derivative order must be 0..3, got {order!r}")
    try:
        fn = _SWITCHES[kind]
    except KeyError:
        raise ArgumentError(f"unknown switch kind {kind!r}") from None
    return fn(t, order)


@functools.lru_cache(maxsize=None)
def switch_lipschitz(kind="exp", samples=400_001):
    """Lipschitz constant of ``chi_1`` from dense sampling of its derivative."""
    t = np.linspace(1.0, 2.0, samples)
    return float(np.max(np.abs(switch_eval(kind, t, 1))))


@dataclass(frozen=True)
class CutoffSpec:
    """The scaled switch ``chi_R(t) = chi_1(t / R**(2s))``.

    ``L`` is the Lipschitz constant of ``chi_1``; it is measured from the
    switch when not supplied.
    """

    R: float = 1.0
    s: float = 0.5
    kind: str = "exp"
    L: float | None = None

    def __post_init__(self):
        if not self.R > 0:
            raise ArgumentError(f"R must be positive, got {self.R!r}")
        if not 0 < self.s <= 1:
            raise ArgumentError(f"s must lie in (0, 1], got {self.s!r}")
        if self.kind not in SWITCH_KINDS:
            raise ArgumentError(f"unknown switch kind {self.kind!r}")
        if self.L is None:
            object.__setattr__(self, "L", switch_lipschitz(self.kind))
        elif not self.L > 0:
            raise ArgumentError(f"L must be positive, got {self.L!r}")

    @property
    def scale(self):
        """``R**(2s)``, the argument scale of the switch."""
        return self.R ** (2 * self.s)


def cutoff_eval(spec: CutoffSpec, t, order=0):
    """``order``-th derivative of ``chi_R`` at ``t`` (chain-rule factor included)."""
    if order not in (0, 1, 2, 3):
        raise ArgumentError(f"derivative order must be 0..3, got {order!r}")
    scalar = np.ndim(t) == 0
    scale = spec.scale
    val = switch_eval(spec.kind, np.asarray(t, dtype=float) / scale, order)
    val = val * scale ** (-order)
    return float(val) if scalar else val


def _rho_star_s1(R, kind, L, samples=20_001):
    """Largest |theta| keeping r**2 + 2 theta chi_R(r**2) log r increasing.

    Bisection over theta; monotonicity is tested on a log-spaced sample of the
    switching shell [R, sqrt(2) R].  Outside the shell the derivative is
    2r + 2 theta / r, which caps theta at 2 R**2.
    """
    spec = CutoffSpec(R=R, s=1.0, kind=kind, L=L)
    r = np.geomspace(R, math.sqrt(2.0) * R, samples)
    t = r * r
    c0 = cutoff_eval(spec, t, 0)
    c1 = cutoff_eval(spec, t, 1)
    wprime = c1 * 2 * r * np.log(r) + c0 / r

    def increasing(rho):
        lo = 2 * r - 2 * rho * np.abs(wprime)
        return bool(np.all(lo > 0))

    lo, hi = 0.0, 2.0 * R * R
    if increasing(hi):
        return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if increasing(mid):
            lo = mid
        else:
            hi = mid
    return lo


_rho_star_cached = functools.lru_cache(maxsize=64)(_rho_star_s1)


def admissible_theta_radius(spec: CutoffSpec) -> float:
    """Radius ``L_s`` of real theta for which the forward map is invertible.

    ``s < 1``: ``R**(2s) / (2 s L)``, the contraction threshold of the inverse
    recurrence.  ``s = 1``: bisection value, see :func:`_rho_star_s1`.
    """
    if spec.s < 1:
        return spec.scale / (2 * spec.s * spec.L)
    return _rho_star_cached(float(spec.R), spec.kind, float(spec.L))


@dataclass(frozen=True)
class DistortionParams:
    """Distortion parameter theta together with the geometry it acts on."""

    theta: complex = 0.0
    s: float = 0.5
    d: int = 3
    cutoff: CutoffSpec | None = None
    L_s: float | None = None

    def __post_init__(self):
        if not 0 < self.s <= 1:
            raise ArgumentError(f"s must lie in (0, 1], got {self.s!r}")
        if int(self.d) != self.d or self.d < 2:
            raise ArgumentError(f"dimension d must be an integer >= 2, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "theta", complex(self.theta))
        cutoff = self.cutoff
        if cutoff is None:
            cutoff = CutoffSpec(R=1.0, s=self.s)
            object.__setattr__(self, "cutoff", cutoff)
        if cutoff.s != self.s:
            raise ArgumentError(f"cutoff exponent {cutoff.s} differs from s={self.s}")
        if self.s == 1 and cutoff.R < 1:
            # chi_R(r^2) > 0 must imply log r > 0
            raise ArgumentError(f"s = 1 requires R >= 1, got R={cutoff.R}")
        if self.L_s is None:
            object.__setattr__(self, "L_s", admissible_theta_radius(cutoff))

    @classmethod
    def create(cls, theta=0.0, s=0.5, d=3, R=1.0, kind="exp"):
        return cls(theta=theta, s=s, d=d, cutoff=CutoffSpec(R=R, s=s, kind=kind))

    @property
    def R(self):
        return self.cutoff.R

    def with_theta(self, theta):
        return dataclasses.replace(self, theta=complex(theta))


class DistortionJet(NamedTuple):
    """Pointwise values of the distortion and its r-derivatives.

    ``u`` is the radicand ``r_theta**(2s)``; ``rt``..``rt3`` are r_theta and its
    first three derivatives; ``J``..``J2`` the Jacobian and two derivatives;
    ``log_ratio`` is the branch-consistent ``log(r_theta / r)``.
    """

    r: np.ndarray
    u: np.ndarray
    rt: np.ndarray
    rt1: np.ndarray
    rt2: np.ndarray
    rt3: np.ndarray
    J: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    log_ratio: np.ndarray
    chi: np.ndarray
    chi1: np.ndarray


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise ArgumentError("radius must be positive")
    return r


def distortion_jet(p: DistortionParams, r) -> DistortionJet:
    """Evaluate r_theta, J and their derivatives at radii ``r`` (array)."""
    r = _check_radius(np.atleast_1d(r))
    # tiny radii overflow the inverse powers; such rows are idle and replaced below
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        s, th, spec = p.s, p.theta, p.cutoff
        two_s = 2.0 * s
        if s < 1:
            t = r**two_s
            t1 = two_s * r ** (two_s - 1)
            t2 = two_s * (two_s - 1) * r ** (two_s - 2)
            t3 = two_s * (two_s - 1) * (two_s - 2) * r ** (two_s - 3)
            kappa = two_s
            B, B1, B2, B3 = 1.0, 0.0, 0.0, 0.0
        else:
            t = r * r
            t1, t2, t3 = 2 * r, 2.0, 0.0
            kappa = 2.0
            B, B1, B2, B3 = np.log(r), 1 / r, -1 / r**2, 2 / r**3
        c0, c1, c2, c3 = (cutoff_eval(spec, t, k) for k in range(4))
        idle = np.broadcast_to((th == 0) | ((c0 == 0) & (c1 == 0) & (c2 == 0) & (c3 == 0)), r.shape)
        active = ~idle
        A = c0
        A1 = c1 * t1
        A2 = c2 * t1**2 + c1 * t2
        A3 = c3 * t1**3 + 3 * c2 * t1 * t2 + c1 * t3
        w = A * B
        w1 = A1 * B + A * B1
        w2 = A2 * B + 2 * A1 * B1 + A * B2
        w3 = A3 * B + 3 * A2 * B1 + 3 * A1 * B2 + A * B3
        u = t + kappa * th * w
        u1 = t1 + kappa * th * w1
        u2 = t2 + kappa * th * w2
        u3 = t3 + kappa * th * w3

        u = np.asarray(u, dtype=complex)
        if np.any(active & ((np.abs(np.angle(u)) >= np.pi / 2) | (u == 0))):
            raise DomainError("radicand leaves the right half plane; theta too large")
        log_u = np.log(u)
        m = 1.0 / two_s
        rt = np.exp(m * log_u)
        v1 = u1 / u
        v2 = u2 / u
        v3 = u3 / u
        rt1 = m * rt * v1
        rt2 = m * rt * ((m - 1) * v1**2 + v2)
        rt3 = m * rt * ((m - 1) * (m - 2) * v1**3 + 3 * (m - 1) * v1 * v2 + v3)

        # Jacobian in the two-case form (r_theta/r)**(d-2s) * K
        log_q = m * log_u - np.log(r)
        q = np.exp(log_q)
        q1 = rt1 / r - rt / r**2
        q2 = rt2 / r - 2 * rt1 / r**2 + 2 * rt / r**3
        if s < 1:
            K = 1 + two_s * th * c1
            K1 = two_s * th * c2 * t1
            K2 = two_s * th * (c3 * t1**2 + c2 * t2)
        else:
            lr = np.log(r)
            K = 1 + th * (c0 / r**2 + 2 * lr * c1)
            K1 = th * (-2 * c0 / r**3 + 4 * c1 / r + 4 * r * lr * c2)
            K2 = th * (
                6 * c0 / r**4
                - 8 * c1 / r**2
                + 12 * c2
                + 4 * lr * c2
                + 8 * r**2 * lr * c3
            )
        a = p.d - two_s
        qa = np.exp(a * log_q)
        lq1 = q1 / q
        qa1 = a * qa * lq1
        qa2 = a * qa * ((a - 1) * lq1**2 + q2 / q)
        J = qa * K
        J1 = qa1 * K + qa * K1
        J2 = qa2 * K + 2 * qa1 * K1 + qa * K2

        # where the deformation is switched off the map is the identity, exactly
        if np.any(idle):
            one, nil = np.ones_like(rt), np.zeros_like(rt)
            rt = np.where(idle, r, rt)
            u = np.where(idle, t, u)
            rt1 = np.where(idle, one, rt1)
            rt2 = np.where(idle, nil, rt2)
            rt3 = np.where(idle, nil, rt3)
            J = np.where(idle, one, J)
            J1 = np.where(idle, nil, J1)
            J2 = np.where(idle, nil, J2)
            log_q = np.where(idle, nil, log_q)
    if not (np.all(np.isfinite(J2[active])) and np.all(np.isfinite(rt3[active]))):
        raise NumericalError("distortion jet overflowed at active radii")
    return DistortionJet(r, u, rt, rt1, rt2, rt3, J, J1, J2, log_q, c0, c1)


def _squeeze(x, scalar):
    return complex(x[0]) if scalar else x


def r_theta_eval(p: DistortionParams, r):
    """Return ``(r_theta, d r_theta/dr, d^2 r_theta/dr^2)`` at ``r``."""
    scalar = np.ndim(r) == 0
    jet = distortion_jet(p, r)
    return tuple(_squeeze(x, scalar) for x in (jet.rt, jet.rt1, jet.rt2))


def jacobian_eval(p: DistortionParams, r):
    """Return ``(J, dJ/dr, d^2J/dr^2)`` at ``r``."""
    scalar = np.ndim(r) == 0
    jet = distortion_jet(p, r)
    return tuple(_squeeze(x, scalar) for x in (jet.J, jet.J1, jet.J2))


def phi_from_jet(jet: DistortionJet, d):
    J, J1, J2 = jet.J, jet.J1, jet.J2
    ratio = np.exp(jet.log_ratio)
    return (
        -0.75 * J1**2 / J**2
        + 0.5 * J2 / J
        - 0.5 * jet.rt2 * J1 / (J * jet.rt1)
        + 0.5 * (d - 1) * jet.rt1 * J1 / (J * ratio * jet.r)
    )


def phi_coeff(p: DistortionParams, r):
    """Zeroth-order coefficient ``phi(r)`` of the expanded conjugated Laplacian."""
    scalar = np.ndim(r) == 0
    return _squeeze(phi_from_jet(distortion_jet(p, r), p.d), scalar)


def _picard_map(p: DistortionParams, target):
    """The map x -> target - (perturbation at x) in the variable x = r**(2s)."""
    th = p.theta.real
    spec = p.cutoff
    if p.s < 1:
        k = 2 * p.s * th

        def G(x):
            return target - k * cutoff_eval(spec, x, 0)

    else:

        def G(x):
            c = cutoff_eval(spec, x, 0)
            # chi_R(x) = 0 whenever x < R^2 <= ... so log is only taken for x >= 1
            term = 0.0 if c == 0 else 2 * th * c * 0.5 * math.log(x)
            return target - term

    return G


def _check_real_theta(p):
    if p.theta.imag != 0:
        raise ArgumentError("inversion is defined for real theta only")
    if abs(p.theta.real) >= p.L_s:
        raise ContractionError(
            f"|theta| = {abs(p.theta.real)} is not below L_s = {p.L_s}"
        )


def inversion_iterates(p: DistortionParams, r_tilde, n):
    """First ``n`` plain recurrence iterates r_0 = r_tilde, r_1, ... r_{n-1}."""
    _check_real_theta(p)
    two_s = 2 * p.s
    G = _picard_map(p, float(r_tilde) ** two_s)
    xs = [float(r_tilde) ** two_s]
    for _ in range(n - 1):
        xs.append(max(G(xs[-1]), 0.0))
    return np.asarray(xs) ** (1 / two_s)


def invert_r_theta(p: DistortionParams, r_tilde, tol=None, accelerate=True):
    """Solve ``r_theta(r) = r_tilde`` for real theta by the fixed-point recurrence
    ``r_n**(2s) = r_tilde**(2s) - 2 s theta chi_R(r_{n-1}**(2s))``.

    Returns ``(r, iterations)`` where ``iterations`` counts evaluations of the
    recurrence.  Near |theta| = L_s the contraction factor approaches one; with
    ``accelerate`` an Aitken extrapolation is applied whenever successive gaps
    shrink by less than half, which keeps the count well under the cap.
    """
    if not r_tilde >= 0:
        raise ArgumentError(f"r_tilde must be >= 0, got {r_tilde!r}")
    _check_real_theta(p)
    two_s = 2 * p.s
    target = float(r_tilde) ** two_s
    if tol is None:
        tol = 1e-14 * (1 + target)
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    G = _picard_map(p, target)
    x = target
    hist = [x]
    for it in range(1, MAX_INVERSION_ITERATIONS + 1):
        x_new = max(G(x), 0.0)
        if abs(x_new - x) <= tol:
            return x_new ** (1 / two_s), it
        x = x_new
        hist.append(x)
        if accelerate and len(hist) >= 3:
            x0, x1, x2 = hist[-3:]
            d1, d2 = x1 - x0, x2 - x1
            if d1 != 0 and 0.5 < abs(d2 / d1) < 1 and d2 != d1:
                x = max(x2 - d2 * d2 / (d2 - d1), 0.0)
                hist = [x]
    raise ConvergenceError(
        f"inversion did not converge in {MAX_INVERSION_ITERATIONS} iterations",
        last=x ** (1 / two_s),
        iterations=MAX_INVERSION_ITERATIONS,
    )


def forward_radicand_real(p: DistortionParams, r):
    """Real-theta residual helper: ``r**(2s) + 2 s theta chi_R(r**(2s))`` (or the
    s = 1 analogue), i.e. ``r_theta(r)**(2s)``."""
    r = np.asarray(r, dtype=float)
    th = p.theta.real
    if p.s < 1:
        t = r ** (2 * p.s)
        return t + 2 * p.s * th * cutoff_eval(p.cutoff, t, 0)
    t = r * r
    c = cutoff_eval(p.cutoff, t, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(c > 0, c * np.log(np.where(r > 0, r, 1.0)), 0.0)
    return t + 2 * th * term


def contraction_factor(p: DistortionParams):
    """Lipschitz bound of the inverse recurrence in the variable r**(2s).

    ``2 s |theta| R**(-2s) L`` for s < 1; for s = 1 the sampled sup of the
    recurrence derivative, ``|theta| / L_1``.
    """
    th = abs(p.theta)
    if p.s < 1:
        return 2 * p.s * th * p.cutoff.L / p.cutoff.scale
    return th / p.L_s
