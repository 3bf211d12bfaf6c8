"""Hypotheses of the resonance-free estimate: partitions, margins and windows.

A window fixes the energy E, the imaginary shift factor mu, the forbidden
margin alpha, the virial margin gamma and the two partition radii.  Between
``r_inner`` and ``r_outer`` the cut-offs are ``chi = cos(pi/2 * x)`` and
``chi_tilde = sin(pi/2 * x)`` with x the rescaled smooth switch, so
``chi**2 + chi_tilde**2 = 1`` holds identically.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .distortion import CutoffSpec, cutoff_eval, switch_eval
from .errors import ArgumentError, RescertError
from .potential import PotentialModel, q_eval

SQRT_E = math.sqrt(math.e)


class WindowRejected(RescertError):
    """No window of the free-case recipe exists for this (s, E)."""


@dataclass(frozen=True)
class VirialWindow:
    E: float
    mu: float
    alpha: float
    gamma: float
    r_inner: float
    r_outer: float
    R: float
    s: float
    notes: tuple = ()

    @property
    def z(self):
        """Spectral point E - i beta mu, per unit beta: returns (E, mu)."""
        return self.E, self.mu

    def target(self, beta):
        return complex(self.E, -beta * self.mu)

    def leading_constant(self, beta):
        return min(self.alpha, beta * self.gamma)

    def to_dict(self):
        d = asdict(self)
        d["notes"] = list(self.notes)
        return d


def forbidden_margin(m: PotentialModel, E, r):
    r = np.asarray(r, dtype=float)
    return -0.5 * r ** (2 * m.s) + q_eval(m, r, 0) - E


def virial_margin(m: PotentialModel, E, mu, r):
    """Left side of the virial condition minus mu (needs r > 0)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ArgumentError("virial margin needs r > 0")
    s = m.s
    q = q_eval(m, r, 0)
    dq = q_eval(m, r, 1)
    if s < 1:
        val = 1 - s - 2 * (1 - 2 * s) * r ** (-2 * s) * (q - E) - r ** (1 - 2 * s) * dq
    else:
        lr = np.log(r)
        val = 1 + 2 * (lr - 1) * (q - E) / r**2 - lr * dq / r
    return val - mu


def tail_limit(m: PotentialModel, E, mu):
    """Limit of ``virial_margin`` as r -> infinity, from the decay exponents."""
    base = (1 - m.s if m.s < 1 else 1.0) - mu
    if m.is_zero or m.family in ("power-decay", "log-decay"):
        # every q-term decays like r**(-rho) or (log r)**(-rho)
        return base
    # quadratic family
    if m.s == 1:
        return base - 2 * m.kappa
    return -math.inf if m.kappa > 0 else math.inf


def _radius(s, level):
    """Solve -r**(2s)/2 - E = alpha for r given ``level = -E - alpha``."""
    return (2 * level) ** (1 / (2 * s))


def _window_s1_lower_bound(E, mu, alpha):
    a, lg = alpha, math.log(-2 * E)
    d = E + 2 * a
    return 0.5 * lg - mu + 2 * a / d + E / (2 * d) * math.log(d / E) - a / d * lg


def mu_cap(s, E):
    """Supremum of the admissible shift factors mu for the free case."""
    if s < 0.5:
        return s
    if s < 1:
        return 1 - s
    return 1.0 if E < -math.e**2 / 2 else 0.5 * math.log(-2 * E)


def free_case_window(s, E, mu=None) -> VirialWindow:
    """Window for q = 0 from the explicit recipes, mid-interval choices.

    ``mu`` overrides the default shift factor; it must lie below
    :func:`mu_cap`.  Raises :class:`WindowRejected` where no window exists.
    """
    if not 0 < s <= 1:
        raise ArgumentError("s must lie in (0, 1]")
    E = float(E)
    notes = []
    if s < 1 and E >= 0:
        raise WindowRejected(f"s={s}: energy must be negative, got E={E}")
    if s == 1 and E >= -0.5:
        raise WindowRejected(f"s=1 needs E < -1/2, got E={E}")
    if mu is not None:
        cap = mu_cap(s, E)
        if not 0 < mu < cap:
            raise WindowRejected(f"mu={mu} outside the admissible interval (0, {cap!r})")
    if s < 1:
        if s >= 0.5:
            mu = (1 - s) / 2 if mu is None else mu
            gamma = (1 - s - mu) / 2
            alpha = -E / 2
            r_outer = _radius(s, -E - alpha)
            r_inner = r_outer / 2
        else:
            mu = s / 2 if mu is None else mu
            k = (1 - 2 * s) / (1 - s - mu)
            alpha = -(1 - k) * E / 2
            c = (k * E / (E + alpha) + 1) / 2
            r_outer = _radius(s, -E - alpha)
            r_inner = _radius(s, c * (-E - alpha))
            gamma = (1 - s - mu - (1 - 2 * s) * E / (c * (E + alpha))) / 2
            notes.append(f"c={c!r}")
        R = r_inner / 2 ** (1 / (2 * s))
        return VirialWindow(E, mu, alpha, gamma, r_inner, r_outer, R, s, tuple(notes))

    e2 = math.e**2
    if E < -e2 / 2:
        alpha = -(2 * E + e2) / 8
        mu = 0.5 if mu is None else mu
        gamma = (1 - mu) / 2
    else:
        cap = 0.5 * math.log(-2 * E)
        mu = cap / 2 if mu is None else mu
        alpha = -(2 * E + 1) / 8
        if E < -math.e / 2:
            # keep supp chi_tilde inside r >= sqrt(e)
            alpha = min(alpha, (-2 * E - math.e) / 8)
        else:
            notes.append("support clause r_inner >= sqrt(e) cannot hold for E >= -e/2")
        target = (cap - mu) / 2
        for _ in range(200):
            if _window_s1_lower_bound(E, mu, alpha) >= target:
                break
            alpha /= 2
        gamma = _window_s1_lower_bound(E, mu, alpha) / 2
    r_inner = math.sqrt(2 * (-E - 2 * alpha))
    r_outer = math.sqrt(2 * (-E - alpha))
    R = max(1.0, r_inner / math.sqrt(2))
    return VirialWindow(E, mu, alpha, gamma, r_inner, r_outer, R, 1.0, tuple(notes))


def build_partition(window: VirialWindow, r):
    """``(chi, chi_tilde, chi')`` at radii ``r``."""
    if not window.r_inner < window.r_outer:
        raise ArgumentError("degenerate window: r_inner must be below r_outer")
    r = np.asarray(r, dtype=float)
    width = window.r_outer - window.r_inner
    t = 1 + (r - window.r_inner) / width
    x = switch_eval("exp", t, 0)
    dx = switch_eval("exp", t, 1) / width
    ang = 0.5 * np.pi * x
    chi = np.cos(ang)
    chit = np.sin(ang)
    chi = np.where(t <= 1, 1.0, chi)
    chit = np.where(t <= 1, 0.0, chit)
    chi = np.where(t >= 2, 0.0, chi)
    chit = np.where(t >= 2, 1.0, chit)
    dchi = -np.sin(ang) * 0.5 * np.pi * dx
    return chi, chit, dchi


@dataclass
class VirialCertificate:
    checks: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    window: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def failed(self):
        return [k for k, v in self.checks.items() if not v]

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": dict(self.checks),
            "margins": dict(self.margins),
            "window": dict(self.window),
        }


def default_radii(window: VirialWindow, r_max=None, n=4001):
    """Sample radii covering both supports, with the partition radii included."""
    top = r_max if r_max is not None else max(50.0, 20 * window.r_outer)
    base = np.concatenate([np.linspace(0.0, window.r_outer, n), np.geomspace(max(window.r_inner, 1e-6), top, n)])
    return np.unique(np.concatenate([base, [window.r_inner, window.r_outer]]))


def validate_window(m: PotentialModel, window: VirialWindow, grid=None, rtol=1e-12) -> VirialCertificate:
    """Check hypotheses (i)-(iii), the tail limit and the cut-off condition.

    ``grid`` is an array of radii or an object with ``nodes``; the partition
    radii and r = 0 are always added.
    """
    if m.s != window.s:
        raise ArgumentError(f"potential exponent s={m.s} differs from window s={window.s}")
    if grid is None:
        r = default_radii(window)
    else:
        r = np.asarray(getattr(grid, "nodes", grid), dtype=float)
        r = np.unique(np.concatenate([[0.0, window.r_inner, window.r_outer], r]))
    w = window
    cert = VirialCertificate(window=w.to_dict())
    ck, mg = cert.checks, cert.margins

    ck["positive_parameters"] = w.mu > 0 and w.alpha > 0 and w.gamma > 0
    ck["ordered_radii"] = 0 < w.r_inner < w.r_outer
    if not ck["ordered_radii"]:
        return cert

    chi, chit, _ = build_partition(w, r)
    ident = float(np.max(np.abs(chi**2 + chit**2 - 1)))
    mg["partition_identity_error"] = ident
    ck["partition_identity"] = ident <= 1e-15 * 4
    ck["chi_one_near_zero"] = bool(np.all(chi[r <= w.r_inner] == 1))
    if w.s == 1:
        ck["support_sqrt_e"] = w.r_inner >= SQRT_E
        ck["R_at_least_one"] = w.R >= 1

    in_chi = r <= w.r_outer
    fm = forbidden_margin(m, w.E, r[in_chi])
    mg["forbidden_min"] = float(fm.min())
    ck["forbidden_region"] = bool(fm.min() >= w.alpha * (1 - rtol))

    in_tilde = r >= w.r_inner
    vm = virial_margin(m, w.E, w.mu, r[in_tilde])
    mg["virial_min"] = float(vm.min())
    mg["virial_argmin"] = float(r[in_tilde][np.argmin(vm)])
    ck["virial"] = bool(vm.min() >= w.gamma * (1 - rtol))

    tail = tail_limit(m, w.E, w.mu)
    mg["virial_tail_limit"] = tail
    ck["virial_tail"] = tail > w.gamma

    spec = CutoffSpec(R=w.R, s=w.s)
    chir = float(cutoff_eval(spec, w.r_inner ** (2 * w.s), 0))
    mg["chi_R_at_r_inner"] = chir
    ck["chi_R_saturated"] = chir >= 1 - rtol
    return cert
