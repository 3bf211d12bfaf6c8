"""Classical counterpart: escape function, Poisson bracket and trajectories.

With ``h = xi^2/2 - |x|^(2s)/2 + q(|x|)`` and ``a = grad g . xi`` the bracket
``{h, a}`` restricted to the energy shell and to radial phase points is the
left side of the virial condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .potential import PotentialModel, q_eval


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        xi = np.asarray(self.xi, dtype=float).ravel()
        if x.shape != xi.shape:
            raise ArgumentError("x and xi must have the same length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise ArgumentError("phase point must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @classmethod
    def radial(cls, r, xi_r, d=3):
        x = np.zeros(d)
        xi = np.zeros(d)
        x[0], xi[0] = r, xi_r
        return cls(x, xi)

    @classmethod
    def on_shell(cls, m: PotentialModel, E, r, d=3, outgoing=True):
        """Radial point at radius r on the shell h = E."""
        k = 2 * (E - q_eval(m, r)) + r ** (2 * m.s)
        if k < 0:
            raise ArgumentError(f"no radial momentum on the shell at r={r}")
        return cls.radial(r, np.sqrt(k) if outgoing else -np.sqrt(k), d)

    @property
    def r(self):
        return float(np.linalg.norm(self.x))


def escape_g(s, r, order=0):
    """Escape function g(r) or its first two radial derivatives."""
    if not 0 < s <= 1:
        raise ArgumentError("s must lie in (0, 1]")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ArgumentError("escape function needs r > 0")
    if s < 1:
        vals = (r ** (2 - 2 * s) / (2 * (1 - s)), r ** (1 - 2 * s), (1 - 2 * s) * r ** (-2 * s))
    else:
        lr = np.log(r)
        vals = (0.5 * lr**2, lr / r, (1 - lr) / r**2)
    if order not in (0, 1, 2):
        raise ArgumentError("order must be 0, 1 or 2")
    out = vals[order]
    return float(out) if out.ndim == 0 else out


def _check(m, s):
    if m.s != s:
        raise ArgumentError(f"potential exponent s={m.s} differs from s={s}")


def hamiltonian(m: PotentialModel, point: PhasePoint):
    r = point.r
    return 0.5 * float(point.xi @ point.xi) - 0.5 * r ** (2 * m.s) + q_eval(m, r)


def conjugate_symbol(s, point: PhasePoint):
    """a = grad g . xi."""
    r = point.r
    return escape_g(s, r, 1) * float(point.x @ point.xi) / r


def _force_radial(m, r):
    """-dh/dr for the potential part, with the r -> 0 singularity of s < 1/2 cut off."""
    if r == 0:
        return 0.0
    return m.s * r ** (2 * m.s - 1) - q_eval(m, r, 1)


def poisson_bracket(m: PotentialModel, s, point: PhasePoint):
    """{h, a} at any phase point with r > 0 (no shell restriction)."""
    _check(m, s)
    r = point.r
    if r <= 0:
        raise ArgumentError("bracket needs r > 0")
    g1 = escape_g(s, r, 1)
    g2 = escape_g(s, r, 2)
    G = g1 / r
    dG = (g2 - G) / r
    xx = float(point.x @ point.xi)
    kin = dG * xx**2 / r + G * float(point.xi @ point.xi)
    return kin + _force_radial(m, r) * g1


def poisson_bracket_on_shell(m: PotentialModel, s, E, point: PhasePoint, tol=1e-9):
    """{h, a} at a point of the energy shell h = E."""
    _check(m, s)
    if abs(hamiltonian(m, point) - E) >= tol:
        raise ArgumentError("phase point is not on the energy shell")
    return poisson_bracket(m, s, point)


def radial_bracket_on_shell(m: PotentialModel, s, E, r):
    """Radial bracket ``g'' xi_r^2 + (s r^(2s-1) - q') g'`` with xi_r^2 from h = E.

    ``xi_r^2 = 2(E - q) + r^(2s)`` is substituted algebraically, so the value
    is defined in the classically forbidden region as well.
    """
    _check(m, s)
    r = np.asarray(r, dtype=float)
    xi2 = 2 * (E - q_eval(m, r)) + r ** (2 * s)
    force = s * r ** (2 * s - 1) - q_eval(m, r, 1)
    return escape_g(s, r, 2) * xi2 + force * escape_g(s, r, 1)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    r: np.ndarray
    g: np.ndarray
    h: np.ndarray
    truncated: bool = False

    def energy_drift(self):
        h0 = self.h[0]
        scale = abs(h0) if h0 != 0 else 1.0
        return float(np.max(np.abs(self.h - h0)) / scale)

    def rows(self):
        return list(zip(self.t.tolist(), self.r.tolist(), self.g.tolist(), self.h.tolist()))


def _rhs(m, y, d):
    x, xi = y[:d], y[d:]
    r = np.linalg.norm(x)
    f = _force_radial(m, r)
    acc = f * x / r if r > 0 else np.zeros(d)
    return np.concatenate([xi, acc])


def integrate_trajectory(m: PotentialModel, s, point: PhasePoint, t_max, dt=1e-3, every=1, r_cap=1e150):
    """Classical RK4 integration of Hamilton's equations.

    Stops early, with ``truncated=True``, if the state leaves the float range
    (r above ``r_cap`` or non-finite values).
    """
    _check(m, s)
    if not dt > 0:
        raise ArgumentError("dt must be positive")
    if not t_max > 0:
        raise ArgumentError("t_max must be positive")
    d = len(point.x)
    y = np.concatenate([point.x, point.xi])
    steps = int(np.ceil(t_max / dt - 1e-9))
    ts, ys = [0.0], [y.copy()]
    truncated = False
    for k in range(1, steps + 1):
        k1 = _rhs(m, y, d)
        k2 = _rhs(m, y + 0.5 * dt * k1, d)
        k3 = _rhs(m, y + 0.5 * dt * k2, d)
        k4 = _rhs(m, y + dt * k3, d)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.linalg.norm(y[:d]) > r_cap:
            truncated = True
            break
        if k % every == 0 or k == steps:
            ts.append(k * dt)
            ys.append(y.copy())
    ys = np.array(ys)
    xs, xis = ys[:, :d], ys[:, d:]
    r = np.linalg.norm(xs, axis=1)
    with np.errstate(divide="ignore"):
        g = np.where(r > 0, escape_g(s, np.where(r > 0, r, 1.0)), np.nan)
    h = 0.5 * np.sum(xis**2, axis=1) - 0.5 * r ** (2 * m.s) + q_eval(m, r)
    return Trajectory(np.array(ts), xs, xis, r, np.asarray(g, dtype=float), h, truncated)
