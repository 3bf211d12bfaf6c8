"""Finite-difference discretization of the distorted radial Hamiltonian.

One angular-momentum sector acts on functions of r in the weighted space
L^2(r^(d-1) dr).  Every second-order operator is reduced to coefficients
``(a2, a1, a0)`` of ``a2 u'' + a1 u' + a0 u`` and discretized with the
same three-point central stencil, Dirichlet at both ends.  The unknowns are
the interior nodes only, so matrices have size ``n - 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .distortion import DistortionParams, distortion_jet, phi_from_jet
from .errors import ArgumentError
from .potential import PotentialModel, q_theta_eval

METHODS = ("raw", "expanded")


@dataclass(frozen=True)
class RadialGrid:
    r_min: float
    r_max: float
    n: int
    d: int = 3

    def __post_init__(self):
        if not self.r_min > 0:
            raise ArgumentError("r_min must be positive")
        if not self.r_max > self.r_min:
            raise ArgumentError("r_max must exceed r_min")
        if int(self.n) != self.n or self.n < 16:
            raise ArgumentError("grid needs at least 16 points")
        if int(self.d) != self.d or self.d < 2:
            raise ArgumentError("dimension d must be an integer >= 2")

    @property
    def h(self):
        return (self.r_max - self.r_min) / (self.n - 1)

    @property
    def nodes(self):
        return np.linspace(self.r_min, self.r_max, self.n)

    @property
    def weights(self):
        """Trapezoid weights for the measure r^(d-1) dr."""
        w = self.nodes ** (self.d - 1) * self.h
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def interior(self):
        return self.nodes[1:-1]

    @property
    def interior_weights(self):
        return self.weights[1:-1]

    def to_dict(self):
        return {"r_min": self.r_min, "r_max": self.r_max, "n": self.n, "d": self.d}


def angular_eigenvalue(ell, d):
    if int(ell) != ell or ell < 0:
        raise ArgumentError("ell must be a non-negative integer")
    if d < 2:
        raise ArgumentError("d must be >= 2")
    return float(ell * (ell + d - 2))


def raw_coefficients(r, rt, rt1, rt2, rt3, d, lam):
    """Coefficients of the factored conjugated Laplacian.

    The factored operator is expanded by the Leibniz rule with
    ``p = 1/r_theta'`` and ``w = J**(-1/2)``; only the logarithmic
    derivatives of J enter, built from r_theta and its derivatives.  Uses
    plain arithmetic, so it works for numpy arrays and mpmath scalars alike.
    """
    p = 1 / rt1
    dp = -rt2 * p * p
    e = (rt1 * r - rt) / (rt * r)  # r_theta'/r_theta - 1/r
    lj1 = (d - 1) * e + rt2 * p
    lj2 = (d - 1) * (rt2 / rt - e * (rt1 / rt + 1 / r)) + rt3 * p - (rt2 * p) ** 2
    w1 = -0.5 * lj1  # w'/w
    w2 = w1 * w1 - 0.5 * lj2  # w''/w
    a2 = -p * p
    g = (d - 1) * p / rt
    a1 = -p * (2 * p * w1 + dp) - g
    a0 = -p * (dp * w1 + p * w2) - g * w1 + lam / (rt * rt)
    return a2, a1, a0


def expanded_coefficients(jet, d, lam):
    """Coefficients of the expanded form divided by ``r_theta'**2``."""
    r, rt, rt1, rt2 = jet.r, jet.rt, jet.rt1, jet.rt2
    inv = 1 / (rt1 * rt1)
    ratio = np.exp(jet.log_ratio)
    drift = jet.J1 / jet.J + rt2 / rt1 - (d - 1) * (rt1 / ratio - 1) / r
    a2 = -inv
    a1 = inv * (drift - (d - 1) / r)
    a0 = inv * phi_from_jet(jet, d) + lam / (rt * rt)
    return a2, a1, a0


def stencil_matrix(a2, a1, a0, h):
    """Tridiagonal matrix of ``a2 D2 + a1 D1 + a0`` on interior nodes."""
    a2, a1, a0 = (np.asarray(a, dtype=complex) for a in (a2, a1, a0))

    def part(f):
        # real and imaginary parts separately: complex / float would go
        # through a reciprocal and lose bit-exactness of real stencils
        return f(a2.real, a1.real, a0.real) + 1j * f(a2.imag, a1.imag, a0.imag)

    lo = part(lambda c2, c1, c0: c2 / h**2 - c1 / (2 * h))
    up = part(lambda c2, c1, c0: c2 / h**2 + c1 / (2 * h))
    diag = part(lambda c2, c1, c0: -2 * c2 / h**2 + c0)
    return sp.diags([lo[1:], diag, up[:-1]], [-1, 0, 1], format="csr")


def _coefficients(grid, ell, p, method):
    if method not in METHODS:
        raise ArgumentError(f"method must be one of {METHODS}, got {method!r}")
    if p.d != grid.d:
        raise ArgumentError(f"grid dimension {grid.d} differs from distortion dimension {p.d}")
    lam = angular_eigenvalue(ell, grid.d)
    jet = distortion_jet(p, grid.interior)
    if method == "raw":
        coef = raw_coefficients(jet.r, jet.rt, jet.rt1, jet.rt2, jet.rt3, grid.d, lam)
    else:
        coef = expanded_coefficients(jet, grid.d, lam)
    # rows where the map is the identity get the undistorted real stencil
    r = jet.r
    idle = (jet.rt == r) & (jet.rt1 == 1) & (jet.rt2 == 0) & (jet.rt3 == 0)
    plain = (-np.ones_like(r), -(grid.d - 1) / r, lam / (r * r))
    coef = tuple(np.where(idle, b, a) for a, b in zip(coef, plain))
    return coef, jet


def assemble_conjugated_laplacian(grid: RadialGrid, ell, p: DistortionParams, method="raw"):
    """Sparse matrix of the distorted radial Laplacian (interior unknowns)."""
    (a2, a1, a0), _ = _coefficients(grid, ell, p, method)
    return stencil_matrix(a2, a1, a0, grid.h)


@dataclass(frozen=True)
class OperatorParams:
    hbar: float
    distortion: DistortionParams
    model: PotentialModel
    method: str = "raw"

    @property
    def theta(self):
        return self.distortion.theta

    @property
    def s(self):
        return self.distortion.s

    @property
    def beta(self):
        return float(np.imag(self.distortion.theta))

    def to_dict(self):
        th = complex(self.distortion.theta)
        return {
            "hbar": self.hbar,
            "s": self.s,
            "theta_re": th.real,
            "theta_im": th.imag,
            "R": self.distortion.R,
            "potential": self.model.family,
            "kappa": self.model.kappa,
            "rho": self.model.rho,
            "method": self.method,
        }


@dataclass(frozen=True)
class SectorOperator:
    grid: RadialGrid
    ell: int
    lambda_ell: float
    matrix: sp.csr_matrix = field(repr=False)
    params: OperatorParams
    potential_diag: np.ndarray = field(repr=False, default=None)

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def nodes(self):
        return self.grid.interior

    @property
    def weights(self):
        return self.grid.interior_weights

    def dense(self):
        return self.matrix.toarray()

    def weighted_dense(self):
        """Matrix in an orthonormal basis of the weighted space."""
        sw = np.sqrt(self.weights)
        return (sw[:, None] * self.dense()) / sw[None, :]

    def apply(self, u):
        return self.matrix @ np.asarray(u, dtype=complex)

    def inner(self, u, v):
        return np.sum(self.weights * np.conj(u) * v)

    def norm(self, u):
        return float(np.sqrt(np.real(self.inner(u, u))))


def assemble_h_theta(
    grid: RadialGrid,
    ell,
    p: DistortionParams,
    m: PotentialModel,
    hbar,
    method="raw",
) -> SectorOperator:
    if not hbar > 0:
        raise ArgumentError("hbar must be positive")
    if m.s != p.s:
        raise ArgumentError(f"potential exponent s={m.s} differs from distortion s={p.s}")
    (a2, a1, a0), jet = _coefficients(grid, ell, p, method)
    k = 0.5 * hbar**2
    pot = -0.5 * jet.u
    if not m.is_zero:
        pot = pot + q_theta_eval(m, p, jet.r)
    mat = stencil_matrix(k * a2, k * a1, k * a0 + pot, grid.h)
    params = OperatorParams(hbar=float(hbar), distortion=p, model=m, method=method)
    lam = angular_eigenvalue(ell, grid.d)
    return SectorOperator(grid, int(ell), lam, mat, params, np.asarray(pot))

