"""Eigenvalues, smallest singular values and coercivity scans of sector operators.

All norms are the weighted L^2(r^(d-1) dr) norm of the grid.  A matrix A
acting on nodal values is measured through ``W^(1/2) A W^(-1/2)``, which is
again tridiagonal.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ArgumentError, NumericalError
from .operator import SectorOperator

BOUNDARY_FRACTION = 0.05
BOUNDARY_MASS_LIMIT = 0.01
# below this relative level the banded normal-matrix route loses digits
BANDED_FLOOR = 1e-6


def ess_line(s, beta):
    """Imaginary part of the essential-spectrum line of the distorted operator.

    The s < 1 value tends to 0 as s -> 1, while s = 1 gives -beta: the line
    jumps at s = 1.
    """
    if not beta > 0:
        raise ArgumentError("beta must be positive")
    if not 0 < s <= 1:
        raise ArgumentError("s must lie in (0, 1]")
    return -beta if s == 1 else -(1 - s) * beta


def boundary_mask(op: SectorOperator, fraction=BOUNDARY_FRACTION):
    g = op.grid
    return op.nodes > g.r_max - fraction * (g.r_max - g.r_min)


@dataclass
class EigenTable:
    values: np.ndarray
    boundary_mass: np.ndarray

    def __len__(self):
        return len(self.values)

    def interior(self, limit=BOUNDARY_MASS_LIMIT):
        """Mask of eigenvalues whose vectors are not boundary artifacts."""
        return self.boundary_mass <= limit

    def in_box(self, re_range, im_range, interior_only=True, limit=BOUNDARY_MASS_LIMIT):
        v = self.values
        keep = (
            (v.real >= re_range[0])
            & (v.real <= re_range[1])
            & (v.imag >= im_range[0])
            & (v.imag <= im_range[1])
        )
        if interior_only:
            keep &= self.interior(limit)
        return v[keep]

    def to_records(self):
        return [
            {"value_re": float(z.real), "value_im": float(z.imag), "boundary_mass": float(b)}
            for z, b in zip(self.values, self.boundary_mass)
        ]


def eigenvalues(op: SectorOperator, vectors=True) -> EigenTable:
    """All eigenvalues of the sector matrix, with boundary-mass fractions."""
    if op.size > 4000:
        raise ArgumentError("dense eigensolve limited to 4000 unknowns")
    try:
        if vectors:
            vals, vecs = sla.eig(op.dense())
        else:
            vals, vecs = sla.eigvals(op.dense()), None
    except sla.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise NumericalError("eigensolver returned non-finite values")
    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    if vecs is None:
        mass = np.full(len(vals), np.nan)
    else:
        dens = op.weights[:, None] * np.abs(vecs[:, order]) ** 2
        outer = boundary_mask(op)
        mass = dens[outer].sum(axis=0) / dens.sum(axis=0)
    return EigenTable(vals, mass)


def weighted_matrix(op: SectorOperator):
    sw = np.sqrt(op.weights)
    return (sp.diags(sw) @ op.matrix @ sp.diags(1 / sw)).tocsr()


def _smin_svd(dense_w, z):
    try:
        sv = sla.svdvals(dense_w - z * np.eye(dense_w.shape[0]))
    except sla.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    return float(sv.min())


def _smin_banded(mw, z):
    """sigma_min from the lowest eigenvalue of the pentadiagonal (A-z)^H (A-z)."""
    n = mw.shape[0]
    b = (mw - z * sp.eye(n, format="csr")).tocsc()
    nm = (b.conj().T @ b).todia()
    ab = np.zeros((3, n), dtype=complex)
    for k in range(3):
        ab[2 - k, k:] = nm.diagonal(k)
    try:
        lam = sla.eigvals_banded(ab, lower=False, select="i", select_range=(0, 0))
    except sla.LinAlgError as exc:
        raise NumericalError(f"banded eigensolver failed: {exc}") from exc
    return float(np.sqrt(max(lam[0], 0.0)))


def _scale(mw):
    return float(abs(mw).sum(axis=1).max())


def sigma_min(op: SectorOperator, z, method="svd"):
    """Smallest singular value of ``op - z`` in the weighted norm.

    ``method="svd"`` is a dense SVD.  ``"banded"`` takes the lowest
    eigenvalue of the banded normal matrix and falls back to the dense SVD
    when the result is too small to trust.
    """
    mw = weighted_matrix(op)
    if method == "svd":
        return _smin_svd(mw.toarray(), complex(z))
    if method != "banded":
        raise ArgumentError(f"unknown sigma_min method {method!r}")
    val = _smin_banded(mw, complex(z))
    if val < BANDED_FLOOR * _scale(mw):
        val = _smin_svd(mw.toarray(), complex(z))
    return val


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_re: int = 21
    n_im: int = 11

    def __post_init__(self):
        if self.re_max < self.re_min or self.im_max < self.im_min:
            raise ArgumentError("rectangle bounds are inverted")
        if self.n_re < 1 or self.n_im < 1:
            raise ArgumentError("rectangle needs at least one point per axis")

    @classmethod
    def around(cls, center, half_re, half_im, n_re=21, n_im=11):
        c = complex(center)
        return cls(c.real - half_re, c.real + half_re, c.imag - half_im, c.imag + half_im, n_re, n_im)

    @property
    def re(self):
        return np.linspace(self.re_min, self.re_max, self.n_re)

    @property
    def im(self):
        return np.linspace(self.im_min, self.im_max, self.n_im)

    def points(self):
        """Grid points, imaginary part varying slowest."""
        re, im = np.meshgrid(self.re, self.im)
        return (re + 1j * im).ravel()

    def to_dict(self):
        return {
            "re_min": self.re_min,
            "re_max": self.re_max,
            "im_min": self.im_min,
            "im_max": self.im_max,
            "n_re": self.n_re,
            "n_im": self.n_im,
        }


@dataclass
class SpectralScan:
    rect: Rectangle
    sigma: np.ndarray  # shape (n_im, n_re)
    eigen: EigenTable | None = None
    meta: dict = field(default_factory=dict)

    @property
    def min_sigma(self):
        return float(self.sigma.min())

    @property
    def argmin(self):
        i, j = np.unravel_index(np.argmin(self.sigma), self.sigma.shape)
        return complex(self.rect.re[j], self.rect.im[i])

    def rows(self):
        z = self.rect.points()
        return [(float(w.real), float(w.imag), float(v)) for w, v in zip(z, self.sigma.ravel())]

    def line_dip(self, line):
        """Ratio of the largest sigma to the smallest sigma on the row nearest ``line``."""
        im = self.rect.im
        k = int(np.argmin(np.abs(im - line)))
        low = float(self.sigma[k].min())
        top = float(self.sigma.max())
        return np.inf if low == 0 else top / low

    def crosses(self, line):
        return self.rect.im_min <= line <= self.rect.im_max

    def summary(self):
        z = self.argmin
        return {"min_sigma": self.min_sigma, "argmin_re": z.real, "argmin_im": z.imag}


def coercivity_scan(
    op: SectorOperator,
    rect: Rectangle,
    with_eigenvalues=True,
    method="banded",
    threads=1,
) -> SpectralScan:
    """sigma_min of ``op - z`` over the rectangle's grid.

    Points are independent; with ``threads > 1`` they are evaluated by a
    thread pool and written back by index, so results do not depend on the
    thread count.
    """
    if method not in ("svd", "banded"):
        raise ArgumentError(f"unknown sigma_min method {method!r}")
    mw = weighted_matrix(op)
    dense = mw.toarray() if method == "svd" else None
    floor = BANDED_FLOOR * _scale(mw)

    def one(z):
        if dense is not None:
            return _smin_svd(dense, z)
        v = _smin_banded(mw, z)
        return _smin_svd(mw.toarray(), z) if v < floor else v

    pts = rect.points()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(one, pts))
    else:
        vals = [one(z) for z in pts]
    sigma = np.asarray(vals).reshape(rect.n_im, rect.n_re)
    eig = eigenvalues(op) if with_eigenvalues else None
    meta = {"grid": op.grid.to_dict(), "ell": op.ell, **op.params.to_dict()}
    return SpectralScan(rect, sigma, eig, meta)
