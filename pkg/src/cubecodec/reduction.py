"""Spectral-dimension reduction: PCA/KLT and cubic-spline band subsampling.

Both reducers turn an N-band cube into P spatial planes plus the side
information a decoder needs to invert the reduction: the band-mean vector
and the N x P eigenvector basis for PCA, or the retained band indices for
the spline method (knots are uniform in band index, endpoints always
included, so reconstruction never extrapolates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import SpectralCube
from .errors import ArgumentError, NumericalError, ValidationError
from .spline import natural_cubic_spline

ORTHONORMALITY_TOL = 1e-9


@dataclass(eq=False)
class PcaSideInfo:
    """Decoder-side PCA metadata: band means, basis columns, eigenvalues."""

    mean: np.ndarray  # (N,) float64
    basis: np.ndarray  # (N, P) float64, orthonormal columns
    eigenvalues: np.ndarray  # (P,) float64, non-increasing

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.basis = np.asarray(self.basis, dtype=np.float64)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        if self.mean.ndim != 1 or self.basis.ndim != 2:
            raise ValidationError("mean must be 1-D and basis 2-D")
        n, p = self.basis.shape
        if self.mean.shape != (n,) or self.eigenvalues.shape != (p,):
            raise ValidationError("side-info shapes are inconsistent")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.basis))
                and np.all(np.isfinite(self.eigenvalues))):
            raise ValidationError("side info contains non-finite values")
        if np.any(np.diff(self.eigenvalues) > 0):
            raise ValidationError("eigenvalues must be non-increasing")
        if np.any(self.eigenvalues < -1e-12):
            raise ValidationError("eigenvalues must be numerically nonnegative")

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def p(self) -> int:
        return self.basis.shape[1]

    def orthonormality_defect(self) -> float:
        """Max-norm of basis^T basis - I."""
        g = self.basis.T @ self.basis
        return float(np.abs(g - np.eye(self.p)).max())

    def check_orthonormal(self, tol: float = ORTHONORMALITY_TOL):
        d = self.orthonormality_defect()
        if d > tol:
            raise ValidationError(f"basis columns not orthonormal: defect {d:.3e} > {tol}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, PcaSideInfo):
            return NotImplemented
        return (np.array_equal(self.mean, other.mean)
                and np.array_equal(self.basis, other.basis)
                and np.array_equal(self.eigenvalues, other.eigenvalues))


@dataclass(eq=False)
class CsiSideInfo:
    """Decoder-side spline metadata: strictly increasing retained band indices."""

    knot_indices: np.ndarray  # (P,) int64, first 0, last N-1

    def __post_init__(self):
        k = np.asarray(self.knot_indices, dtype=np.int64)
        if k.ndim != 1 or k.shape[0] < 2:
            raise ValidationError("need at least two knot indices")
        if np.any(np.diff(k) <= 0):
            raise ValidationError("knot indices must be strictly increasing")
        if k[0] < 0:
            raise ValidationError("knot indices must be nonnegative")
        self.knot_indices = k

    @property
    def p(self) -> int:
        return self.knot_indices.shape[0]

    def check_for_bands(self, n: int):
        if self.knot_indices[0] != 0 or self.knot_indices[-1] != n - 1:
            raise ArgumentError(
                f"knots must include both end bands 0 and {n - 1}, "
                f"got {self.knot_indices[0]}..{self.knot_indices[-1]}"
            )
        if self.p > n:
            raise ArgumentError(f"{self.p} knots for {n} bands")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CsiSideInfo):
            return NotImplemented
        return np.array_equal(self.knot_indices, other.knot_indices)


@dataclass(eq=False)
class ReducedPlanes:
    """P spatial planes produced by a spectral reducer."""

    width: int
    height: int
    planes: np.ndarray  # (P, height, width) float64

    def __post_init__(self):
        self.planes = np.asarray(self.planes, dtype=np.float64)
        if self.planes.ndim != 3 or self.planes.shape[0] < 1:
            raise ValidationError("planes must be a (P, H, W) array with P >= 1")
        if self.planes.shape[1:] != (self.height, self.width):
            raise ValidationError("plane shape disagrees with width/height")
        if not np.all(np.isfinite(self.planes)):
            raise ValidationError("planes contain non-finite values")

    @property
    def count(self) -> int:
        return self.planes.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReducedPlanes):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and np.array_equal(
            self.planes, other.planes
        )


def pca_fit(cube: SpectralCube, p: int) -> PcaSideInfo:
    """Fit the KLT basis of a cube's band covariance.

    The covariance is accumulated in float64 over all pixels (divisor
    H*W - 1); the returned basis holds eigenvectors of the p largest
    eigenvalues, sorted descending, each column sign-fixed so its
    largest-magnitude entry is positive.
    """
    n = cube.bands
    if not 1 <= p <= n:
        raise ArgumentError(f"p={p} outside [1, {n}]")
    npix = cube.width * cube.height
    if npix < 2:
        raise ArgumentError("PCA needs at least two pixels")
    x = cube.pixel_matrix().astype(np.float64)  # (HW, N)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (npix - 1)
    if not np.all(np.isfinite(cov)):
        raise NumericalError("covariance accumulation produced non-finite values")
    if not cov.any():
        # zero variance everywhere: deterministic canonical completion
        basis = np.eye(n)[:, :p]
        return PcaSideInfo(mean=mean, basis=basis, eigenvalues=np.zeros(p))
    w, v = np.linalg.eigh(cov)
    order = np.argsort(w, kind="stable")[::-1][:p]
    eigenvalues = np.maximum(w[order], 0.0)
    basis = v[:, order]
    # sign convention: largest-magnitude entry of each column positive
    pivot = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[pivot, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    basis = basis * signs
    return PcaSideInfo(mean=mean, basis=basis, eigenvalues=eigenvalues)


def pca_forward(cube: SpectralCube, side: PcaSideInfo) -> ReducedPlanes:
    """Project mean-centered spectra onto the basis: one plane per component."""
    if side.n != cube.bands:
        raise ArgumentError(f"side info is for {side.n} bands, cube has {cube.bands}")
    x = cube.pixel_matrix().astype(np.float64)
    scores = (x - side.mean) @ side.basis  # (HW, P)
    planes = scores.T.reshape(side.p, cube.height, cube.width)
    return ReducedPlanes(width=cube.width, height=cube.height, planes=planes)


def pca_inverse(planes: ReducedPlanes, side: PcaSideInfo, wavelengths,
                clamp: bool = False, clamp_max: float = 1.0) -> SpectralCube:
    """Reconstruct a cube from component planes: mean + basis @ scores.

    ``clamp`` limits output to [0, clamp_max]; it is off by default so that
    evaluation sees the raw reconstruction.
    """
    if planes.count != side.p:
        raise ArgumentError(f"{planes.count} planes for a {side.p}-column basis")
    wl = np.asarray(wavelengths)
    if wl.shape != (side.n,):
        raise ArgumentError(f"wavelengths shape {wl.shape} != ({side.n},)")
    scores = planes.planes.reshape(side.p, -1)  # (P, HW)
    recon = side.basis @ scores + side.mean[:, None]  # (N, HW)
    if clamp:
        np.clip(recon, 0.0, clamp_max, out=recon)
    return SpectralCube(
        width=planes.width, height=planes.height, bands=side.n,
        wavelengths=wl, samples=recon.reshape(side.n, planes.height, planes.width),
    )


def csi_select_knots(n: int, p: int) -> CsiSideInfo:
    """Uniform-in-band-index knots: round(k*(n-1)/(p-1)), endpoints included."""
    if not 2 <= p <= n:
        raise ArgumentError(f"p={p} outside [2, {n}]")
    k = np.arange(p, dtype=np.float64)
    idx = np.floor(k * (n - 1) / (p - 1) + 0.5).astype(np.int64)
    return CsiSideInfo(knot_indices=idx)


def csi_forward(cube: SpectralCube, side: CsiSideInfo) -> ReducedPlanes:
    """Retain the knot bands, copied unmodified."""
    side.check_for_bands(cube.bands)
    planes = cube.samples[side.knot_indices].astype(np.float64)
    return ReducedPlanes(width=cube.width, height=cube.height, planes=planes)


def csi_reconstruction_matrix(side: CsiSideInfo, wavelengths: np.ndarray) -> np.ndarray:
    """(N, P) matrix mapping knot-band values to all N bands.

    The natural spline is linear in its knot ordinates, so reconstruction is
    a fixed matrix for a given knot set: column j is the spline response to
    the j-th unit vector.  Rows at knot bands are exact unit rows, which
    keeps retained bands bit-exact through reconstruction.
    """
    wl = np.asarray(wavelengths, dtype=np.float64)
    knot_x = wl[side.knot_indices]
    return natural_cubic_spline(knot_x, np.eye(side.p), wl)


def csi_inverse(planes: ReducedPlanes, side: CsiSideInfo, wavelengths) -> SpectralCube:
    """Reconstruct all bands per pixel by natural-spline interpolation over knots."""
    if planes.count != side.p:
        raise ArgumentError(f"{planes.count} planes for {side.p} knots")
    wl = np.asarray(wavelengths, dtype=np.float64)
    n = wl.shape[0]
    side.check_for_bands(n)
    a = csi_reconstruction_matrix(side, wl)  # (N, P)
    recon = a @ planes.planes.reshape(side.p, -1)  # (N, HW)
    return SpectralCube(
        width=planes.width, height=planes.height, bands=n,
        wavelengths=np.asarray(wavelengths),
        samples=recon.reshape(n, planes.height, planes.width),
    )
