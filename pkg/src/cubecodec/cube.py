"""Spectral cube data model, the SCUB on-disk container, and synthetic cubes.

A :class:`SpectralCube` is an immutable H x W x N stack of spectral samples
stored band-major (one contiguous spatial plane per band) together with a
strictly increasing wavelength axis in nanometers.  The SCUB container is the
bit-exact serialization of that model:

    magic "SCUB" | version u8=1 | dtype u8=1 (f32) | reserved u16=0 |
    width u32 | height u32 | bands u32 |
    wavelengths f32 x N | samples f32 x (H*W*N), band-major

everything little-endian, 20 + 4*N + 4*H*W*N bytes total.  Samples are
float32 both on disk and in memory, which is what makes write/read round
trips bit-exact for every valid cube.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, CorruptError, FormatError, ValidationError

SCUB_MAGIC = b"SCUB"
SCUB_VERSION = 1
SCUB_DTYPE_F32 = 1

_HEADER = struct.Struct("<4sBBHIII")

#: patterns understood by :func:`synthesize_cube`
PATTERNS = ("flat", "ramp", "gaussian-spectra", "random-smooth")


def scub_nbytes(width: int, height: int, bands: int) -> int:
    """Serialized SCUB size in bytes for the given dimensions."""
    return _HEADER.size + 4 * bands + 4 * width * height * bands


@dataclass(frozen=True, eq=False)
class SpectralCube:
    """Immutable spectral image: ``samples[b, y, x]`` is band ``b`` at pixel (x, y)."""

    width: int
    height: int
    bands: int
    wavelengths: np.ndarray  # (bands,) float32, nm, strictly increasing
    samples: np.ndarray  # (bands, height, width) float32, finite

    def __post_init__(self):
        for name in ("width", "height", "bands"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValidationError(f"{name} must be an integer >= 1, got {v!r}")
        wl = np.ascontiguousarray(self.wavelengths, dtype=np.float32)
        if wl.shape != (self.bands,):
            raise ValidationError(
                f"wavelengths has shape {wl.shape}, expected ({self.bands},)"
            )
        if not np.all(np.isfinite(wl)):
            raise ValidationError("wavelengths contain non-finite values")
        if self.bands > 1 and not np.all(np.diff(wl) > 0):
            raise ValidationError("wavelengths must be strictly increasing")
        s = np.ascontiguousarray(self.samples, dtype=np.float32)
        if s.shape != (self.bands, self.height, self.width):
            raise ValidationError(
                f"samples has shape {s.shape}, expected "
                f"({self.bands}, {self.height}, {self.width})"
            )
        if not np.all(np.isfinite(s)):
            raise ValidationError("samples contain non-finite values")
        wl.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "samples", s)

    # cubes are value objects; equality is bit-exact
    def __eq__(self, other) -> bool:
        if not isinstance(other, SpectralCube):
            return NotImplemented
        return (
            (self.width, self.height, self.bands)
            == (other.width, other.height, other.bands)
            and np.array_equal(self.wavelengths, other.wavelengths)
            and np.array_equal(self.samples, other.samples)
        )

    def plane(self, band: int) -> np.ndarray:
        """Read-only (H, W) view of one band."""
        return self.samples[band]

    def pixel_matrix(self) -> np.ndarray:
        """Read-only (H*W, bands) view: one spectrum per row, raster order."""
        return self.samples.reshape(self.bands, -1).T

    @property
    def scub_size(self) -> int:
        """Byte size of this cube's SCUB serialization."""
        return scub_nbytes(self.width, self.height, self.bands)


def write_cube(cube: SpectralCube) -> bytes:
    """Serialize a cube to SCUB bytes (deterministic, bit-exact round trip)."""
    if not isinstance(cube, SpectralCube):
        raise ValidationError("write_cube expects a SpectralCube")
    header = _HEADER.pack(
        SCUB_MAGIC, SCUB_VERSION, SCUB_DTYPE_F32, 0,
        cube.width, cube.height, cube.bands,
    )
    wl = np.ascontiguousarray(cube.wavelengths, dtype="<f4")
    s = np.ascontiguousarray(cube.samples, dtype="<f4")
    return header + wl.tobytes() + s.tobytes()


def read_cube(data: bytes) -> SpectralCube:
    """Parse SCUB bytes; the exact inverse of :func:`write_cube`."""
    if len(data) < _HEADER.size:
        raise CorruptError(f"SCUB truncated: {len(data)} bytes < {_HEADER.size} header")
    magic, version, dtype, reserved, width, height, bands = _HEADER.unpack_from(data, 0)
    if magic != SCUB_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {SCUB_MAGIC!r}")
    if version != SCUB_VERSION:
        raise FormatError(f"unsupported SCUB version {version}")
    if dtype != SCUB_DTYPE_F32:
        raise FormatError(f"unsupported dtype tag {dtype}")
    if reserved != 0:
        raise FormatError(f"reserved field must be 0, got {reserved}")
    if min(width, height, bands) < 1:
        raise CorruptError(f"non-positive dimensions {(width, height, bands)}")
    expected = scub_nbytes(width, height, bands)
    if len(data) != expected:
        raise CorruptError(f"SCUB length {len(data)} != expected {expected}")
    off = _HEADER.size
    wavelengths = np.frombuffer(data, dtype="<f4", count=bands, offset=off)
    off += 4 * bands
    samples = np.frombuffer(data, dtype="<f4", count=width * height * bands, offset=off)
    return SpectralCube(
        width=width,
        height=height,
        bands=bands,
        wavelengths=wavelengths.copy(),
        samples=samples.reshape(bands, height, width).copy(),
    )


def default_wavelengths(bands: int) -> np.ndarray:
    """Default grid for synthesized cubes: 400-700 nm; 10 nm steps at N=31."""
    if bands == 1:
        wl = np.array([550.0])
    else:
        wl = np.linspace(400.0, 700.0, bands)
    return wl.astype(np.float32)


def _bilinear_upsample(lattice: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear interpolation of a coarse (gh, gw) lattice onto (height, width)."""
    gh, gw = lattice.shape
    ys = np.linspace(0.0, gh - 1.0, height)
    xs = np.linspace(0.0, gw - 1.0, width)
    y0 = np.minimum(ys.astype(int), gh - 2) if gh > 1 else np.zeros(height, int)
    x0 = np.minimum(xs.astype(int), gw - 2) if gw > 1 else np.zeros(width, int)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    y1 = np.minimum(y0 + 1, gh - 1)
    x1 = np.minimum(x0 + 1, gw - 1)
    a = lattice[np.ix_(y0, x0)]
    b = lattice[np.ix_(y0, x1)]
    c = lattice[np.ix_(y1, x0)]
    d = lattice[np.ix_(y1, x1)]
    return (a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx
            + c * fy * (1 - fx) + d * fy * fx)


def smooth_field(rng: np.random.Generator, height: int, width: int,
                 lo: float, hi: float, cells: int = 4) -> np.ndarray:
    """Spatially smooth random field in [lo, hi], from a coarse random lattice."""
    lattice = rng.standard_normal((cells + 1, cells + 1))
    f = _bilinear_upsample(lattice, height, width)
    fmin, fmax = f.min(), f.max()
    if fmax - fmin < 1e-12:
        return np.full((height, width), 0.5 * (lo + hi))
    return lo + (hi - lo) * (f - fmin) / (fmax - fmin)


def _synth_flat(rng, width, height, bands):
    return np.full((bands, height, width), 0.5)


def _synth_ramp(rng, width, height, bands):
    sx = np.arange(width) / max(width - 1, 1)
    sy = np.arange(height) / max(height - 1, 1)
    sb = np.arange(bands) / max(bands - 1, 1)
    return (sb[:, None, None] + sy[None, :, None] + sx[None, None, :]) / 3.0


def _synth_gaussian(rng, width, height, bands):
    wl = default_wavelengths(bands).astype(np.float64)
    mu = smooth_field(rng, height, width, 430.0, 670.0)
    sigma = smooth_field(rng, height, width, 18.0, 60.0)
    amp = smooth_field(rng, height, width, 0.3, 0.9)
    lam = wl[:, None, None]
    return 0.05 + amp[None] * np.exp(-0.5 * ((lam - mu[None]) / sigma[None]) ** 2)


def _synth_random_smooth(rng, width, height, bands):
    # Anchor values every <= 6 bands in [0.25, 0.75]; linear interpolation
    # between anchors bounds every band-to-band step by 0.5/6 < 0.1.
    n_anchors = max(2, math.ceil((bands - 1) / 6) + 1) if bands > 1 else 1
    anchors = np.stack(
        [smooth_field(rng, height, width, 0.25, 0.75, cells=3) for _ in range(n_anchors)]
    )  # (A, H, W)
    if bands == 1:
        return anchors[:1]
    pos = np.linspace(0.0, bands - 1.0, n_anchors)
    grid = np.arange(bands, dtype=np.float64)
    seg = np.clip(np.searchsorted(pos, grid, side="right") - 1, 0, n_anchors - 2)
    t = (grid - pos[seg]) / (pos[seg + 1] - pos[seg])
    return (1 - t)[:, None, None] * anchors[seg] + t[:, None, None] * anchors[seg + 1]


_GENERATORS = {
    "flat": _synth_flat,
    "ramp": _synth_ramp,
    "gaussian-spectra": _synth_gaussian,
    "random-smooth": _synth_random_smooth,
}


def synthesize_cube(width: int, height: int, bands: int,
                    pattern: str, seed: int = 0) -> SpectralCube:
    """Deterministic test cube with values in [0, 1].

    ``random-smooth`` guarantees per-pixel spectra with band-to-band steps
    <= 0.1, which makes them well suited to spline-based reduction.
    """
    if min(width, height, bands) < 1:
        raise ArgumentError(f"dimensions must be >= 1, got {(width, height, bands)}")
    try:
        gen = _GENERATORS[pattern]
    except KeyError:
        raise ArgumentError(
            f"unknown pattern {pattern!r}; expected one of {PATTERNS}"
        ) from None
    rng = np.random.default_rng(seed)
    values = np.clip(gen(rng, width, height, bands), 0.0, 1.0)
    return SpectralCube(
        width=width, height=height, bands=bands,
        wavelengths=default_wavelengths(bands),
        samples=values.astype(np.float32),
    )
