"""Colorimetric rendering and the CIEDE2000 color difference.

Spectra are rendered to CIE XYZ with the 1931 2-degree observer under
illuminant D65, both tabulated on the 400-700 nm grid at 10 nm steps (the
constants are compiled in; `cubecodec dump-constants` prints them for
audit).  Y is normalized so the perfect reflector scores exactly 100.
Lab conversion uses the standard cube-root/linear branch, and the color
difference implements the full CIEDE2000 formula with unit weighting
factors, including the hue-angle special cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import SpectralCube
from .errors import ArgumentError

# CIE 1931 2-degree standard observer, 400-700 nm at 10 nm.
_CMF_TABLE = np.array([
    # wavelength, xbar, ybar, zbar
    [400.0, 0.014310, 0.000396, 0.067850],
    [410.0, 0.043510, 0.001210, 0.207400],
    [420.0, 0.134380, 0.004000, 0.645600],
    [430.0, 0.283900, 0.011600, 1.385600],
    [440.0, 0.348280, 0.023000, 1.747060],
    [450.0, 0.336200, 0.038000, 1.772110],
    [460.0, 0.290800, 0.060000, 1.669200],
    [470.0, 0.195360, 0.090980, 1.287640],
    [480.0, 0.095640, 0.139020, 0.812950],
    [490.0, 0.032010, 0.208020, 0.465180],
    [500.0, 0.004900, 0.323000, 0.272000],
    [510.0, 0.009300, 0.503000, 0.158200],
    [520.0, 0.063270, 0.710000, 0.078250],
    [530.0, 0.165500, 0.862000, 0.042160],
    [540.0, 0.290400, 0.954000, 0.020300],
    [550.0, 0.433450, 0.994950, 0.008750],
    [560.0, 0.594500, 0.995000, 0.003900],
    [570.0, 0.762100, 0.952000, 0.002100],
    [580.0, 0.916300, 0.870000, 0.001650],
    [590.0, 1.026300, 0.757000, 0.001100],
    [600.0, 1.062200, 0.631000, 0.000800],
    [610.0, 1.002600, 0.503000, 0.000340],
    [620.0, 0.854450, 0.381000, 0.000190],
    [630.0, 0.642400, 0.265000, 0.000050],
    [640.0, 0.447900, 0.175000, 0.000020],
    [650.0, 0.283500, 0.107000, 0.000000],
    [660.0, 0.164900, 0.061000, 0.000000],
    [670.0, 0.087400, 0.032000, 0.000000],
    [680.0, 0.046770, 0.017000, 0.000000],
    [690.0, 0.022700, 0.008210, 0.000000],
    [700.0, 0.011359, 0.004102, 0.000000],
])

# CIE illuminant D65 relative spectral power, same grid.
_D65_POWER = np.array([
    82.7549, 91.4860, 93.4318, 86.6823, 104.8650, 117.0080, 117.8120,
    114.8610, 115.9230, 108.8110, 109.3540, 107.8020, 104.7900, 107.6890,
    104.4050, 104.0460, 100.0000, 96.3342, 95.7880, 88.6856, 90.0062,
    89.5991, 87.6987, 83.2886, 83.6992, 80.0268, 80.2146, 82.2778,
    78.2842, 69.7213, 71.6091,
])


@dataclass(frozen=True)
class ObserverTable:
    """Color matching functions on a common wavelength grid."""

    wavelengths: np.ndarray
    xbar: np.ndarray
    ybar: np.ndarray
    zbar: np.ndarray


@dataclass(frozen=True)
class Illuminant:
    """Relative spectral power distribution on the observer grid."""

    wavelengths: np.ndarray
    power: np.ndarray


@dataclass(frozen=True)
class XyzColor:
    X: float
    Y: float
    Z: float


@dataclass(frozen=True)
class LabColor:
    L: float
    a: float
    b: float


@dataclass(frozen=True)
class DeltaEStats:
    """Per-image CIEDE2000 statistics between two cubes."""

    mean: float
    max: float
    p95: float
    map: np.ndarray  # (H, W)


def cie_1931_observer() -> ObserverTable:
    t = _CMF_TABLE
    return ObserverTable(wavelengths=t[:, 0].copy(), xbar=t[:, 1].copy(),
                         ybar=t[:, 2].copy(), zbar=t[:, 3].copy())


def d65_illuminant() -> Illuminant:
    return Illuminant(wavelengths=_CMF_TABLE[:, 0].copy(), power=_D65_POWER.copy())


def _resample_to_observer(spectra: np.ndarray, wavelengths: np.ndarray,
                          observer: ObserverTable) -> np.ndarray:
    """Linear resampling of (..., N) spectra onto the observer grid."""
    wl = np.asarray(wavelengths, dtype=np.float64)
    ow = observer.wavelengths
    if wl.shape[-1] != spectra.shape[-1]:
        raise ArgumentError("spectrum and wavelength grid lengths differ")
    if np.array_equal(wl, ow):
        return spectra
    if wl[0] > ow[0] or wl[-1] < ow[-1]:
        raise ArgumentError(
            f"spectrum span [{wl[0]}, {wl[-1]}] does not cover observer span "
            f"[{ow[0]}, {ow[-1]}]"
        )
    if wl.shape[0] < 2:
        return np.repeat(spectra, ow.shape[0], axis=-1)
    idx = np.clip(np.searchsorted(wl, ow, side="right") - 1, 0, wl.shape[0] - 2)
    t = (ow - wl[idx]) / (wl[idx + 1] - wl[idx])
    return spectra[..., idx] * (1.0 - t) + spectra[..., idx + 1] * t


def _weights(observer: ObserverTable, illuminant: Illuminant) -> np.ndarray:
    if not np.array_equal(observer.wavelengths, illuminant.wavelengths):
        raise ArgumentError("observer and illuminant must share one grid")
    return np.stack([
        illuminant.power * observer.xbar,
        illuminant.power * observer.ybar,
        illuminant.power * observer.zbar,
    ], axis=1)  # (M, 3); the uniform grid step cancels in the Y normalization


def spectra_to_xyz(spectra: np.ndarray, wavelengths, observer: ObserverTable | None = None,
                   illuminant: Illuminant | None = None) -> np.ndarray:
    """Render (..., N) reflectance spectra to (..., 3) XYZ, Y in [0, 100]."""
    observer = observer or cie_1931_observer()
    illuminant = illuminant or d65_illuminant()
    spectra = np.asarray(spectra, dtype=np.float64)
    resampled = _resample_to_observer(spectra, wavelengths, observer)
    w = _weights(observer, illuminant)
    # normalizer computed through the identical matmul kernel, so the perfect
    # reflector renders to Y = 100 bit-exactly
    norm = float((np.ones((1, w.shape[0])) @ w)[0, 1])
    return 100.0 * ((resampled @ w) / norm)


def spectral_to_xyz(spectrum, wavelengths, observer: ObserverTable | None = None,
                    illuminant: Illuminant | None = None) -> XyzColor:
    """Render one reflectance spectrum; the perfect reflector gives Y = 100 exactly."""
    s = np.asarray(spectrum, dtype=np.float64)
    if s.ndim != 1:
        raise ArgumentError("spectral_to_xyz expects a single spectrum")
    xyz = spectra_to_xyz(s[None, :], wavelengths, observer, illuminant)[0]
    return XyzColor(X=float(xyz[0]), Y=float(xyz[1]), Z=float(xyz[2]))


_LAB_DELTA3 = (6.0 / 29.0) ** 3
_LAB_SLOPE = 1.0 / (3.0 * (6.0 / 29.0) ** 2)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _LAB_DELTA3, np.cbrt(t), _LAB_SLOPE * t + 4.0 / 29.0)


def xyz_array_to_lab(xyz: np.ndarray, white: XyzColor) -> np.ndarray:
    """(..., 3) XYZ -> (..., 3) Lab under the given reference white."""
    if not (white.X > 0 and white.Y > 0 and white.Z > 0):
        raise ArgumentError("reference white must have positive components")
    xyz = np.asarray(xyz, dtype=np.float64)
    fx = _lab_f(xyz[..., 0] / white.X)
    fy = _lab_f(xyz[..., 1] / white.Y)
    fz = _lab_f(xyz[..., 2] / white.Z)
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def xyz_to_lab(xyz: XyzColor, white: XyzColor) -> LabColor:
    lab = xyz_array_to_lab(np.array([xyz.X, xyz.Y, xyz.Z]), white)
    return LabColor(L=float(lab[0]), a=float(lab[1]), b=float(lab[2]))


_POW25_7 = 25.0 ** 7


def ciede2000_array(lab1: np.ndarray, lab2: np.ndarray) -> np.ndarray:
    """CIEDE2000 on (..., 3) Lab arrays with kL = kC = kH = 1."""
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    l1, a1, b1 = lab1[..., 0], lab1[..., 1], lab1[..., 2]
    l2, a2, b2 = lab2[..., 0], lab2[..., 1], lab2[..., 2]

    c1 = np.hypot(a1, b1)
    c2 = np.hypot(a2, b2)
    cbar = 0.5 * (c1 + c2)
    cbar7 = cbar ** 7
    g = 0.5 * (1.0 - np.sqrt(cbar7 / (cbar7 + _POW25_7)))
    a1p = (1.0 + g) * a1
    a2p = (1.0 + g) * a2
    c1p = np.hypot(a1p, b1)
    c2p = np.hypot(a2p, b2)
    h1p = np.mod(np.degrees(np.arctan2(b1, a1p)), 360.0)
    h2p = np.mod(np.degrees(np.arctan2(b2, a2p)), 360.0)

    dl = l2 - l1
    dc = c2p - c1p
    hdiff = h2p - h1p
    zero_chroma = c1p * c2p == 0.0
    dh = np.where(hdiff > 180.0, hdiff - 360.0, np.where(hdiff < -180.0, hdiff + 360.0, hdiff))
    dh = np.where(zero_chroma, 0.0, dh)
    dbig_h = 2.0 * np.sqrt(c1p * c2p) * np.sin(np.radians(dh) / 2.0)

    lbar = 0.5 * (l1 + l2)
    cbar_p = 0.5 * (c1p + c2p)
    hsum = h1p + h2p
    habs = np.abs(h1p - h2p)
    hbar = np.where(habs <= 180.0, 0.5 * hsum,
                    np.where(hsum < 360.0, 0.5 * (hsum + 360.0), 0.5 * (hsum - 360.0)))
    hbar = np.where(zero_chroma, hsum, hbar)

    t = (1.0
         - 0.17 * np.cos(np.radians(hbar - 30.0))
         + 0.24 * np.cos(np.radians(2.0 * hbar))
         + 0.32 * np.cos(np.radians(3.0 * hbar + 6.0))
         - 0.20 * np.cos(np.radians(4.0 * hbar - 63.0)))
    dtheta = 30.0 * np.exp(-(((hbar - 275.0) / 25.0) ** 2))
    cbar_p7 = cbar_p ** 7
    rc = 2.0 * np.sqrt(cbar_p7 / (cbar_p7 + _POW25_7))
    lterm = (lbar - 50.0) ** 2
    sl = 1.0 + 0.015 * lterm / np.sqrt(20.0 + lterm)
    sc = 1.0 + 0.045 * cbar_p
    sh = 1.0 + 0.015 * cbar_p * t
    rt = -np.sin(np.radians(2.0 * dtheta)) * rc

    x = dl / sl
    y = dc / sc
    z = dbig_h / sh
    return np.sqrt(x * x + y * y + z * z + rt * y * z)


def ciede2000(a: LabColor, b: LabColor) -> float:
    """CIEDE2000 between two Lab colors."""
    for c in (a, b):
        if not all(np.isfinite(v) for v in (c.L, c.a, c.b)):
            raise ArgumentError("Lab components must be finite")
    return float(ciede2000_array(np.array([a.L, a.a, a.b]), np.array([b.L, b.a, b.b])))


def cube_delta_e(original: SpectralCube, reconstructed: SpectralCube,
                 observer: ObserverTable | None = None,
                 illuminant: Illuminant | None = None) -> DeltaEStats:
    """Per-pixel CIEDE2000 between two cubes rendered under the same conditions."""
    if (original.width, original.height, original.bands) != (
            reconstructed.width, reconstructed.height, reconstructed.bands):
        raise ArgumentError("cubes have different dimensions")
    if not np.array_equal(original.wavelengths, reconstructed.wavelengths):
        raise ArgumentError("cubes have different wavelength grids")
    observer = observer or cie_1931_observer()
    illuminant = illuminant or d65_illuminant()
    wl = original.wavelengths.astype(np.float64)
    white = spectral_to_xyz(np.ones(observer.wavelengths.shape[0]),
                            observer.wavelengths, observer, illuminant)
    xyz_a = spectra_to_xyz(original.pixel_matrix(), wl, observer, illuminant)
    xyz_b = spectra_to_xyz(reconstructed.pixel_matrix(), wl, observer, illuminant)
    lab_a = xyz_array_to_lab(xyz_a, white)
    lab_b = xyz_array_to_lab(xyz_b, white)
    de = ciede2000_array(lab_a, lab_b).reshape(original.height, original.width)
    return DeltaEStats(
        mean=float(de.mean()),
        max=float(de.max()),
        p95=float(np.percentile(de, 95.0)),
        map=de,
    )
