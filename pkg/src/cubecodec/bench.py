"""Benchmark harness: compression rate, stage timings, and color error.

One benchmark row = (image, method, p): compress at the target rate,
decompress, time the spectral and spatial stages separately (median over
repetitions, monotonic clock), and score the reconstruction with CIEDE2000
statistics.  Rows that fail (unreachable rate target, unreadable input)
stay in the report flagged with an error message so the row count is
always |corpus| x |methods| x |p-values|.

The default corpus is four synthesized 64x64x31 stand-in cubes covering the
content classes a spectral-compression study cares about: smooth skin-like
spectra, a saturated narrow-band emitter, a dark low-signal scene, and a
patchwise-constant chart.  They are stand-ins, not reproductions of any
particular test imagery.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colorimetry import cube_delta_e
from .container import (
    RateTarget,
    _assemble,
    compress_with_report,
    compression_rate,
    decode_planes,
    encode_planes,
    parse_stream,
    serialize_stream,
    spectral_forward,
    spectral_inverse,
)
from .cube import (
    SpectralCube,
    default_wavelengths,
    read_cube,
    smooth_field,
    synthesize_cube,
)
from .errors import ArgumentError, CodecError, ValidationError

CSV_COLUMNS = (
    "image", "method", "p", "target_cr", "achieved_cr",
    "t_spectral_ms", "t_spatial_ms", "t_total_ms",
    "de_mean", "de_p95", "de_max",
)

METHODS = ("pca", "csi")
BUILTIN_CORPUS = ("skin", "narrowband", "dark", "chart")
DEFAULT_P_VALUES = (20, 24, 28)
_NOISE_SIGMA = 0.012  # broadband sensor-noise stand-in, reflectance units


@dataclass
class EvalReport:
    """One benchmark row; failed rows carry ``error`` and NaN metrics."""

    image: str
    method: str
    p: int
    target_cr: float
    achieved_cr: float = float("nan")
    t_spectral_ms: float = float("nan")
    t_spatial_ms: float = float("nan")
    t_total_ms: float = float("nan")
    de_mean: float = float("nan")
    de_p95: float = float("nan")
    de_max: float = float("nan")
    quality: int | None = None
    rate_in_window: bool = False
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BenchConfig:
    """Benchmark run description (see ``parse_config`` for the file format)."""

    corpus: list[str]
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    p_values: list[int] = field(default_factory=lambda: list(DEFAULT_P_VALUES))
    target_cr: float = 8.0
    tolerance: float = 0.05
    repetitions: int = 5
    size_sweep: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.corpus and not self.size_sweep:
            raise ValidationError("config needs a non-empty corpus or a size sweep")
        if not self.methods:
            raise ValidationError("config needs at least one method")
        for m in self.methods:
            if m not in METHODS:
                raise ValidationError(f"unknown method {m!r}")
        if not self.p_values:
            raise ValidationError("config needs at least one p value")
        if self.repetitions < 3:
            raise ValidationError("repetitions must be >= 3")


def default_config() -> BenchConfig:
    return BenchConfig(corpus=list(BUILTIN_CORPUS))


# ---------------------------------------------------------------------------
# synthetic corpus

def _finish(values: np.ndarray, rng: np.random.Generator,
            noise: float = _NOISE_SIGMA) -> np.ndarray:
    """Add broadband noise and clip into a safe reflectance range."""
    values = values + rng.normal(0.0, noise, values.shape)
    return np.clip(values, 0.02, 0.98)


def _gauss(wl, center, width):
    return np.exp(-0.5 * ((wl - center) / width) ** 2)


def make_skin_cube(width: int = 64, height: int = 64, seed: int = 2101) -> SpectralCube:
    """Smooth skin-like reflectances: rising red edge with mid-green dips."""
    rng = np.random.default_rng(seed)
    wl = default_wavelengths(31).astype(np.float64)
    base = (0.30 + 0.24 / (1.0 + np.exp(-(wl - 585.0) / 26.0))
            - 0.10 * _gauss(wl, 545.0, 22.0) - 0.05 * _gauss(wl, 577.0, 14.0)
            + 0.04 * _gauss(wl, 435.0, 28.0))
    brightness = smooth_field(rng, height, width, 0.72, 1.18, cells=3)
    tilt = smooth_field(rng, height, width, -0.06, 0.08, cells=4)
    spectra = base[:, None, None] * brightness[None] \
        + tilt[None] * ((wl[:, None, None] - 550.0) / 150.0) * 0.5
    return SpectralCube(width=width, height=height, bands=31,
                        wavelengths=default_wavelengths(31),
                        samples=_finish(spectra, rng).astype(np.float32))


def make_narrowband_cube(width: int = 64, height: int = 64, seed: int = 2102) -> SpectralCube:
    """Saturated narrow-band reflectance peak around 620-650 nm."""
    rng = np.random.default_rng(seed)
    wl = default_wavelengths(31).astype(np.float64)
    center = smooth_field(rng, height, width, 615.0, 648.0, cells=3)
    sigma = smooth_field(rng, height, width, 10.0, 16.0, cells=3)
    amp = smooth_field(rng, height, width, 0.45, 0.82, cells=4)
    lam = wl[:, None, None]
    spectra = (0.05 + 0.04 * _gauss(wl, 460.0, 35.0)[:, None, None]
               + amp[None] * np.exp(-0.5 * ((lam - center[None]) / sigma[None]) ** 2))
    return SpectralCube(width=width, height=height, bands=31,
                        wavelengths=default_wavelengths(31),
                        samples=_finish(spectra, rng).astype(np.float32))


def make_dark_cube(width: int = 64, height: int = 64, seed: int = 2103) -> SpectralCube:
    """Dark low-signal scene with a gentle red rise."""
    rng = np.random.default_rng(seed)
    wl = default_wavelengths(31).astype(np.float64)
    shape = 0.35 + 0.65 / (1.0 + np.exp(-(wl - 615.0) / 30.0))
    amp = smooth_field(rng, height, width, 0.08, 0.28, cells=4)
    floor = smooth_field(rng, height, width, 0.03, 0.08, cells=3)
    spectra = floor[None] + amp[None] * shape[:, None, None]
    return SpectralCube(width=width, height=height, bands=31,
                        wavelengths=default_wavelengths(31),
                        samples=_finish(spectra, rng, noise=0.006).astype(np.float32))


def make_chart_cube(width: int = 64, height: int = 64, seed: int = 2104) -> SpectralCube:
    """Patchwise-constant color chart: 4 x 6 patches of distinct smooth spectra."""
    rng = np.random.default_rng(seed)
    rows, cols = 4, 6
    bands = 31
    anchors = np.linspace(0.0, bands - 1.0, 6)
    grid = np.arange(bands, dtype=np.float64)
    patch_spectra = np.empty((rows * cols, bands))
    for i in range(rows * cols):
        vals = rng.uniform(0.08, 0.92, anchors.shape[0])
        patch_spectra[i] = np.interp(grid, anchors, vals)
    ygrid = np.minimum(np.arange(height) * rows // height, rows - 1)
    xgrid = np.minimum(np.arange(width) * cols // width, cols - 1)
    patch_index = ygrid[:, None] * cols + xgrid[None, :]
    spectra = patch_spectra[patch_index].transpose(2, 0, 1)  # (bands, H, W)
    vignette = smooth_field(rng, height, width, 0.92, 1.05, cells=2)
    shading = 1.0 + 0.05 * smooth_field(rng, height, width, -1.0, 1.0, cells=16)
    return SpectralCube(width=width, height=height, bands=bands,
                        wavelengths=default_wavelengths(bands),
                        samples=_finish(spectra * (vignette * shading)[None], rng,
                                        noise=0.02).astype(np.float32))


def make_sweep_cube(width: int, height: int, seed: int = 2105) -> SpectralCube:
    """Textured cube for timing sweeps: smooth spectra plus a narrow feature."""
    rng = np.random.default_rng(seed)
    base = synthesize_cube(width, height, 31, "random-smooth", seed=seed)
    wl = default_wavelengths(31).astype(np.float64)
    amp = smooth_field(rng, height, width, 0.0, 0.35, cells=4)
    peak = amp[None] * _gauss(wl, 630.0, 14.0)[:, None, None]
    values = _finish(0.8 * base.samples.astype(np.float64) + peak, rng)
    return SpectralCube(width=width, height=height, bands=31,
                        wavelengths=base.wavelengths,
                        samples=values.astype(np.float32))


_BUILTIN_BUILDERS = {
    "skin": make_skin_cube,
    "narrowband": make_narrowband_cube,
    "dark": make_dark_cube,
    "chart": make_chart_cube,
}


def _load_corpus_entry(entry: str) -> SpectralCube:
    if entry in _BUILTIN_BUILDERS:
        return _BUILTIN_BUILDERS[entry]()
    if entry.startswith("synth:"):
        try:
            _, pattern, dims, seed = entry.split(":")
            w, h, n = (int(v) for v in dims.split("x"))
            return synthesize_cube(w, h, n, pattern, seed=int(seed))
        except (ValueError, TypeError):
            raise ArgumentError(
                f"bad synth spec {entry!r}; expected synth:<pattern>:<WxHxN>:<seed>"
            ) from None
    return read_cube(Path(entry).read_bytes())


def resolve_corpus(config: BenchConfig):
    """Yield (name, cube-or-None, error-or-None) for every effective corpus entry."""
    out = []
    for entry in config.corpus:
        try:
            out.append((entry, _load_corpus_entry(entry), None))
        except (CodecError, OSError) as exc:
            out.append((entry, None, f"{type(exc).__name__}: {exc}"))
    for w, h in config.size_sweep:
        out.append((f"sweep_{w}x{h}", make_sweep_cube(w, h), None))
    return out


# ---------------------------------------------------------------------------
# measurement

def _timed_pipeline(cube: SpectralCube, method: str, p: int, quality: int):
    """One full compress/decompress pass with per-stage wall timing."""
    t0 = time.perf_counter()
    planes, side = spectral_forward(cube, method, p)
    t1 = time.perf_counter()
    encoded = encode_planes(planes, quality)
    t2 = time.perf_counter()
    blob = serialize_stream(_assemble(cube, method, p, side, encoded, quality))
    parsed = parse_stream(blob)
    t3 = time.perf_counter()
    decoded = decode_planes(parsed.planes)
    t4 = time.perf_counter()
    recon = spectral_inverse(decoded, parsed.side, method, parsed.wavelengths)
    t5 = time.perf_counter()
    t_spectral = (t1 - t0) + (t5 - t4)
    t_spatial = (t2 - t1) + (t4 - t3)
    return t_spectral * 1e3, t_spatial * 1e3, (t5 - t0) * 1e3, recon


def evaluate_row(cube: SpectralCube, image: str, method: str, p: int,
                 target: RateTarget, repetitions: int) -> EvalReport:
    """Benchmark one (image, method, p) combination."""
    report = EvalReport(image=image, method=method, p=p, target_cr=target.target_cr)
    try:
        stream, rate_report = compress_with_report(cube, method, p, rate=target)
        achieved = compression_rate(cube, len(serialize_stream(stream)))
        if rate_report.in_window:
            lo, hi = target.window
            assert lo <= achieved <= hi, "rate search reported success outside window"
        t_spec, t_spat, t_tot, recon = [], [], [], None
        for _ in range(repetitions):
            a, b, c, recon = _timed_pipeline(cube, method, p, rate_report.quality)
            t_spec.append(a)
            t_spat.append(b)
            t_tot.append(c)
        stats = cube_delta_e(cube, recon)
        report.achieved_cr = achieved
        report.quality = rate_report.quality
        report.rate_in_window = rate_report.in_window
        report.t_spectral_ms = statistics.median(t_spec)
        report.t_spatial_ms = statistics.median(t_spat)
        report.t_total_ms = statistics.median(t_tot)
        report.de_mean = stats.mean
        report.de_p95 = stats.p95
        report.de_max = stats.max
    except CodecError as exc:
        report.error = f"{type(exc).__name__}: {exc}"
    return report


def run_benchmark(config: BenchConfig) -> list[EvalReport]:
    """Run every (image, method, p) row of the configured benchmark."""
    target = RateTarget(target_cr=config.target_cr, tolerance=config.tolerance)
    reports = []
    for name, cube, err in resolve_corpus(config):
        for method in config.methods:
            for p in config.p_values:
                if err is not None:
                    reports.append(EvalReport(image=name, method=method, p=p,
                                              target_cr=config.target_cr, error=err))
                    continue
                reports.append(
                    evaluate_row(cube, name, method, p, target, config.repetitions)
                )
    return reports


# ---------------------------------------------------------------------------
# emission

def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def emit_csv(reports: list[EvalReport]) -> bytes:
    """Fixed-schema CSV; numeric fields carry 6 significant digits."""
    if not reports:
        raise ArgumentError("no reports to emit")
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        lines.append(",".join(_fmt(getattr(r, c)) for c in CSV_COLUMNS))
    return ("\n".join(lines) + "\n").encode("utf-8")


def emit_table(reports: list[EvalReport]) -> str:
    """Aligned human-readable table, one row per report."""
    if not reports:
        raise ArgumentError("no reports to emit")
    header = list(CSV_COLUMNS) + ["status"]
    rows = [header]
    for r in reports:
        status = "ok" if r.ok else r.error
        rows.append([_fmt(getattr(r, c)) for c in CSV_COLUMNS] + [status])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    out = []
    for row in rows:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# config file parsing (flat key = value, '#' comments, lists comma-separated)

def parse_config(text: str) -> BenchConfig:
    """Parse the flat key=value benchmark config format.

    Recognized keys: corpus, methods, p_values, target_cr, tolerance,
    repetitions, size_sweep (list of WxH entries).
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()

    def split_list(s):
        return [item.strip() for item in s.split(",") if item.strip()]

    kwargs = {}
    try:
        if "corpus" in values:
            kwargs["corpus"] = split_list(values["corpus"])
        if "methods" in values:
            kwargs["methods"] = [m.lower() for m in split_list(values["methods"])]
        if "p_values" in values:
            kwargs["p_values"] = [int(v) for v in split_list(values["p_values"])]
        if "target_cr" in values:
            kwargs["target_cr"] = float(values["target_cr"])
        if "tolerance" in values:
            kwargs["tolerance"] = float(values["tolerance"])
        if "repetitions" in values:
            kwargs["repetitions"] = int(values["repetitions"])
        if "size_sweep" in values:
            sizes = []
            for item in split_list(values["size_sweep"]):
                w, _, h = item.partition("x")
                sizes.append((int(w), int(h)))
            kwargs["size_sweep"] = sizes
    except ValueError as exc:
        raise ValidationError(f"bad config value: {exc}") from None
    kwargs.setdefault("corpus", [])
    return BenchConfig(**kwargs)


def load_config(path) -> BenchConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
