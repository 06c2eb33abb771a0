"""Field models: the unknown functions the network tries to reconstruct.

Three variants share one evaluation protocol: sums of Gaussian bumps,
a two-bump field whose bandwidths breathe periodically in time, and
gridded data evaluated by bilinear interpolation over the unit square.
Measurements add white Gaussian noise on top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaussComponent:
    center: np.ndarray  # (L,)
    amplitude: float
    bandwidth: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if not self.bandwidth > 0:
            raise ValueError(f"component bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class MultiGaussField:
    """Static sum of Gaussian bumps; deterministic in the input point."""

    components: tuple[GaussComponent, ...]

    def evaluate(self, x, k: int = 0):
        """Field value at ``x`` (time index ignored); vectorized over rows."""
        x = np.asarray(x, dtype=float)
        pts = np.atleast_2d(x)
        total = np.zeros(pts.shape[0])
        for c in self.components:
            sq = np.sum((pts - c.center) ** 2, axis=1)
            total += c.amplitude * np.exp(-sq / (2.0 * c.bandwidth**2))
        return float(total[0]) if x.ndim == 1 else total


@dataclass(frozen=True)
class TimeVaryingField:
    """Two Gaussian bumps whose variances expand and shrink periodically.

    Component i scales its squared bandwidth by ``1 + sign_i * depth *
    sin(2*pi*k/period)``, so the field repeats every ``period`` time steps.
    """

    components: tuple[GaussComponent, ...]
    signs: tuple[float, ...]
    depth: float = 0.5
    period: int = 1000

    def evaluate(self, x, k: int = 0):
        x = np.asarray(x, dtype=float)
        pts = np.atleast_2d(x)
        # phase from k modulo the period keeps k and k+period bit-identical
        phase = 2.0 * np.pi * (int(k) % self.period) / self.period
        modulation = self.depth * np.sin(phase)
        total = np.zeros(pts.shape[0])
        for c, sign in zip(self.components, self.signs):
            variance = (1.0 + sign * modulation) * c.bandwidth**2
            sq = np.sum((pts - c.center) ** 2, axis=1)
            total += c.amplitude * np.exp(-sq / (2.0 * variance))
        return float(total[0]) if x.ndim == 1 else total


@dataclass(frozen=True)
class GridField:
    """Gridded values over the unit square, bilinearly interpolated.

    Row 0 is the northernmost row (largest second coordinate); columns
    run west to east.  Evaluation clamps points into [0,1]^2.  The
    original coordinate bounds are kept as metadata for round-tripping.
    """

    values: np.ndarray  # (rows, cols)
    bounds: tuple[float, float, float, float]  # x1min, x1max, x2min, x2max

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 2:
            raise ValueError(f"grid must be at least 2x2, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def evaluate(self, x, k: int = 0):
        x = np.asarray(x, dtype=float)
        pts = np.clip(np.atleast_2d(x), 0.0, 1.0)
        rows, cols = self.values.shape
        col_pos = pts[:, 0] * (cols - 1)
        row_pos = (1.0 - pts[:, 1]) * (rows - 1)
        c0 = np.clip(np.floor(col_pos).astype(int), 0, cols - 2)
        r0 = np.clip(np.floor(row_pos).astype(int), 0, rows - 2)
        fc = col_pos - c0
        fr = row_pos - r0
        v = (
            self.values[r0, c0] * (1 - fr) * (1 - fc)
            + self.values[r0, c0 + 1] * (1 - fr) * fc
            + self.values[r0 + 1, c0] * fr * (1 - fc)
            + self.values[r0 + 1, c0 + 1] * fr * fc
        )
        return float(v[0]) if x.ndim == 1 else v


def two_bump_field() -> MultiGaussField:
    """The standard two-bump benchmark: a sharp tall peak and a broad low one."""
    return MultiGaussField(
        components=(
            GaussComponent(center=np.array([0.5, 0.7]), amplitude=2.0, bandwidth=0.1),
            GaussComponent(center=np.array([0.3, 0.1]), amplitude=1.0, bandwidth=0.3),
        )
    )


def breathing_field() -> TimeVaryingField:
    """Two bumps whose widths breathe in opposite phase with period 1000."""
    return TimeVaryingField(
        components=(
            GaussComponent(center=np.array([0.6, 0.5]), amplitude=0.8, bandwidth=0.3),
            GaussComponent(center=np.array([0.25, 0.3]), amplitude=1.0, bandwidth=0.1),
        ),
        signs=(-1.0, 1.0),
    )


def synthetic_altitude_field(rows: int = 31, cols: int = 31, seed: int = 7) -> GridField:
    """Rough terrain-like grid: several random bumps and dips of varied widths.

    A stand-in for gridded relief data so the grid-reconstruction
    experiments run without external downloads.
    """
    rng = np.random.default_rng(seed)
    n_bumps = 8
    centers = rng.random((n_bumps, 2))
    amplitudes = rng.uniform(0.5, 2.0, n_bumps) * rng.choice([-1.0, 1.0], n_bumps)
    widths = rng.uniform(0.08, 0.3, n_bumps)
    lin_x1 = np.linspace(0.0, 1.0, cols)
    lin_x2 = np.linspace(1.0, 0.0, rows)  # northernmost row first
    X1, X2 = np.meshgrid(lin_x1, lin_x2)
    pts = np.column_stack([X1.ravel(), X2.ravel()])
    vals = np.zeros(pts.shape[0])
    for c, a, w in zip(centers, amplitudes, widths):
        vals += a * np.exp(-np.sum((pts - c) ** 2, axis=1) / (2.0 * w**2))
    return GridField(values=vals.reshape(rows, cols), bounds=(0.0, 1.0, 0.0, 1.0))


def measure(field, x, k: int, noise_var: float, rng: np.random.Generator):
    """Noisy observation of the field: value plus white Gaussian noise.

    With zero noise variance the measurement is the exact field value.
    Vectorized over rows of ``x``.
    """
    if noise_var < 0:
        raise ValueError(f"noise variance must be nonnegative, got {noise_var}")
    value = field.evaluate(x, k)
    if np.ndim(value) == 0:
        return float(value) + np.sqrt(noise_var) * float(rng.standard_normal())
    return value + np.sqrt(noise_var) * rng.standard_normal(len(value))


def save_grid(field: GridField, path) -> None:
    """Write a grid field in the plain-text format read by :func:`load_grid`."""
    rows, cols = field.values.shape
    x1min, x1max, x2min, x2max = field.bounds
    with open(path, "w") as fh:
        fh.write(f"{rows} {cols} {x1min:.17g} {x1max:.17g} {x2min:.17g} {x2max:.17g}\n")
        for row in field.values:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_grid(path) -> GridField:
    """Read a grid field from its plain-text format.

    Line 1: ``rows cols x1min x1max x2min x2max``; the next ``rows`` lines
    hold ``cols`` space-separated values each, northernmost row first.
    Evaluation always happens over the unit square; the stored bounds are
    provenance metadata.
    """
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty grid file")
    header = lines[0].split()
    if len(header) != 6:
        raise ValueError(
            f"{path}: malformed header (expected 'rows cols x1min x1max x2min x2max')"
        )
    try:
        rows, cols = int(header[0]), int(header[1])
        bounds = tuple(float(v) for v in header[2:])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric header entry: {exc}") from None
    if len(lines) - 1 != rows:
        raise ValueError(f"{path}: expected {rows} data rows, found {len(lines) - 1}")
    data = []
    for idx, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != cols:
            raise ValueError(f"{path}:{idx}: expected {cols} values, found {len(parts)}")
        try:
            data.append([float(v) for v in parts])
        except ValueError:
            raise ValueError(f"{path}:{idx}: non-numeric grid entry") from None
    return GridField(values=np.asarray(data), bounds=bounds)
