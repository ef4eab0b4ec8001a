"""Shared scene geometry: grids, sampled fields, lens layout, objects and pumps.

Every transverse plane in a scenario (source, lens, object, detectors) is
sampled on one centered grid.  Sample ``i`` sits at ``(i - N/2) * spacing``
and its mirror partner is ``(N - i) % N``, the same pairing a DFT uses, so
index 0 (the coordinate ``-L/2``) is its own partner.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

IMAGING_RTOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridGeometry:
    dims: int
    n: int
    extent: float

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if self.n <= 0 or self.n % 2:
            raise ValueError(f"samples per axis must be a positive even integer, got {self.n}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")

    @classmethod
    def matched(cls, layout: "OpticalLayout", n: int, dims: int = 1, distance: float | None = None):
        """Grid whose lens-plane quadrature is an exact DFT for ``distance``.

        With ``spacing**2 == wavelength * distance / n`` the phase
        ``k * x * x' / distance`` between two grid points is ``2*pi*i*j/n``,
        so plane-wave sums over the grid collapse to discrete deltas.
        ``distance`` defaults to the lens-to-detector distance z2.
        """
        z = layout.z2 if distance is None else distance
        return cls(dims, n, math.sqrt(layout.wavelength * z * n))

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dims

    @property
    def cell(self) -> float:
        """Quadrature weight of one sample (spacing ** dims)."""
        return self.spacing**self.dims

    def axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.spacing

    def coords(self) -> tuple[np.ndarray, ...]:
        ax = self.axis()
        if self.dims == 1:
            return (ax,)
        return tuple(np.meshgrid(ax, ax, indexing="ij"))

    def radius_sq(self) -> np.ndarray:
        return sum(c * c for c in self.coords())

    def is_matched(self, wavenumber: float, distance: float, rtol: float = 1e-9) -> bool:
        cycles = wavenumber * self.spacing**2 * self.n / (2 * math.pi * distance)
        return abs(cycles - 1.0) <= rtol


def reflect(a: np.ndarray) -> np.ndarray:
    """Index reflection ``i -> (N - i) % N`` on every axis."""
    out = a
    for ax in range(a.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def check_same_grid(*grids: GridGeometry) -> None:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise ValueError(f"grid mismatch: {g} vs {first}")


@dataclass(frozen=True)
class ComplexField:
    grid: GridGeometry
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass(frozen=True)
class OpticalLayout:
    wavelength: float
    z1: float
    z2: float
    f: float

    def __post_init__(self):
        for name in ("wavelength", "z1", "z2", "f"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        lhs = 1.0 / self.z1 + 1.0 / self.z2
        if abs(lhs - 1.0 / self.f) > IMAGING_RTOL * (1.0 / self.f):
            raise ValueError(
                f"imaging condition 1/z1 + 1/z2 = 1/f violated: "
                f"1/{self.z1} + 1/{self.z2} = {lhs!r} but 1/f = {1.0 / self.f!r}"
            )

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def magnification(self) -> float:
        """Single-lens magnification -z2/z1."""
        return -self.z2 / self.z1


def make_layout(wavelength: float, z1: float, z2: float) -> OpticalLayout:
    for name, v in (("wavelength", wavelength), ("z1", z1), ("z2", z2)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return OpticalLayout(wavelength, z1, z2, 1.0 / (1.0 / z1 + 1.0 / z2))


@dataclass(frozen=True)
class ObjectMask:
    grid: GridGeometry
    transmittance: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        t = np.asarray(self.transmittance, dtype=complex)
        if t.shape != self.grid.shape:
            raise ValueError(f"mask shape {t.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError("mask contains non-finite values")
        if np.any(np.abs(t) > 1 + 1e-12):
            raise ValueError("transmittance magnitude exceeds 1")
        object.__setattr__(self, "transmittance", _frozen(t))

    def intensity(self) -> np.ndarray:
        return np.abs(self.transmittance) ** 2


@dataclass(frozen=True)
class PumpModel:
    kind: str = "plane"
    width: float | None = None
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.kind not in ("plane", "gaussian"):
            raise ValueError(f"unknown pump kind {self.kind!r}")
        if self.kind == "gaussian" and not (self.width is not None and self.width > 0):
            raise ValueError("gaussian pump needs a positive width")


def sample_pump(pump: PumpModel, grid: GridGeometry) -> ComplexField:
    if pump.kind == "plane":
        return ComplexField(grid, np.full(grid.shape, pump.amplitude, dtype=complex))
    return ComplexField(grid, pump.amplitude * np.exp(-grid.radius_sq() / pump.width**2))


# --- standard objects -------------------------------------------------------

OBJECT_NAMES = ("double-slit", "bar-target", "letter-E", "point", "uniform")


def _nearest_index(grid: GridGeometry, x: float) -> int:
    i = int(round(x / grid.spacing)) + grid.n // 2
    if not 0 <= i < grid.n:
        raise ValueError(f"offset {x} lies outside the grid")
    return i


def _as_pair(v, dims):
    if np.ndim(v) == 0:
        return (float(v),) + (0.0,) * (dims - 1)
    v = tuple(float(a) for a in v)
    if len(v) != dims:
        raise ValueError(f"expected {dims} components, got {len(v)}")
    return v


def _double_slit(grid, slit_width=None, separation=None):
    L = grid.extent
    w = L / 16 if slit_width is None else slit_width
    s = L / 4 if separation is None else separation
    if w <= 0 or s <= w:
        raise ValueError("double-slit needs 0 < slit_width < separation")
    x = grid.coords()[0]
    # half-open intervals keep the two slits exact mirrors on the grid
    t = (np.abs(x - s / 2) < w / 2) | (np.abs(x + s / 2) < w / 2)
    if grid.dims == 2:
        t = t & (np.abs(grid.coords()[1]) < L / 4)
    return t.astype(float)


def _bar_target(grid, bar_width=None, bars=3):
    L = grid.extent
    w = L / 32 if bar_width is None else bar_width
    x = grid.coords()[0]
    t = np.zeros(grid.shape)
    for b in range(int(bars)):
        centre = (b - (bars - 1) / 2) * 2 * w
        t[np.abs(x - centre) < w / 2] = 1.0
    if grid.dims == 2:
        t = t * (np.abs(grid.coords()[1]) < 5 * w / 2)
    return t


def _letter_e(grid, height=None):
    L = grid.extent
    h = L / 4 if height is None else height
    s = h / 5  # stroke
    if grid.dims == 1:
        # a 1D cut through the three arms of an E
        x = grid.coords()[0]
        t = np.zeros(grid.shape)
        for c in (-2 * s, 0.0, 2 * s):
            t[np.abs(x - c) < s / 2] = 1.0
        return t
    x, y = grid.coords()
    # rows run along x (top of the letter at negative x), columns along y
    inside = (np.abs(x) < h / 2) & (y >= -h * 0.3) & (y < h * 0.3)
    spine = inside & (y < -h * 0.3 + s)
    arms = np.zeros(grid.shape, dtype=bool)
    for c in (-2 * s, 0.0, 2 * s):
        arms |= inside & (np.abs(x - c) < s / 2)
    return (spine | arms).astype(float)


def _point(grid, offset=0.0):
    off = _as_pair(offset, grid.dims)
    idx = tuple(_nearest_index(grid, o) for o in off)
    t = np.zeros(grid.shape)
    t[idx] = 1.0
    return t


def standard_objects(name: str, grid: GridGeometry, **params) -> ObjectMask:
    """Deterministic test targets.

    ``point`` takes ``offset`` (scalar, or a pair in 2D) snapped to the
    nearest sample; ``double-slit`` takes ``slit_width`` and ``separation``
    (centre to centre); ``bar-target`` takes ``bar_width`` and ``bars``;
    ``letter-E`` takes ``height``.
    """
    builders = {
        "double-slit": _double_slit,
        "bar-target": _bar_target,
        "letter-E": _letter_e,
        "point": _point,
        "uniform": lambda g: np.ones(g.shape),
    }
    if name not in builders:
        raise ValueError(f"unknown object {name!r}; choose from {', '.join(OBJECT_NAMES)}")
    return ObjectMask(grid, builders[name](grid, **params), name=name)
