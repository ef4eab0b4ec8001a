"""Aberration phases: synthesis, even/odd decomposition, and pupil factors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .scene import ComplexField, GridGeometry, _frozen, reflect

MAX_NOLL = 231  # radial order 20


def noll_to_nm(j: int) -> tuple[int, int]:
    """Noll index -> (n, m); even j carries cos (m > 0), odd j sin (m < 0)."""
    if j < 1:
        raise ValueError(f"Noll index must be >= 1, got {j}")
    n = 0
    while (n + 1) * (n + 2) // 2 < j:
        n += 1
    rem = j - n * (n + 1) // 2
    if n % 2 == 0:
        m = 2 * (rem // 2)
    else:
        m = 2 * ((rem - 1) // 2) + 1
    if m != 0 and j % 2 == 1:
        m = -m
    return n, m


def _radial_coeffs(n: int, m: int) -> list[float]:
    """Coefficients c_s of R_n^m(r) = r^m * sum_s c_s * (r^2)^s."""
    m = abs(m)
    coeffs = [0.0] * ((n - m) // 2 + 1)
    for k in range((n - m) // 2 + 1):
        c = (-1) ** k * math.factorial(n - k) / (
            math.factorial(k) * math.factorial((n + m) // 2 - k) * math.factorial((n - m) // 2 - k)
        )
        coeffs[(n - m) // 2 - k] = c  # power of r^2 is (n - m)/2 - k
    return coeffs


def zernike(j: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Noll-normalized Zernike Z_j on unit-disk coordinates, continued outside r = 1.

    Evaluated as a polynomial in x, y so that (x, y) -> (-x, -y) flips the
    sign by exactly (-1)^m.
    """
    if j > MAX_NOLL:
        raise ValueError(f"Noll index {j} above supported maximum {MAX_NOLL}")
    n, m = noll_to_nm(j)
    r2 = x * x + y * y
    poly = np.zeros_like(r2)
    for c in reversed(_radial_coeffs(n, m)):
        poly = poly * r2 + c
    if m == 0:
        return math.sqrt(n + 1) * poly
    z = np.ones_like(x, dtype=complex)
    w = x + 1j * y
    for _ in range(abs(m)):
        z = z * w
    ang = z.real if m > 0 else z.imag
    return math.sqrt(2 * (n + 1)) * poly * ang


@dataclass(frozen=True)
class ZernikeTerm:
    noll_index: int
    coefficient: float
    kind: str = field(default="zernike", init=False)

    def __post_init__(self):
        if self.noll_index < 1:
            raise ValueError(f"Noll index must be >= 1, got {self.noll_index}")
        if self.noll_index > MAX_NOLL:
            raise ValueError(f"Noll index {self.noll_index} above supported maximum {MAX_NOLL}")

    @property
    def azimuthal_order(self) -> int:
        return noll_to_nm(self.noll_index)[1]


@dataclass(frozen=True)
class MonomialTerm:
    """coefficient * x**px * y**py, coefficient in rad / m**(px + py)."""

    px: int
    py: int | None
    coefficient: float
    kind: str = field(default="monomial", init=False)

    def __post_init__(self):
        if self.px < 0 or (self.py is not None and self.py < 0):
            raise ValueError("monomial powers must be non-negative")


Term = Union[ZernikeTerm, MonomialTerm]


@dataclass(frozen=True)
class AberrationSpec:
    terms: tuple[Term, ...] = ()
    aperture_radius: float = 1.0

    def __post_init__(self):
        if not self.aperture_radius > 0:
            raise ValueError("aperture_radius must be positive")
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class PhaseMap:
    grid: GridGeometry
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"phase shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("phase map contains non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    def __add__(self, other: "PhaseMap") -> "PhaseMap":
        return PhaseMap(self.grid, self.values + other.values)

    def scaled(self, factor: float) -> "PhaseMap":
        return PhaseMap(self.grid, factor * self.values)

    @classmethod
    def zeros(cls, grid: GridGeometry) -> "PhaseMap":
        return cls(grid, np.zeros(grid.shape))


def _ipow(x: np.ndarray, p: int) -> np.ndarray:
    # repeated products: (-x)**p == (-1)**p * x**p bit for bit, unlike np.power
    out = np.ones_like(x)
    for _ in range(p):
        out = out * x
    return out


def _evaluate(term: Term, coords, radius: float) -> np.ndarray:
    if isinstance(term, ZernikeTerm):
        if len(coords) != 2:
            raise ValueError("Zernike terms need a 2D grid")
        return term.coefficient * zernike(term.noll_index, coords[0] / radius, coords[1] / radius)
    x = coords[0]
    out = term.coefficient * _ipow(x, term.px)
    if len(coords) == 2:
        out = out * _ipow(coords[1], term.py or 0)
    elif term.py:
        raise ValueError("monomial with a y power needs a 2D grid")
    return out


def synthesize_phase(spec: AberrationSpec, grid: GridGeometry) -> PhaseMap:
    """Sample the aberration on ``grid``.

    A sample on the unpaired edge (coordinate -L/2 on some axis) stands for
    both -L/2 and +L/2 of the periodic grid, so it takes the average of the
    polynomial over those images.  Odd aberrations then vanish there and the
    sampled map keeps the parity of the continuous one.
    """
    base = grid.coords()
    # coordinate arrays with the edge slice moved from -L/2 to +L/2
    flipped = []
    for ax, c in enumerate(base):
        c = c.copy()
        sl = [slice(None)] * grid.dims
        sl[ax] = 0
        c[tuple(sl)] = -c[tuple(sl)]
        flipped.append(c)

    def averaged(coords, ax):
        # nested pairwise averages keep interior samples bit-exact
        if ax == grid.dims:
            return sum_terms(coords)
        alt = list(coords)
        alt[ax] = flipped[ax]
        return 0.5 * (averaged(coords, ax + 1) + averaged(alt, ax + 1))

    def sum_terms(coords):
        total = np.zeros(grid.shape)
        for term in spec.terms:
            total = total + _evaluate(term, coords, spec.aperture_radius)
        return total

    return PhaseMap(grid, averaged(list(base), 0))


def decompose_parity(phi: PhaseMap) -> tuple[PhaseMap, PhaseMap]:
    mirrored = reflect(phi.values)
    even = 0.5 * (phi.values + mirrored)
    odd = 0.5 * (phi.values - mirrored)
    return PhaseMap(phi.grid, even), PhaseMap(phi.grid, odd)


def pupil_factor(phi: PhaseMap, doubling: bool = False) -> ComplexField:
    """exp(i*phi), or exp(2i*phi) with ``doubling`` (meant for an even map)."""
    scale = 2.0 if doubling else 1.0
    return ComplexField(phi.grid, np.exp(1j * (scale * phi.values)))
