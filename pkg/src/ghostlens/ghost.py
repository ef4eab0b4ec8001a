"""Coincidence imaging through a shared aberrated lens.

Three routes to the coincidence rate R(x1):

* ``ghost_fast`` -- far-field closed form: |G|^2 convolved with the kernel
  |FT exp(2i phi_even)|^2 evaluated at spatial frequency k (x1 - x2) / z2.
* ``ghost_oracle`` -- direct quadrature of the two-photon amplitude,
  psi(x1, x2) = sum_xi F(xi) A(xi, x1) A(xi, x2), with no parity argument.
* ``classical_ghost`` -- a beam-steered classical source whose two beams hit
  the lens at +x' and -x'; steering samples are summed coherently.

The detection-plane phase factor is taken as exp(-i k x1.x' / z2) in all
routes; the version without the 1/z2 is dimensionally inconsistent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aberration import PhaseMap, decompose_parity, pupil_factor
from .parallel import chunks, pmap, tree_sum
from .scene import (
    ComplexField,
    GridGeometry,
    ObjectMask,
    OpticalLayout,
    PumpModel,
    check_same_grid,
    reflect,
    sample_pump,
)

ORACLE_MAX_SAMPLES = 512
WRAP_ENERGY = 0.99


class GuardError(ValueError):
    """An engine was asked for something it refuses to compute."""


@dataclass(frozen=True)
class CoincidenceImage:
    grid: GridGeometry
    rate: np.ndarray
    provenance: str
    normalized: bool = True
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        r = np.asarray(self.rate, dtype=float)
        if r.shape != self.grid.shape:
            raise ValueError(f"rate shape {r.shape} does not match grid {self.grid.shape}")
        if np.any(r < 0):
            raise ValueError("coincidence rate must be non-negative")
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "rate", r)


@dataclass(frozen=True)
class TwoPhotonAmplitude:
    grid: GridGeometry
    values: np.ndarray  # psi[x1, x2]


@dataclass(frozen=True)
class ImageMetrics:
    rms_error: float
    peak_location: tuple[float, ...]
    kernel_fwhm: float


# --- lens-plane transforms ----------------------------------------------------


def phase_matrix(grid: GridGeometry, scale: float) -> np.ndarray:
    """E[n, j] = exp(-i * scale * x_n * x_j) over the grid axis.

    On a matched grid (scale * spacing**2 * N == 2*pi) the phases are built
    from integer products mod N, which gives exact DFT twiddles.
    """
    n = grid.n
    if abs(scale * grid.spacing**2 * n / (2 * math.pi) - 1.0) <= 1e-9:
        idx = np.arange(n) - n // 2
        p = np.outer(idx, idx) % n
        return np.exp(-2j * math.pi * p / n)
    ax = grid.axis()
    return np.exp(-1j * scale * np.outer(ax, ax))


def _transform(mat: np.ndarray, values: np.ndarray, cell: float) -> np.ndarray:
    if values.ndim == 1:
        return (mat @ values) * cell
    return (mat @ values @ mat.T) * cell


def coherent_kernel(layout: OpticalLayout, pupil: ComplexField) -> np.ndarray:
    """|FT pupil|^2 at frequency k d / z2 for every grid offset d (centred)."""
    mat = phase_matrix(pupil.grid, layout.k / layout.z2)
    return np.abs(_transform(mat, pupil.values, pupil.grid.cell)) ** 2


def ghost_kernel(layout: OpticalLayout, phi: PhaseMap) -> np.ndarray:
    even, _ = decompose_parity(phi)
    return coherent_kernel(layout, pupil_factor(even, doubling=True))


def cyclic_convolve(weights: np.ndarray, kernel: np.ndarray, cell: float) -> np.ndarray:
    """sum_j w[j] K[i - j] on the periodic grid; ``kernel`` is centred at N/2."""
    k0 = np.fft.ifftshift(kernel)
    out = np.fft.ifftn(np.fft.fftn(weights) * np.fft.fftn(k0)).real * cell
    return np.maximum(out, 0.0)


def normalize_peak(a: np.ndarray) -> np.ndarray:
    m = float(np.max(a))
    return a / m if m > 0 else np.zeros_like(a)


def energy_width(kernel: np.ndarray, grid: GridGeometry, fraction: float = WRAP_ENERGY) -> float:
    """Diameter of the centred disc (interval in 1D) holding ``fraction`` of the kernel sum."""
    r = np.sqrt(grid.radius_sq()).ravel()
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(kernel.ravel()[order])
    total = cum[-1]
    if total <= 0:
        return 0.0
    i = int(np.searchsorted(cum, fraction * total))
    return 2 * float(r[order][min(i, r.size - 1)]) + grid.spacing


def _wrap_warnings(kernel, grid) -> tuple[str, ...]:
    w = energy_width(kernel, grid)
    if w >= grid.extent / 4:
        return (
            f"kernel {WRAP_ENERGY:.0%} energy width {w:.3g} exceeds a quarter of the grid "
            f"extent ({grid.extent / 4:.3g}); cyclic wrap-around may distort the image",
        )
    return ()


# --- engines ------------------------------------------------------------------


def ghost_fast(layout: OpticalLayout, obj: ObjectMask, phi: PhaseMap) -> CoincidenceImage:
    check_same_grid(obj.grid, phi.grid)
    grid = obj.grid
    kernel = ghost_kernel(layout, phi)
    rate = cyclic_convolve(obj.intensity(), kernel, grid.cell)
    return CoincidenceImage(grid, normalize_peak(rate), "fast-path", warnings=_wrap_warnings(kernel, grid))


def ghost_oracle(
    layout: OpticalLayout,
    obj: ObjectMask,
    phi: PhaseMap,
    pump: PumpModel,
    far_field: bool = True,
    max_samples: int = ORACLE_MAX_SAMPLES,
    workers: int = 1,
) -> tuple[TwoPhotonAmplitude, CoincidenceImage]:
    """Brute-force two-photon amplitude and coincidence rate (1D only).

    The triple sum over source point xi and lens points x', x'' factorizes as
    psi = sum_xi F(xi) A(xi, x1) A(xi, x2) with
    A(xi, x) = sum_x' exp(-i k (xi/z1 + x/z2) x') exp(i phi(x')) dx',
    so the cost is O(N^3).  F = E_p * exp(i k xi^2 / z1); ``far_field`` drops
    that chirp.  The object multiplies only the bucket arm.
    """
    check_same_grid(obj.grid, phi.grid)
    grid = obj.grid
    if grid.dims != 1:
        raise GuardError("ghost-oracle is 1D only: the 2D quadrature is six-dimensional")
    if grid.n > max_samples:
        raise GuardError(f"ghost-oracle refuses N={grid.n} > {max_samples} samples")

    k, z1, z2 = layout.k, layout.z1, layout.z2
    x = grid.axis()
    dx = grid.spacing
    src = sample_pump(pump, grid).values
    if not far_field:
        src = src * np.exp(1j * k * x**2 / z1)
    lens = np.exp(1j * phi.values)

    e_src = phase_matrix(grid, k / z1)
    e_det = phase_matrix(grid, k / z2)
    amp = ((e_src * lens) @ e_det.T) * dx  # A[xi, x]
    det_chirp = np.exp(1j * k * x**2 / (2 * z2))

    def rows(sl):
        return ((amp[:, sl].T * src) @ amp) * dx

    psi = np.concatenate(pmap(rows, chunks(grid.n), workers), axis=0)
    psi = psi * det_chirp[:, None] * det_chirp[None, :]

    g = obj.transmittance
    rate = np.sum(np.abs(psi * g[None, :]) ** 2, axis=1) * dx

    notes = []
    if not (grid.is_matched(k, z1) and grid.is_matched(k, z2)):
        notes.append("grid is not DFT-matched to both z1 and z2; plane-wave sums are not exact deltas")
    image = CoincidenceImage(grid, normalize_peak(rate), "oracle", warnings=tuple(notes))
    return TwoPhotonAmplitude(grid, psi), image


def steering_indices(n: int, n_steer: int) -> np.ndarray:
    """Lens samples hit by the steered beam, centred on the axis."""
    if n_steer < 1:
        raise ValueError("n_steer must be >= 1")
    if n % n_steer:
        raise ValueError(f"n_steer={n_steer} must divide the grid size {n}")
    stride = n // n_steer
    return n // 2 + (np.arange(n_steer) - n_steer // 2) * stride


def classical_ghost(
    layout: OpticalLayout,
    obj: ObjectMask,
    phi: PhaseMap,
    n_steer: int | None = None,
    workers: int = 1,
) -> CoincidenceImage:
    """Rotating-mirror source: for each steering sample the split beams cross
    the lens at x' and -x' and the pair amplitude is the product of the two
    single-beam responses, exp(-i k (x1 - x2).x' / z2) exp(i(phi(x') + phi(-x'))).
    Samples are summed coherently over the steering range; ``n_steer`` is
    per axis and defaults to N.  A single on-axis sample carries no position
    information and yields a flat image.
    """
    check_same_grid(obj.grid, phi.grid)
    grid = obj.grid
    n_steer = grid.n if n_steer is None else n_steer
    sel = steering_indices(grid.n, n_steer)
    weight = (grid.n // n_steer * grid.spacing) ** grid.dims

    pair = np.exp(1j * (phi.values + reflect(phi.values)))
    mat = phase_matrix(grid, layout.k / layout.z2)[:, sel]

    if grid.dims == 1:
        q = pair[sel]

        def part(sl):
            return mat[:, sl] @ q[sl]

    else:
        q = pair[np.ix_(sel, sel)]
        right = q @ mat.T  # steering y already contracted

        def part(sl):
            return mat[:, sl] @ right[sl]

    amp = tree_sum(pmap(part, chunks(len(sel)), workers)) * weight
    kernel = np.abs(amp) ** 2
    rate = cyclic_convolve(obj.intensity(), kernel, grid.cell)
    return CoincidenceImage(grid, normalize_peak(rate), "classical", warnings=_wrap_warnings(kernel, grid))


# --- metrics ------------------------------------------------------------------


def _fwhm_1d(profile: np.ndarray, p: int) -> float:
    half = profile[p] / 2
    n = profile.size

    def crossing(step):
        i = p
        while 0 <= i + step < n and profile[i + step] >= half:
            i += step
        if not 0 <= i + step < n:
            return float(i)
        a, b = profile[i], profile[i + step]
        return i + step * (a - half) / (a - b)

    return crossing(1) - crossing(-1)


def kernel_fwhm(values: np.ndarray, grid: GridGeometry) -> float:
    """Interpolated FWHM through the peak; geometric mean of the axis cuts in 2D."""
    if not np.max(values) > 0:
        return 0.0
    p = np.unravel_index(int(np.argmax(values)), values.shape)
    if values.ndim == 1:
        return _fwhm_1d(values, p[0]) * grid.spacing
    wx = _fwhm_1d(values[:, p[1]], p[0])
    wy = _fwhm_1d(values[p[0], :], p[1])
    return math.sqrt(wx * wy) * grid.spacing


def peak_location(values: np.ndarray, grid: GridGeometry) -> tuple[float, ...]:
    p = np.unravel_index(int(np.argmax(values)), values.shape)
    ax = grid.axis()
    return tuple(float(ax[i]) for i in p)


def rms_error(image: np.ndarray, reference: np.ndarray) -> float:
    d = normalize_peak(image) - normalize_peak(reference)
    return float(np.sqrt(np.mean(d * d)))


def image_metrics(image: CoincidenceImage, reference: CoincidenceImage) -> ImageMetrics:
    check_same_grid(image.grid, reference.grid)
    return ImageMetrics(
        rms_error=rms_error(image.rate, reference.rate),
        peak_location=peak_location(image.rate, image.grid),
        kernel_fwhm=kernel_fwhm(image.rate, image.grid),
    )
