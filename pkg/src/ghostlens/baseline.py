"""Incoherently illuminated single-lens imaging, for comparison with the ghost engines.

The image is I(x1) = sum_xi |G(xi) E(xi)|^2 |FT exp(i phi)|^2 at k (xi/z1 + x1/z2).
Writing d = x1 + (z2/z1) xi turns the frequency into k d / z2, so the image is
the object intensity placed at the magnified positions M xi (M = -z2/z1)
convolved with the same kind of kernel the ghost engine uses, built from
exp(i phi) instead of exp(2i phi_even).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aberration import PhaseMap, pupil_factor
from .ghost import (
    CoincidenceImage,
    ImageMetrics,
    _wrap_warnings,
    coherent_kernel,
    cyclic_convolve,
    ghost_fast,
    ghost_kernel,
    image_metrics,
    kernel_fwhm,
    normalize_peak,
)
from .scene import GridGeometry, ObjectMask, OpticalLayout, PumpModel, check_same_grid, sample_pump


def baseline_kernel(layout: OpticalLayout, phi: PhaseMap) -> np.ndarray:
    return coherent_kernel(layout, pupil_factor(phi))


def magnify(weights: np.ndarray, grid: GridGeometry, m: float) -> np.ndarray:
    """Move each sample from x to m*x with linear (hat) weights.

    Equivalent to interpolating the kernel linearly at off-grid offsets
    x1 - m*xi.  Positions beyond |x| = L/2 leave the detector and are
    dropped; +L/2 wraps onto the -L/2 sample of the periodic grid.
    """
    n = grid.n
    out = np.zeros(grid.shape)
    idx = np.arange(n)
    pos = m * (idx - n // 2) + n // 2  # fractional target index per axis
    lo = np.floor(pos).astype(int)
    frac = pos - lo
    inside = (pos >= 0) & (pos <= n)
    per_axis = []
    for shift, w in ((0, 1 - frac), (1, frac)):
        tgt = lo + shift
        ok = inside & (w > 0) & (tgt >= 0) & (tgt <= n)
        per_axis.append((tgt % n, np.where(ok, w, 0.0)))
    if grid.dims == 1:
        for tgt, w in per_axis:
            np.add.at(out, tgt, weights * w)
        return out
    for tx, wx in per_axis:
        for ty, wy in per_axis:
            np.add.at(out, (tx[:, None], ty[None, :]), weights * wx[:, None] * wy[None, :])
    return out


def incoherent_image(
    layout: OpticalLayout,
    obj: ObjectMask,
    phi: PhaseMap,
    illumination: PumpModel | None = None,
) -> CoincidenceImage:
    check_same_grid(obj.grid, phi.grid)
    grid = obj.grid
    illumination = PumpModel() if illumination is None else illumination
    src = np.abs(obj.transmittance * sample_pump(illumination, grid).values) ** 2
    kernel = baseline_kernel(layout, phi)
    placed = magnify(src, grid, layout.magnification)
    rate = cyclic_convolve(placed, kernel, grid.cell)
    return CoincidenceImage(grid, normalize_peak(rate), "baseline", warnings=_wrap_warnings(kernel, grid))


@dataclass(frozen=True)
class Comparison:
    ghost: CoincidenceImage
    baseline: CoincidenceImage
    ghost_ideal: CoincidenceImage
    baseline_ideal: CoincidenceImage
    ghost_metrics: ImageMetrics
    baseline_metrics: ImageMetrics
    ghost_kernel_fwhm: float
    baseline_kernel_fwhm: float


def compare_ghost_vs_baseline(
    layout: OpticalLayout,
    obj: ObjectMask,
    phi: PhaseMap,
    illumination: PumpModel | None = None,
) -> Comparison:
    """Both images, each scored against its own aberration-free version."""
    zero = PhaseMap.zeros(phi.grid)
    g = ghost_fast(layout, obj, phi)
    g0 = ghost_fast(layout, obj, zero)
    b = incoherent_image(layout, obj, phi, illumination)
    b0 = incoherent_image(layout, obj, zero, illumination)
    return Comparison(
        ghost=g,
        baseline=b,
        ghost_ideal=g0,
        baseline_ideal=b0,
        ghost_metrics=image_metrics(g, g0),
        baseline_metrics=image_metrics(b, b0),
        ghost_kernel_fwhm=kernel_fwhm(ghost_kernel(layout, phi), phi.grid),
        baseline_kernel_fwhm=kernel_fwhm(baseline_kernel(layout, phi), phi.grid),
    )
