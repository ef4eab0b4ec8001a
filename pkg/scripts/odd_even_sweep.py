"""Sweep cubic (odd) and quadratic (even) aberration strength; compare ghost vs baseline blur.

    python scripts/odd_even_sweep.py --samples 256 --out out/sweep.csv
"""
import argparse

import numpy as np

from ghostlens import (
    AberrationSpec,
    GridGeometry,
    MonomialTerm,
    compare_ghost_vs_baseline,
    make_layout,
    standard_objects,
    synthesize_phase,
)
from ghostlens.io import write_csv


def phase(grid, power, radians):
    c = radians / (grid.extent / 2) ** power
    return synthesize_phase(AberrationSpec((MonomialTerm(power, None, c),)), grid)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=256)
    ap.add_argument("--max-radians", type=float, default=40.0)
    ap.add_argument("--steps", type=int, default=9)
    ap.add_argument("--out", default=None, help="optional CSV path")
    args = ap.parse_args()

    lay = make_layout(0.5e-6, 0.2, 0.2)
    grid = GridGeometry.matched(lay, args.samples)
    obj = standard_objects("double-slit", grid)
    amps = np.linspace(0, args.max_radians, args.steps)
    rows = {k: [] for k in ("radians", "odd_ghost", "odd_baseline", "even_ghost", "even_baseline")}
    print(f"{'rad':>6} {'odd ghost':>11} {'odd base':>10} {'even ghost':>11} {'even base':>10}")
    for a in amps:
        odd = compare_ghost_vs_baseline(lay, obj, phase(grid, 3, a))
        even = compare_ghost_vs_baseline(lay, obj, phase(grid, 2, a / 8))
        vals = (a, odd.ghost_metrics.rms_error, odd.baseline_metrics.rms_error,
                even.ghost_metrics.rms_error, even.baseline_metrics.rms_error)
        for k, v in zip(rows, vals):
            rows[k].append(v)
        print(f"{vals[0]:6.1f} {vals[1]:11.2e} {vals[2]:10.3f} {vals[3]:11.3f} {vals[4]:10.3f}")
    if args.out:
        write_csv(args.out, {k: np.array(v) for k, v in rows.items()})


if __name__ == "__main__":
    main()
