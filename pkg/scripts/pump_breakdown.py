"""Finite pump width: how far the odd-aberration cancellation degrades as the pump narrows.

    python scripts/pump_breakdown.py --radians 20
"""
import argparse

from ghostlens import GridGeometry, PhaseMap, PumpModel, make_layout, standard_objects
from ghostlens.aberration import AberrationSpec, MonomialTerm, synthesize_phase
from ghostlens.ghost import ghost_oracle, rms_error


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=256)
    ap.add_argument("--radians", type=float, default=20.0, help="cubic phase at the grid edge")
    ap.add_argument("--rungs", type=int, default=6, help="widths L, L/2, ... L/2**(rungs-1)")
    args = ap.parse_args()

    lay = make_layout(0.5e-6, 0.2, 0.2)
    grid = GridGeometry.matched(lay, args.samples)
    obj = standard_objects("double-slit", grid)
    a = args.radians / (grid.extent / 2) ** 3
    phi = synthesize_phase(AberrationSpec((MonomialTerm(3, None, a),)), grid)
    zero = PhaseMap.zeros(grid)

    print(f"{'width/L':>8} {'rms vs same-pump ideal':>24}")
    plane = rms_error(ghost_oracle(lay, obj, phi, PumpModel())[1].rate,
                      ghost_oracle(lay, obj, zero, PumpModel())[1].rate)
    print(f"{'plane':>8} {plane:24.3e}")
    for r in range(args.rungs):
        pump = PumpModel("gaussian", grid.extent / 2**r)
        err = rms_error(ghost_oracle(lay, obj, phi, pump)[1].rate, ghost_oracle(lay, obj, zero, pump)[1].rate)
        print(f"{1 / 2**r:8.4f} {err:24.3e}")


if __name__ == "__main__":
    main()
