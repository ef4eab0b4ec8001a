"""Command line: ``ghostlens run|decompose|noise <config>`` and ``ghostlens objects list``.

Flags may also come from the environment (flag wins): GHOSTLENS_OUT,
GHOSTLENS_SEED, GHOSTLENS_THREADS, GHOSTLENS_QUIET.

Exit codes: 0 success, 2 config error, 3 guard violation, 4 I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .aberration import PhaseMap, decompose_parity, synthesize_phase
from .baseline import baseline_kernel, incoherent_image
from .config import ConfigError, GuardViolation, ScenarioConfig, load_noise, load_scenario
from .ghost import (
    GuardError,
    classical_ghost,
    ghost_fast,
    ghost_kernel,
    ghost_oracle,
    kernel_fwhm,
    peak_location,
    rms_error,
)
from .io import load_mask, write_csv, write_json, write_pgm, write_scaled_pgm
from .noise import cancellation_report
from .scene import OBJECT_NAMES, PumpModel, standard_objects

ENV_PREFIX = "GHOSTLENS_"
EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_IO = 0, 2, 3, 4


def build_object(cfg: ScenarioConfig):
    if cfg.object.pgm is not None:
        p = Path(cfg.object.pgm)
        if not p.is_absolute():
            p = Path(cfg.source).parent / p
        return load_mask(p, cfg.grid)
    return standard_objects(cfg.object.name, cfg.grid, **cfg.object.params)


def _engine_runner(cfg: ScenarioConfig, obj, workers: int):
    lay = cfg.layout
    return {
        "ghost-fast": lambda phi: ghost_fast(lay, obj, phi),
        "ghost-oracle": lambda phi: ghost_oracle(
            lay, obj, phi, cfg.pump, far_field=cfg.oracle_far_field,
            max_samples=cfg.oracle_max_samples, workers=workers)[1],
        "classical": lambda phi: classical_ghost(lay, obj, phi, cfg.n_steer, workers=workers),
        "baseline": lambda phi: incoherent_image(lay, obj, phi, PumpModel()),
    }


def _write_image(out: Path, stem: str, grid, values) -> str:
    if grid.dims == 1:
        name = f"{stem}.csv"
        write_csv(out / name, {"coordinate": grid.axis(), "value": values})
    else:
        name = f"{stem}.pgm"
        write_pgm(out / name, np.rint(np.clip(values, 0, 1) * 65535).astype(int), 65535)
    return name


def run_scenario(cfg: ScenarioConfig, out_dir=None, workers: int = 1) -> dict:
    """Run every requested engine on the shared scene and write images, metrics.json and summary.txt."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid
    obj = build_object(cfg)
    phi = synthesize_phase(cfg.aberration, grid)
    zero = PhaseMap.zeros(grid)
    runners = _engine_runner(cfg, obj, workers)

    images, ideals, files = {}, {}, {}
    for name in cfg.engines:
        try:
            images[name] = runners[name](phi)
            ideals[name] = runners[name](zero)
        except GuardError as exc:
            raise GuardViolation(str(exc), cfg.source) from None
        files[name] = _write_image(out, name, grid, images[name].rate)
    files["object"] = _write_image(out, "object", grid, obj.intensity())

    names = list(cfg.engines)
    metrics = {
        "seed": cfg.seed,
        "grid": {"dims": grid.dims, "samples": grid.n, "extent": grid.extent, "spacing": grid.spacing},
        "layout": {"wavelength": cfg.layout.wavelength, "z1": cfg.layout.z1, "z2": cfg.layout.z2,
                   "focal_length": cfg.layout.f},
        "engines": names,
        "files": files,
        "rms_error": {a: {b: rms_error(images[a].rate, images[b].rate) for b in names} for a in names},
        "rms_vs_ideal": {a: rms_error(images[a].rate, ideals[a].rate) for a in names},
        "peak_location": {a: list(peak_location(images[a].rate, grid)) for a in names},
        "image_fwhm": {a: kernel_fwhm(images[a].rate, grid) for a in names},
        "kernel_fwhm": {
            "ghost": kernel_fwhm(ghost_kernel(cfg.layout, phi), grid),
            "baseline": kernel_fwhm(baseline_kernel(cfg.layout, phi), grid),
        },
        "warnings": {a: list(images[a].warnings) for a in names if images[a].warnings},
    }
    write_json(out / "metrics.json", metrics)

    lines = [
        f"scenario: {cfg.source}",
        f"grid: {grid.dims}D, N={grid.n}, extent={grid.extent:.6g} m, spacing={grid.spacing:.6g} m",
        f"layout: wavelength={cfg.layout.wavelength:.6g} m, z1={cfg.layout.z1:.6g} m, "
        f"z2={cfg.layout.z2:.6g} m, f={cfg.layout.f:.6g} m",
        f"aberration terms: {len(cfg.aberration.terms)}",
        "",
        f"{'engine':<14}{'rms vs ideal':>14}{'image fwhm [m]':>16}  peak [m]",
    ]
    for a in names:
        peak = ", ".join(f"{v:.4g}" for v in metrics["peak_location"][a])
        lines.append(f"{a:<14}{metrics['rms_vs_ideal'][a]:>14.3e}{metrics['image_fwhm'][a]:>16.4g}  ({peak})")
    lines.append("")
    lines.append(f"kernel fwhm: ghost {metrics['kernel_fwhm']['ghost']:.4g} m, "
                 f"baseline {metrics['kernel_fwhm']['baseline']:.4g} m")
    for a, ws in metrics["warnings"].items():
        for w in ws:
            lines.append(f"warning [{a}]: {w}")
    summary = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(summary)
    return {"out": str(out), "metrics": metrics, "summary": summary}


def decompose_cmd(cfg: ScenarioConfig, out_dir=None) -> dict:
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    phi = synthesize_phase(cfg.aberration, cfg.grid)
    even, odd = decompose_parity(phi)
    err = float(np.max(np.abs(even.values + odd.values - phi.values)))
    maps = {"phi": phi.values, "even": even.values, "odd": odd.values}
    for name, v in maps.items():
        write_scaled_pgm(out / f"{name}.pgm", v)
    if cfg.grid.dims == 1:
        write_csv(out / "decompose.csv", {"coordinate": cfg.grid.axis(), **maps})
    report = {
        "reconstruction_error": err,
        "max_abs": {k: float(np.max(np.abs(v))) for k, v in maps.items()},
    }
    write_json(out / "decompose.json", report)
    return report


def noise_cmd(path, out_dir=None, seed=None, workers: int = 1) -> dict:
    cfg, cfg_out = load_noise(path)
    if seed is not None:
        cfg = replace(cfg, base_seed=seed)
    out = Path(out_dir or cfg_out)
    out.mkdir(parents=True, exist_ok=True)
    report = cancellation_report(cfg)
    write_json(out / "noise_report.json", report)
    return report


def _env(name, cast):
    v = os.environ.get(ENV_PREFIX + name)
    return None if v in (None, "") else cast(v)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="seed (u64)")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--quiet", action="store_true", default=None, help="suppress the summary")

    ap = argparse.ArgumentParser(prog="ghostlens", description="Odd-aberration-cancelled coincidence imaging simulator")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name, help_ in (("run", "run a scenario"), ("decompose", "split an aberration into even/odd parts"),
                        ("noise", "dark-current cancellation Monte Carlo")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("config")
    objs = sub.add_parser("objects", parents=[common], help="standard objects")
    objs.add_argument("action", choices=["list"])
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = args.out or _env("OUT", str)
    seed = args.seed if args.seed is not None else _env("SEED", int)
    threads = args.threads if args.threads is not None else (_env("THREADS", int) or 1)
    quiet = args.quiet if args.quiet is not None else bool(_env("QUIET", int))
    if seed is not None and not 0 <= seed < 2**64:
        print("error: seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.cmd == "objects":
            for name in OBJECT_NAMES:
                print(name)
            return EXIT_OK
        if args.cmd == "noise":
            report = noise_cmd(args.config, out, seed, threads)
            if not quiet:
                for r in report["rungs"]:
                    print(f"n={r['n']:>9}  g2 with dark={r['g2_with_dark']:.5f}  without={r['g2_without']:.5f}  "
                          f"mean|delta|={r['mean_abs_delta']:.3e}  stderr={r['stderr']:.3e}")
            return EXIT_OK
        cfg = load_scenario(args.config)
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if args.cmd == "decompose":
            report = decompose_cmd(cfg, out)
            if not quiet:
                print(f"reconstruction error {report['reconstruction_error']:.3e}")
            return EXIT_OK
        result = run_scenario(cfg, out, threads)
        if not quiet:
            print(result["summary"], end="")
        return EXIT_OK
    except GuardViolation as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
