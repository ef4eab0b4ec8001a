"""Scenario configuration: YAML files with a fixed schema.

Unknown keys, duplicate keys, wrong types and physically inconsistent values
are all rejected with the line number of the offending entry.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .aberration import AberrationSpec, MonomialTerm, ZernikeTerm
from .noise import NoiseConfig
from .scene import IMAGING_RTOL, OBJECT_NAMES, GridGeometry, OpticalLayout, PumpModel, make_layout

SCHEMA_VERSION = 1
ENGINES = ("ghost-fast", "ghost-oracle", "classical", "baseline")
OBJECT_PARAMS = {
    "double-slit": ("slit_width", "separation"),
    "bar-target": ("bar_width", "bars"),
    "letter-E": ("height",),
    "point": ("offset",),
    "uniform": (),
}


class ConfigError(Exception):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        self.line = line
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


class GuardViolation(ConfigError):
    """The scenario asks an engine for something outside its guard rails."""


# --- YAML with line numbers ----------------------------------------------------


class _Doc:
    """Parsed YAML plus the source line of every key path."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.lines: dict[tuple, int] = {}
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", source,
                              mark.line + 1 if mark else None) from None
        if node is None:
            raise ConfigError("empty configuration", source)
        self.lines[()] = node.start_mark.line + 1
        self.data = self._build(node, ())

    def _build(self, node, path):
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = k.value
                if key in out:
                    raise ConfigError(f"duplicate key {key!r}", self.source, k.start_mark.line + 1)
                self.lines[path + (key,)] = k.start_mark.line + 1
                out[key] = self._build(v, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            items = []
            for i, v in enumerate(node.value):
                self.lines[path + (i,)] = v.start_mark.line + 1
                items.append(self._build(v, path + (i,)))
            return items
        return yaml.SafeLoader("").construct_object(node)

    def line(self, path) -> int | None:
        path = tuple(path)
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)

    def error(self, path, message, cls=ConfigError):
        return cls(message, self.source, self.line(path))


def _section(doc: _Doc, data: Any, path: tuple, allowed: tuple[str, ...], required: tuple[str, ...] = ()):
    if not isinstance(data, dict):
        raise doc.error(path, f"{'.'.join(map(str, path)) or 'top level'} must be a mapping")
    for key in data:
        if key not in allowed:
            raise doc.error(path + (key,), f"unknown key {key!r} in {'.'.join(map(str, path)) or 'top level'} "
                                           f"(allowed: {', '.join(allowed)})")
    for key in required:
        if key not in data:
            raise doc.error(path, f"missing required key {key!r} in {'.'.join(map(str, path)) or 'top level'}")
    return data


def _num(doc, data, path, key, default=None, positive=False, integer=False):
    if key not in data:
        return default
    v = data[key]
    if isinstance(v, str) and not integer:
        # YAML 1.1 reads exponent-only floats such as 5e-7 as strings
        try:
            v = float(v)
        except ValueError:
            pass
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise doc.error(path + (key,), f"{key} must be {kind}, got {v!r}")
    if positive and not v > 0:
        raise doc.error(path + (key,), f"{key} must be positive, got {v!r}")
    return v


def _load(path) -> _Doc:
    p = Path(path)
    return _Doc(p.read_text(), str(p))


def _check_version(doc: _Doc):
    if "schema_version" not in doc.data:
        raise doc.error((), "missing mandatory key 'schema_version'")
    if doc.data["schema_version"] != SCHEMA_VERSION:
        raise doc.error(("schema_version",), f"unsupported schema_version {doc.data['schema_version']!r} "
                                             f"(this build reads {SCHEMA_VERSION})")


# --- scenario -------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectSpec:
    name: str | None = "double-slit"
    pgm: str | None = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioConfig:
    layout: OpticalLayout
    grid: GridGeometry
    aberration: AberrationSpec
    object: ObjectSpec
    pump: PumpModel
    engines: tuple[str, ...] = ENGINES
    n_steer: int | None = None
    oracle_max_samples: int = 512
    oracle_far_field: bool = True
    output_dir: str = "out"
    seed: int = 0
    source: str = "<config>"


TOP_KEYS = ("schema_version", "layout", "grid", "aberration", "object", "pump", "engines",
            "classical", "oracle", "output", "seed")


def _layout(doc, data) -> OpticalLayout:
    p = ("layout",)
    sec = _section(doc, data, p, ("wavelength", "z1", "z2", "focal_length"), ("wavelength", "z1", "z2"))
    lam = _num(doc, sec, p, "wavelength", positive=True)
    z1 = _num(doc, sec, p, "z1", positive=True)
    z2 = _num(doc, sec, p, "z2", positive=True)
    layout = make_layout(float(lam), float(z1), float(z2))
    f = _num(doc, sec, p, "focal_length", positive=True)
    if f is not None and abs(1 / layout.z1 + 1 / layout.z2 - 1 / f) > IMAGING_RTOL / f:
        raise doc.error(p + ("focal_length",),
                        f"imaging condition 1/z1 + 1/z2 = 1/f violated: 1/{z1} + 1/{z2} = "
                        f"{1 / z1 + 1 / z2!r} but 1/f = {1 / f!r}")
    return layout


def _grid(doc, data, layout) -> GridGeometry:
    p = ("grid",)
    sec = _section(doc, data, p, ("dims", "samples", "extent"))
    dims = _num(doc, sec, p, "dims", 1, integer=True)
    if dims not in (1, 2):
        raise doc.error(p + ("dims",), f"dims must be 1 or 2, got {dims}")
    n = _num(doc, sec, p, "samples", 256, positive=True, integer=True)
    if n % 2:
        raise doc.error(p + ("samples",), f"samples must be even, got {n}")
    extent = _num(doc, sec, p, "extent", positive=True)
    if extent is None:
        return GridGeometry.matched(layout, n, dims)
    return GridGeometry(dims, n, float(extent))


def _terms(doc, data, grid):
    p = ("aberration",)
    sec = _section(doc, data, p, ("aperture_radius", "terms"))
    radius = float(_num(doc, sec, p, "aperture_radius", grid.extent / 2, positive=True))
    raw = sec.get("terms", [])
    if not isinstance(raw, list):
        raise doc.error(p + ("terms",), "terms must be a list")
    terms = []
    for i, t in enumerate(raw):
        tp = p + ("terms", i)
        if not isinstance(t, dict) or "kind" not in t:
            raise doc.error(tp, "each term needs a 'kind' (zernike or monomial)")
        kind = t["kind"]
        if kind == "zernike":
            _section(doc, t, tp, ("kind", "noll_index", "coefficient"), ("noll_index", "coefficient"))
            if grid.dims != 2:
                raise doc.error(tp, "zernike terms need a 2D grid (grid.dims = 2)")
            j = _num(doc, t, tp, "noll_index", positive=True, integer=True)
            try:
                terms.append(ZernikeTerm(j, float(_num(doc, t, tp, "coefficient"))))
            except ValueError as exc:
                raise doc.error(tp + ("noll_index",), str(exc)) from None
        elif kind == "monomial":
            _section(doc, t, tp, ("kind", "px", "py", "coefficient", "radians_at_aperture"), ("px",))
            px = _num(doc, t, tp, "px", integer=True)
            py = _num(doc, t, tp, "py", 0, integer=True)
            if px < 0 or py < 0:
                raise doc.error(tp, "monomial powers must be non-negative")
            if py and grid.dims == 1:
                raise doc.error(tp + ("py",), "a y power needs a 2D grid")
            has_c, has_r = "coefficient" in t, "radians_at_aperture" in t
            if has_c == has_r:
                raise doc.error(tp, "give exactly one of 'coefficient' (rad/m^(px+py)) or 'radians_at_aperture'")
            if has_c:
                c = float(_num(doc, t, tp, "coefficient"))
            else:
                c = float(_num(doc, t, tp, "radians_at_aperture")) / radius ** (px + py)
            terms.append(MonomialTerm(px, py if grid.dims == 2 else None, c))
        else:
            raise doc.error(tp + ("kind",), f"unknown term kind {kind!r} (zernike or monomial)")
    return AberrationSpec(tuple(terms), radius)


def _object(doc, data) -> ObjectSpec:
    p = ("object",)
    if not isinstance(data, dict):
        raise doc.error(p, "object must be a mapping")
    if "pgm" in data:
        _section(doc, data, p, ("pgm",))
        return ObjectSpec(name=None, pgm=str(data["pgm"]))
    name = data.get("name", "double-slit")
    if name not in OBJECT_NAMES:
        raise doc.error(p + ("name",), f"unknown object {name!r} (choose from {', '.join(OBJECT_NAMES)})")
    _section(doc, data, p, ("name",) + OBJECT_PARAMS[name])
    params = {}
    for k, v in data.items():
        if k == "name":
            continue
        if k == "offset" and isinstance(v, list):
            params[k] = tuple(float(_num(doc, {k: x}, p, k)) for x in v)
        elif k == "bars":
            params[k] = _num(doc, data, p, k, positive=True, integer=True)
        else:
            params[k] = float(_num(doc, data, p, k, positive=(k != "offset")))
    return ObjectSpec(name=name, params=params)


def _pump(doc, data) -> PumpModel:
    p = ("pump",)
    sec = _section(doc, data, p, ("kind", "width", "amplitude"))
    kind = sec.get("kind", "plane")
    if kind not in ("plane", "gaussian"):
        raise doc.error(p + ("kind",), f"pump kind must be plane or gaussian, got {kind!r}")
    width = _num(doc, sec, p, "width", positive=True)
    if kind == "gaussian" and width is None:
        raise doc.error(p, "gaussian pump needs a width")
    return PumpModel(kind, None if width is None else float(width), float(_num(doc, sec, p, "amplitude", 1.0)))


def load_scenario(path) -> ScenarioConfig:
    doc = _load(path)
    top = _section(doc, doc.data, (), TOP_KEYS, ("layout",))
    _check_version(doc)
    try:
        layout = _layout(doc, top["layout"])
    except ValueError as exc:
        raise doc.error(("layout",), str(exc)) from None
    grid = _grid(doc, top.get("grid", {}), layout)
    aberration = _terms(doc, top.get("aberration", {}), grid)
    obj = _object(doc, top.get("object", {}))
    pump = _pump(doc, top.get("pump", {}))

    default = list(ENGINES) if grid.dims == 1 else [e for e in ENGINES if e != "ghost-oracle"]
    engines = top.get("engines", default)
    if not isinstance(engines, list) or not engines:
        raise doc.error(("engines",), "engines must be a non-empty list")
    for i, e in enumerate(engines):
        if e not in ENGINES:
            raise doc.error(("engines", i), f"unknown engine {e!r} (choose from {', '.join(ENGINES)})")

    cl = _section(doc, top.get("classical", {}), ("classical",), ("n_steer",))
    n_steer = _num(doc, cl, ("classical",), "n_steer", positive=True, integer=True)
    if n_steer is not None and grid.n % n_steer:
        raise doc.error(("classical", "n_steer"), f"n_steer={n_steer} must divide grid.samples={grid.n}")

    orc = _section(doc, top.get("oracle", {}), ("oracle",), ("max_samples", "far_field"))
    max_samples = _num(doc, orc, ("oracle",), "max_samples", 512, positive=True, integer=True)
    far_field = orc.get("far_field", True)
    if not isinstance(far_field, bool):
        raise doc.error(("oracle", "far_field"), "far_field must be true or false")
    if "ghost-oracle" in engines:
        where = ("engines", engines.index("ghost-oracle"))
        if grid.dims != 1:
            raise doc.error(where, "guard: ghost-oracle is 1D only (grid.dims must be 1)", GuardViolation)
        if grid.n > max_samples:
            raise doc.error(where, f"guard: ghost-oracle limited to {max_samples} samples, grid has {grid.n}",
                            GuardViolation)

    out = _section(doc, top.get("output", {}), ("output",), ("dir",))
    seed = _num(doc, top, (), "seed", 0, integer=True)
    return ScenarioConfig(
        layout=layout, grid=grid, aberration=aberration, object=obj, pump=pump,
        engines=tuple(dict.fromkeys(engines)), n_steer=n_steer, oracle_max_samples=max_samples,
        oracle_far_field=far_field, output_dir=str(out.get("dir", "out")), seed=seed, source=doc.source,
    )


# --- noise ----------------------------------------------------------------------

NOISE_KEYS = ("ladder", "replicates", "rho", "signal_std", "dark_std_1", "dark_std_2",
              "signal_means", "dark_means", "base_seed")


def load_noise(path) -> tuple[NoiseConfig, str]:
    doc = _load(path)
    top = _section(doc, doc.data, (), ("schema_version", "noise", "output"), ("noise",))
    _check_version(doc)
    p = ("noise",)
    sec = _section(doc, top["noise"], p, NOISE_KEYS)
    defaults = NoiseConfig()
    kw = {}
    for key in ("rho", "signal_std", "dark_std_1", "dark_std_2"):
        v = _num(doc, sec, p, key)
        if v is not None:
            kw[key] = float(v)
    if "rho" in kw and not -1 <= kw["rho"] <= 1:
        raise doc.error(p + ("rho",), f"rho must lie in [-1, 1], got {kw['rho']}")
    for key in ("signal_std", "dark_std_1", "dark_std_2"):
        if kw.get(key, 0) < 0:
            raise doc.error(p + (key,), f"{key} must be non-negative")
    for key in ("replicates", "base_seed"):
        v = _num(doc, sec, p, key, integer=True, positive=(key == "replicates"))
        if v is not None:
            kw[key] = v
    if "ladder" in sec:
        lad = sec["ladder"]
        if not isinstance(lad, list) or not lad or not all(isinstance(v, int) and v >= 2 for v in lad):
            raise doc.error(p + ("ladder",), "ladder must be a list of integers >= 2")
        kw["ladder"] = tuple(lad)
    for key in ("signal_means", "dark_means"):
        if key in sec:
            v = sec[key]
            if not (isinstance(v, list) and len(v) == 2 and all(isinstance(a, (int, float)) for a in v)):
                raise doc.error(p + (key,), f"{key} must be a pair of numbers")
            kw[key] = (float(v[0]), float(v[1]))
    out = _section(doc, top.get("output", {}), ("output",), ("dir",))
    return NoiseConfig(**{**defaults.__dict__, **kw}), str(out.get("dir", "out"))
