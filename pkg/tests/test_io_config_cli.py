import json
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostlens.aberration import synthesize_phase
from ghostlens.cli import main
from ghostlens.config import ConfigError, GuardViolation, load_noise, load_scenario
from ghostlens.io import load_mask, read_csv, read_pgm, read_scaled_pgm, save_mask, write_csv, write_pgm, write_scaled_pgm
from ghostlens.parallel import chunks, pmap, tree_sum
from ghostlens.scene import GridGeometry, ObjectMask, standard_objects

from conftest import CONFIGS


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text).lstrip())
    return p


BASE = """
schema_version: 1
layout: {wavelength: 0.5e-6, z1: 0.2, z2: 0.2}
grid: {dims: 1, samples: 64}
"""


# --- io -------------------------------------------------------------------------


@pytest.mark.parametrize("maxval", [255, 65535])
def test_pgm_roundtrip(tmp_path, maxval):
    rng = np.random.default_rng(0)
    a = rng.integers(0, maxval + 1, (7, 13))
    write_pgm(tmp_path / "a.pgm", a, maxval)
    b, m = read_pgm(tmp_path / "a.pgm")
    assert m == maxval
    np.testing.assert_array_equal(a, b)


def test_pgm_header_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n3 1\n# another\n255\n" + bytes([0, 128, 255]))
    a, m = read_pgm(p)
    assert a.tolist() == [[0, 128, 255]] and m == 255


def test_pgm_rejects_ascii(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(ValueError, match="binary PGM"):
        read_pgm(p)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_mask_roundtrip_within_quantum(tmp_path_factory, seed):
    g = GridGeometry(2, 16, 1.0)
    t = np.random.default_rng(seed).uniform(0, 1, g.shape)
    p = tmp_path_factory.mktemp("m") / "m.pgm"
    save_mask(ObjectMask(g, t), p)
    back = load_mask(p, g)
    assert np.max(np.abs(back.transmittance - t)) <= 0.5 / 255 + 1e-15


def test_scaled_pgm_roundtrip(tmp_path):
    v = np.linspace(-3.0, 7.0, 64).reshape(8, 8)
    write_scaled_pgm(tmp_path / "s.pgm", v)
    assert np.max(np.abs(read_scaled_pgm(tmp_path / "s.pgm") - v)) <= 10.0 / 65535
    write_scaled_pgm(tmp_path / "z.pgm", np.zeros((4, 4)))
    assert not read_scaled_pgm(tmp_path / "z.pgm").any()


def test_mask_shape_mismatch(tmp_path):
    g = GridGeometry(1, 32, 1.0)
    save_mask(standard_objects("uniform", g), tmp_path / "m.pgm")
    with pytest.raises(ValueError, match="shape"):
        load_mask(tmp_path / "m.pgm", GridGeometry(1, 64, 1.0))


def test_csv_roundtrip(tmp_path):
    x = np.random.default_rng(1).normal(size=20)
    write_csv(tmp_path / "a.csv", {"x": x, "y": 2 * x})
    back = read_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back["x"], x)
    np.testing.assert_array_equal(back["y"], 2 * x)


# --- parallel -------------------------------------------------------------------


def test_chunks_cover():
    assert chunks(70, 32) == [slice(0, 32), slice(32, 64), slice(64, 70)]
    assert chunks(0) == []


def test_tree_sum_order():
    parts = [np.float64(v) for v in (1e16, 1.0, -1e16, 1.0, 3.0)]
    assert tree_sum(parts) == ((parts[0] + parts[1]) + (parts[2] + parts[3])) + parts[4]
    with pytest.raises(ValueError):
        tree_sum([])


def test_pmap_order():
    pieces = chunks(1000, 7)
    fn = lambda s: np.arange(s.start, s.stop).sum()
    assert pmap(fn, pieces, 1) == pmap(fn, pieces, 8)


# --- config ---------------------------------------------------------------------


def test_load_demo_configs():
    cfg = load_scenario(CONFIGS / "demo.yaml")
    assert cfg.grid.n == 256 and cfg.grid.is_matched(cfg.layout.k, cfg.layout.z2)
    assert cfg.engines == ("ghost-fast", "ghost-oracle", "classical", "baseline")
    assert load_scenario(CONFIGS / "demo_2d.yaml").grid.dims == 2
    ncfg, _ = load_noise(CONFIGS / "noise.yaml")
    assert ncfg.replicates == 20


def test_unknown_key_names_line(tmp_path):
    p = write(tmp_path, BASE + "object:\n  name: point\n  colour: red\n")
    with pytest.raises(ConfigError) as err:
        load_scenario(p)
    assert err.value.line == 6
    assert "colour" in str(err.value)


def test_duplicate_key(tmp_path):
    p = write(tmp_path, BASE + "seed: 1\nseed: 2\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_scenario(p)


def test_schema_version_required(tmp_path):
    p = write(tmp_path, "layout: {wavelength: 0.5e-6, z1: 0.2, z2: 0.2}\n")
    with pytest.raises(ConfigError, match="schema_version"):
        load_scenario(p)
    p = write(tmp_path, BASE.replace("schema_version: 1", "schema_version: 2"))
    with pytest.raises(ConfigError, match="schema_version"):
        load_scenario(p)


def test_imaging_condition_rejected(tmp_path):
    p = write(tmp_path, BASE.replace("z2: 0.2}", "z2: 0.2, focal_length: 0.12}"))
    with pytest.raises(ConfigError, match="imaging condition") as err:
        load_scenario(p)
    assert err.value.line == 2


def test_oracle_guard_2d(tmp_path):
    p = write(tmp_path, BASE.replace("dims: 1", "dims: 2") + "engines: [ghost-fast, ghost-oracle]\n")
    with pytest.raises(GuardViolation, match="1D only") as err:
        load_scenario(p)
    assert err.value.line == 4


def test_oracle_guard_size(tmp_path):
    p = write(tmp_path, BASE.replace("samples: 64", "samples: 1024") + "engines: [ghost-oracle]\n")
    with pytest.raises(GuardViolation, match="512"):
        load_scenario(p)


def test_n_steer_must_divide(tmp_path):
    p = write(tmp_path, BASE + "classical: {n_steer: 6}\n")
    with pytest.raises(ConfigError, match="divide"):
        load_scenario(p)


def test_monomial_radians_at_aperture(tmp_path):
    p = write(tmp_path, BASE + "aberration:\n  terms:\n    - {kind: monomial, px: 3, radians_at_aperture: 20}\n")
    cfg = load_scenario(p)
    phi = synthesize_phase(cfg.aberration, cfg.grid)
    x = cfg.grid.axis()
    i = int(np.argmin(np.abs(x - cfg.grid.extent / 4)))
    assert phi.values[i] == pytest.approx(20 * (x[i] / (cfg.grid.extent / 2)) ** 3, rel=1e-12)


# --- cli ------------------------------------------------------------------------


def test_objects_list(capsys):
    assert main(["objects", "list"]) == 0
    assert capsys.readouterr().out.split() == ["double-slit", "bar-target", "letter-E", "point", "uniform"]


def test_cli_guard_exit_code(tmp_path, capsys):
    p = write(tmp_path, BASE.replace("dims: 1", "dims: 2") + "engines: [ghost-oracle]\n")
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "ghost-oracle" in capsys.readouterr().err


def test_cli_config_exit_code(tmp_path, capsys):
    p = write(tmp_path, BASE.replace("z2: 0.2}", "z2: 0.2, focal_length: 0.3}"))
    assert main(["run", str(p)]) == 2
    assert "imaging condition" in capsys.readouterr().err


def test_cli_io_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "missing.yaml")]) == 4
    p = write(tmp_path, BASE + "object: {pgm: nowhere.pgm}\n")
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 4


def test_cli_bad_seed(tmp_path):
    p = write(tmp_path, BASE)
    assert main(["run", str(p), "--seed", str(2**64)]) == 2


def test_decompose_coma(tmp_path):
    assert main(["decompose", str(CONFIGS / "coma.yaml"), "--out", str(tmp_path), "--quiet"]) == 0
    rep = json.loads((tmp_path / "decompose.json").read_text())
    assert rep["reconstruction_error"] <= 1e-12
    assert rep["max_abs"]["even"] <= 1e-12 * rep["max_abs"]["phi"]
    odd = read_scaled_pgm(tmp_path / "odd.pgm")
    phi = read_scaled_pgm(tmp_path / "phi.pgm")
    np.testing.assert_array_equal(odd, phi)


def test_decompose_empty(tmp_path):
    p = write(tmp_path, BASE)
    assert main(["decompose", str(p), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rep = json.loads((tmp_path / "o" / "decompose.json").read_text())
    assert rep["max_abs"] == {"phi": 0.0, "even": 0.0, "odd": 0.0}


def test_decompose_mixed_1d(tmp_path):
    p = write(tmp_path, BASE + "aberration:\n  terms:\n"
              "    - {kind: monomial, px: 2, coefficient: 1.0e6}\n"
              "    - {kind: monomial, px: 3, coefficient: 1.0e9}\n")
    assert main(["decompose", str(p), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    cols = read_csv(tmp_path / "o" / "decompose.csv")
    x = cols["coordinate"]
    inner = slice(1, None)
    np.testing.assert_allclose(cols["even"][inner], 1e6 * x[inner] ** 2, rtol=1e-12)
    np.testing.assert_allclose(cols["odd"][inner], 1e9 * x[inner] ** 3, rtol=1e-12)


def test_noise_command(tmp_path):
    p = write(tmp_path, """
        schema_version: 1
        noise: {ladder: [1000, 4000], replicates: 3, dark_std_1: 2.0, dark_std_2: 2.0}
        """)
    assert main(["noise", str(p), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rep = json.loads((tmp_path / "o" / "noise_report.json").read_text())
    for rung in rep["rungs"]:
        assert {"n", "g2_with_dark", "g2_without", "delta", "stderr"} <= set(rung)


def test_noise_rejects_bad_rho(tmp_path):
    p = write(tmp_path, "schema_version: 1\nnoise:\n  rho: 2.0\n")
    with pytest.raises(ConfigError, match="rho") as err:
        load_noise(p)
    assert err.value.line == 3


def test_env_overrides(tmp_path, monkeypatch, capsys):
    p = write(tmp_path, BASE + "engines: [ghost-fast]\noutput: {dir: ignored}\n")
    monkeypatch.setenv("GHOSTLENS_OUT", str(tmp_path / "env"))
    monkeypatch.setenv("GHOSTLENS_SEED", "17")
    monkeypatch.setenv("GHOSTLENS_QUIET", "1")
    assert main(["run", str(p)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads((tmp_path / "env" / "metrics.json").read_text())["seed"] == 17
    # the flag wins over the environment
    assert main(["run", str(p), "--out", str(tmp_path / "flag"), "--seed", "3"]) == 0
    assert json.loads((tmp_path / "flag" / "metrics.json").read_text())["seed"] == 3


def test_demo_run(tmp_path, capsys):
    assert main(["run", str(CONFIGS / "demo.yaml"), "--out", str(tmp_path)]) == 0
    assert "rms vs ideal" in capsys.readouterr().out
    m = json.loads((tmp_path / "metrics.json").read_text())
    rv = m["rms_vs_ideal"]
    assert rv["ghost-fast"] <= 1e-9 and rv["ghost-oracle"] <= 1e-6 and rv["classical"] <= 1e-6
    assert rv["baseline"] >= 0.2
    assert m["kernel_fwhm"]["baseline"] > m["kernel_fwhm"]["ghost"]
    for f in m["files"].values():
        assert (tmp_path / f).exists()
    assert (tmp_path / "summary.txt").exists()


def test_object_params_coerced(tmp_path):
    p = write(tmp_path, BASE + "object: {name: double-slit, slit_width: 1e-4, separation: 5e-4}\n")
    assert load_scenario(p).object.params == {"slit_width": 1e-4, "separation": 5e-4}
    p = write(tmp_path, BASE + "object: {name: double-slit, slit_width: wide}\n")
    with pytest.raises(ConfigError, match="slit_width") as err:
        load_scenario(p)
    assert err.value.line == 4
    p = write(tmp_path, BASE.replace("dims: 1", "dims: 2") + "object: {name: point, offset: [1e-4, -2e-4]}\n")
    assert load_scenario(p).object.params == {"offset": (1e-4, -2e-4)}
