import json
from pathlib import Path

import numpy as np
import pytest

from omarray.cli import CONFIG_SCHEMA, ConfigError, config_hash, main, validate_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _read_csv(path):
    lines = Path(path).read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    names = body[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])
    return header, names, data


def _run(tmp_path, command, cfg, *extra):
    out = tmp_path / f"{command}.out"
    rc = main([command, "--config", _write_cfg(tmp_path, cfg), "--out", str(out), *extra])
    return rc, out


ARRAY = {"platform": "array", "array": {"n": 7, "zeta": -5.0, "d": 525e-9},
         "scan": {"kd_over_pi_min": 0.85, "kd_over_pi_max": 1.0, "samples": 3001}}


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    validate_config(json.loads(path.read_text()))


def test_spectrum_header_and_columns(tmp_path):
    rc, out = _run(tmp_path, "spectrum", ARRAY)
    assert rc == 0
    header, names, data = _read_csv(out)
    assert header[0].startswith("# omarray ")
    assert f"# config_sha256_16 {config_hash(ARRAY)}" in header
    assert any(h.startswith("# units ") for h in header)
    assert names == ["k_rad_per_m", "kd_over_pi", "reflectivity", "transmission"]
    np.testing.assert_allclose(data[:, 2] + data[:, 3], 1.0, atol=1e-12)
    points = [h for h in header if h.startswith("# transmissive_kd_over_pi")][0]
    assert points.count(":ok") == 6


def test_spectrum_is_deterministic(tmp_path):
    _, a = _run(tmp_path, "spectrum", ARRAY)
    first = a.read_bytes()
    _, b = _run(tmp_path, "spectrum", ARRAY)
    assert b.read_bytes() == first


def test_empty_array_is_transparent(tmp_path):
    cfg = dict(ARRAY, array={"n": 0, "zeta": -5.0, "d": 525e-9})
    rc, out = _run(tmp_path, "spectrum", cfg)
    assert rc == 0
    _, _, data = _read_csv(out)
    assert np.all(data[:, 2] == 0) and np.all(data[:, 3] == 1)


def test_empty_space_field_is_unity(tmp_path):
    cfg = {"platform": "array", "array": {"n": 0, "zeta": -5.0, "d": 525e-9},
           "field": {"kd_over_pi": 0.9, "x_min": -1e-6, "x_max": 1e-6, "points": 51}}
    rc, out = _run(tmp_path, "field", cfg)
    assert rc == 0
    _, names, data = _read_csv(out)
    assert names == ["x_m", "abs_E", "abs_E_normalized"]
    np.testing.assert_allclose(data[:, 1:], 1.0, atol=1e-14)


def test_field_normalized_to_equidistant_maximum(tmp_path):
    cfg = json.loads((CONFIGS / "fig3_equidistant.json").read_text())
    rc, out = _run(tmp_path, "field", cfg)
    assert rc == 0
    _, _, eq = _read_csv(out)
    assert eq[:, 2].max() == pytest.approx(1.0)
    cfg = json.loads((CONFIGS / "fig3_defect.json").read_text())
    _, out = _run(tmp_path, "field", cfg)
    _, _, defect = _read_csv(out)
    # the defect concentrates the transparent mode further
    assert defect[:, 2].max() > 1.0


def test_alpha_override(tmp_path):
    cfg = dict(ARRAY, scan={"kd_over_pi_min": 0.8, "kd_over_pi_max": 0.85, "samples": 2001})
    rc, out = _run(tmp_path, "spectrum", cfg, "--alpha", "5e-2")
    assert rc == 0
    header, _, _ = _read_csv(out)
    assert "degenerate" in [h for h in header if "transmissive" in h][0]


def test_couplings_json(tmp_path):
    cfg = json.loads((CONFIGS / "fig4_equidistant.json").read_text())
    rc, out = _run(tmp_path, "couplings", cfg, "--sum-upper", "6")
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["sum_upper"] == 6
    assert len(rep["g1_per_membrane"]) == 7
    assert rep["g1_sin"] == pytest.approx(np.sqrt(np.sum(np.square(rep["g1_per_membrane"][:6]))))
    assert rep["g1_sin_hz"] == pytest.approx(rep["g1_sin"] / (2 * np.pi))
    assert len(rep["candidates"]) == 2
    assert rep["config_sha256_16"] == config_hash(cfg)


def test_tune_empty_range(tmp_path):
    cfg = json.loads((CONFIGS / "fig7_tune.json").read_text())
    cfg["crystal"]["dm_range"] = [300e-9, 305e-9]
    cfg["crystal"]["dm_steps"] = 5
    del cfg["operating_point"]
    rc, out = _run(tmp_path, "tune", cfg)
    assert rc == 0
    assert json.loads(out.read_text())["hits"] == []


def test_bands_free_space_and_wannier(tmp_path):
    cfg = {"platform": "array", "array": {"n": 2, "zeta": 0.0, "d": 1e-6},
           "bands": {"zeta": 0.0, "kd_over_pi_min": 0.0,
                                          "kd_over_pi_max": 0.9, "samples": 91}}
    rc, out = _run(tmp_path, "bands", cfg)
    assert rc == 0
    _, names, data = _read_csv(out)
    kd, qd = data[:, names.index("kd")], data[:, names.index("qd")]
    np.testing.assert_allclose(qd, kd, atol=1e-7)
    cfg = json.loads((CONFIGS / "fig9_bands.json").read_text())
    cfg["bands"]["x_points"] = 41
    rc, out = _run(tmp_path, "bands", cfg)
    assert rc == 0
    _, names, _ = _read_csv(str(out) + ".wannier.csv")
    assert names == ["x_over_d", "w0_re", "w0_im", "w1_re", "w1_im"]


def test_gap_width_grows_with_zeta(tmp_path):
    widths = []
    for zeta in (-0.2, -0.9, -2.0, -5.0):
        cfg = {"platform": "array", "array": {"n": 2, "zeta": zeta, "d": 1e-6},
               "bands": {"zeta": zeta, "kd_over_pi_min": 0.0,
                                              "kd_over_pi_max": 1.0, "samples": 2001}}
        _, out = _run(tmp_path, "bands", cfg)
        _, names, data = _read_csv(out)
        widths.append(np.mean(data[:, names.index("propagating")] == 0))
    assert np.all(np.diff(widths) > 0)


@pytest.mark.parametrize("cfg, where", [
    ({"platform": "array", "array": {"n": 7, "zeta": -5.0, "d": -1.0}}, "array/d"),
    ({"platform": "lattice"}, "platform"),
    ({"platform": "cavity", "array": {"n": 7, "zeta": -5.0, "d": 1e-6}}, "cavity"),
    ({"platform": "array", "array": {"n": 7, "zeta": -5.0, "d": 1e-6}, "extra": 1}, "<root>"),
])
def test_config_errors_exit_2(tmp_path, capsys, cfg, where):
    rc, _ = _run(tmp_path, "spectrum", cfg)
    assert rc == 2
    assert where in capsys.readouterr().err
    with pytest.raises(ConfigError):
        validate_config(cfg)


def test_unreadable_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["spectrum", "--config", str(bad)]) == 2
    assert main(["spectrum", "--config", str(tmp_path / "missing.json")]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # too few quadrature nodes for the Wannier transform to converge
    cfg = json.loads((CONFIGS / "fig9_bands.json").read_text())
    cfg["numerics"]["quadrature_nodes"] = 16
    cfg["bands"]["x_points"] = 11
    rc, _ = _run(tmp_path, "bands", cfg)
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err


def test_schema_has_every_section():
    assert set(CONFIG_SCHEMA["properties"]) >= {"platform", "array", "cavity", "crystal", "scan",
                                                 "scales", "numerics"}
