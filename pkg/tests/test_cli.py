import json

import pytest

from maglab.cli import (ConfigError, apply_overrides, cfg_float, cfg_floats,
                        cfg_int, load_config, main, parse_domain, parse_field)


def test_load_config_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nh = 0.125\nsigmas = 10 20\n")
    cfg = load_config(path)
    assert cfg == {"h": "0.125", "sigmas": "10 20"}
    apply_overrides(cfg, ["h=0.25", "tol = 1e-6"])
    assert cfg["h"] == "0.25"
    assert cfg["tol"] == "1e-6"
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["notakeyvalue"])


def test_load_config_rejects_bad_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("just words\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_cfg_accessors():
    cfg = {"a": "1.5", "n": "3", "xs": "1, 2, 3", "bad": "x"}
    assert cfg_float(cfg, "a") == 1.5
    assert cfg_int(cfg, "n") == 3
    assert cfg_floats(cfg, "xs", ()) == [1.0, 2.0, 3.0]
    assert cfg_float(cfg, "missing", 7.0) == 7.0
    with pytest.raises(ConfigError):
        cfg_float(cfg, "missing")
    with pytest.raises(ConfigError):
        cfg_float(cfg, "bad")
    with pytest.raises(ConfigError):
        cfg_int(cfg, "a")


def test_parse_domain_kinds():
    assert parse_domain({"h": "0.125"}).kind == "square"
    assert parse_domain({"h": "0.125", "domain": "disk:2"}).kind == "disk"
    ann = parse_domain({"h": "0.125",
                        "domain": "annulus:2:0.5:0.0:0.25"})
    assert ann.kind == "annular"
    with pytest.raises(ConfigError):
        parse_domain({"h": "0.125", "domain": "torus:1"})
    with pytest.raises(ConfigError):
        parse_domain({"h": "0.125", "domain": "disk:abc"})


def test_parse_field_kinds():
    dom = parse_domain({"h": "0.125"})
    B, params = parse_field({"field": "constant:2"}, dom)
    assert float(B.values.max()) == 2.0
    B2, _ = parse_field({"field": "fourier:3", "field_floor": "1.0"}, dom)
    assert float(B2.values.min()) >= 1.0
    with pytest.raises(ConfigError):
        parse_field({"field": "perlin:1"}, dom)


def test_main_config_error_exit_code(capsys):
    assert main(["eig", "domain=disk:zzz", "h=0.125"]) == 2
    assert "config error" in capsys.readouterr().err


def test_main_eig_square_report(tmp_path):
    out = tmp_path / "eig.json"
    code = main(["eig", "h=0.03125", "sigmas=0", "expect_lam=19.7392088",
                 "expect_rtol=5e-3", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["pass"] is True
    assert report["checks"]["expected_eigenvalue"] is True
    assert abs(report["rows"][0]["lam"] - 19.7392) < 0.1
    assert report["command"] == "eig" and "version" in report


def test_main_averaging_small_run(tmp_path):
    out = tmp_path / "avg.json"
    code = main(["averaging", "n_fields=2", "ells=0.25", "divisions=32",
                 "kmax=8", "--seed", "5", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["checks"]["all_ratios_within_tol"] is True
    assert len(report["rows"]) == 2
    assert report["rows"][0]["seed"] == 5


def test_main_field_gen_csv_and_reproducibility(tmp_path):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    args = ["field-gen", "h=0.125", "field=fourier:7", "field_floor=0.5",
            f"csv={tmp_path / 'field.csv'}", "ell=0.25"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_text() == out2.read_text()  # bit-identical reruns
    report = json.loads(out1.read_text())
    assert report["checks"]["above_floor"] is True
    assert (tmp_path / "field.csv").exists()
    assert len(report["rows"][0]["cell_averages"]) >= 4


def test_main_bulk_table_tiny(tmp_path):
    out = tmp_path / "bulk.json"
    code = main(["bulk-table", "b_grid=0 1", "R_list=2 3", "R_div=16",
                 "bracket_tol=2.0", "energy_tol=1e-8",
                 "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["checks"]["g_monotone"] is True
    assert report["checks"]["g_in_range"] is True
    assert (tmp_path / "bulk.json.records.csv").exists()
