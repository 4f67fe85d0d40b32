import os

import pytest
import yaml

from fraclab.cli import main
from fraclab.config import ConfigError, config_hash, default_config, load_config, parse_config
from fraclab.io import DirectoryLocked, header_lines, locked_directory, read_csv, write_csv

FAST = {"grid": {"h": 2.0**-7}}


def _write_cfg(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


# ---------------------------------------------------------------------------
# config


def test_defaults_validate():
    cfg = default_config()
    assert cfg.physics.s == 0.25
    assert len(cfg.physics.eps_list) >= 4
    assert max(cfg.physics.eps_list) / min(cfg.physics.eps_list) >= 10


@pytest.mark.parametrize(
    "data, needle",
    [
        ({"physics": {"s": 0.6}}, "physics.s: s must lie in (0, 1/2)"),
        ({"physics": {"s": 0.0}}, "physics.s"),
        ({"physics": {"eps": -1.0}}, "physics.eps"),
        ({"grid": {"h": 0.01, "colour": 1}}, "grid.colour"),
        ({"bogus": {}}, "bogus"),
        ({"grid": {"dimension": 2}}, "2D grid needs a box or a disc"),
        ({"grid": {"R_trunc": 1.0}}, "grid:"),
        ({"diagnostics": {"radii": [0.2, 0.1]}}, "increasing"),
        ({"diagnostics": {"levels": [1.0]}}, "levels"),
        ({"physics": {"potential": {"c_W": 1e-6}}}, "physics.potential"),
        ({"physics": {"g": {"kind": "cross"}}}, "cross is 2D only"),
    ],
)
def test_invalid_configs(data, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(data)
    assert needle in str(exc.value)


def test_non_mapping():
    with pytest.raises(ConfigError, match="mapping"):
        parse_config([1, 2])


def test_yaml_error_reports_line(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("grid:\n  h: 0.01\n physics: [\n")
    with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
        load_config(str(p))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "missing.yaml"))


def test_config_hash_stable_and_sensitive():
    a = parse_config({"grid": {"h": 0.01}})
    b = parse_config({"grid": {"h": 0.01}})
    c = parse_config({"grid": {"h": 0.02}})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 64


def test_2d_config():
    cfg = parse_config({"grid": {"dimension": 2, "h": 1 / 32, "omega": {"kind": "disc", "center": [0, 0], "radius": 0.5}, "R_trunc": 4}, "physics": {"g": {"kind": "cross"}}})
    assert cfg.grid.dimension == 2


# ---------------------------------------------------------------------------
# io


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "a.csv"
    write_csv(str(p), ["a", "b", "c"], [(0.1, True, 3), (1 / 3, False, -1)], "abc", {"warning": "w"})
    header, cols, rows = read_csv(str(p))
    assert header == header_lines("abc", {"warning": "w"})
    assert cols == ["a", "b", "c"]
    assert float(rows[1][0]) == 1 / 3
    assert rows[0][1:] == ["true", "3"]


def test_lock(tmp_path):
    d = str(tmp_path / "out")
    with locked_directory(d):
        with pytest.raises(DirectoryLocked):
            with locked_directory(d):
                pass
    with locked_directory(d):
        pass


# ---------------------------------------------------------------------------
# cli


def test_solve_deterministic(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.yaml", FAST)
    assert main(["-q", "solve", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["-q", "solve", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    for name in ("solution.csv", "report.csv", "max_principle.csv", "history.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header, cols, rows = read_csv(str(tmp_path / "a" / "solution.csv"))
    assert cols == ["x", "v", "W", "residual"]
    assert header[0].startswith("fraclab ")
    assert any(h.startswith("config-sha256 ") for h in header)
    _, _, mp = read_csv(str(tmp_path / "a" / "max_principle.csv"))
    assert mp[0][0] == "true"


def test_solve_nonconvergence_exit_2(tmp_path):
    cfg = _write_cfg(tmp_path / "c.yaml", {**FAST, "solver": {"max_iters": 1}})
    assert main(["-q", "solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.yaml", {"physics": {"s": 0.6}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "physics.s: s must lie in (0, 1/2)" in capsys.readouterr().err


def test_sweep_empty_eps_list_exit_1(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.yaml", {**FAST, "physics": {"eps_list": []}})
    assert main(["-q", "sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "eps_list" in capsys.readouterr().err


def test_sweep_coarse_warning(tmp_path):
    data = {"grid": {"h": 0.01}, "physics": {"eps_list": [0.1, 0.05, 0.02, 0.01]}}
    cfg = _write_cfg(tmp_path / "c.yaml", data)
    out = tmp_path / "o"
    assert main(["-q", "sweep", "--config", cfg, "--out", str(out)]) == 0
    header, cols, rows = read_csv(str(out / "sweep.csv"))
    assert any("interface under-resolved" in h for h in header)
    assert len(rows) == 4 and cols[:2] == ["eps", "energy_omega_prime"]
    _, _, slopes = read_csv(str(out / "slopes.csv"))
    assert [r[0] for r in slopes][:2] == ["potential_decay_slope", "transition_volume_slope"]
    assert (out / "solution_03.csv").exists()


def test_geometry_perimeter(tmp_path):
    cfg = _write_cfg(tmp_path / "c.yaml", FAST)
    assert main(["-q", "geometry", "perimeter", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    _, _, rows = read_csv(str(tmp_path / "o" / "perimeter.csv"))
    assert dict((r[0], r[1]) for r in rows)["identity_ok"] == "true"


def test_geometry_unknown_set_exit_1(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.yaml", {**FAST, "diagnostics": {"set": {"name": "blob"}}})
    assert main(["geometry", "perimeter", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "diagnostics.set" in capsys.readouterr().err


def test_verify_default_passes(tmp_path):
    out = tmp_path / "o"
    assert main(["-q", "verify", "--out", str(out)]) == 0
    _, cols, rows = read_csv(str(out / "verify.csv"))
    assert cols == ["group", "check", "value", "tolerance", "passed"]
    assert {r[0] for r in rows} >= {"constants", "kernel", "extension", "monotonicity"}
    assert all(r[4] == "true" for r in rows)


def test_verify_detects_corrupted_gamma(tmp_path):
    cfg = _write_cfg(tmp_path / "c.yaml", {"physics": {"gamma_override": 0.3}})
    out = tmp_path / "o"
    assert main(["-q", "verify", "--only", "constants", "--config", cfg, "--out", str(out)]) == 3
    _, _, rows = read_csv(str(out / "verify.csv"))
    assert any(r[4] == "false" for r in rows)


def test_verify_only_filter(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["-q", "verify", "--only", "extension", "--out", str(out)]) == 0
    _, _, rows = read_csv(str(out / "verify.csv"))
    assert {r[0] for r in rows} == {"extension"}
    assert main(["-q", "verify", "--only", "nonsense", "--out", str(tmp_path / "p")]) == 1


def test_locked_output_exit_1(tmp_path, capsys):
    out = str(tmp_path / "o")
    with locked_directory(out):
        assert main(["-q", "solve", "--out", out]) == 1
    assert "locked" in capsys.readouterr().err
    assert os.path.isdir(out)
