import json

import numpy as np
import pytest

from wqed.cli import (parse_manifest, parse_range, parse_sweep, read_csv,
                      run, serialize_manifest, write_csv)
from wqed.errors import InvalidParameterError


def _floats(rows, col_index):
    return np.array([float(r[col_index]) for r in rows])


class TestSerialization:
    def test_manifest_roundtrip(self):
        man = {"tool": "wqed", "seed": 7, "params": {"sigma": 0.2}}
        assert parse_manifest(serialize_manifest(man)) == man

    def test_manifest_requires_hash(self):
        with pytest.raises(InvalidParameterError):
            parse_manifest('{"tool": "wqed"}')

    def test_csv_roundtrip(self, tmp_path):
        path = tmp_path / "out.csv"
        rows = [(0.1, 2.0), (0.2, 3.5)]
        write_csv(path, ("x", "y"), rows, {"seed": 1})
        man, cols, got = read_csv(path)
        assert man == {"seed": 1}
        assert cols == ["x", "y"]
        assert [(float(a), float(b)) for a, b in got] == rows

    def test_crlf_line_endings(self, tmp_path):
        path = tmp_path / "out.csv"
        write_csv(path, ("x",), [(1.0,)], {"seed": 1})
        raw = path.read_bytes()
        assert raw.count(b"\r\n") == raw.count(b"\n")

    def test_full_precision(self, tmp_path):
        path = tmp_path / "out.csv"
        value = 0.1234567890123456789
        write_csv(path, ("x",), [(value,)], {})
        _, _, rows = read_csv(path)
        assert float(rows[0][0]) == value


class TestParsing:
    def test_sweep_spec(self):
        name, pts = parse_sweep("delta_omega=-1:1:5")
        assert name == "delta_omega"
        assert np.allclose(pts, np.linspace(-1, 1, 5))

    @pytest.mark.parametrize("bad", [
        "delta_omega", "kind=0:1:2", "nope=0:1:2", "sigma=0:1",
        "sigma=a:b:3", "sigma=0:1:0",
    ])
    def test_bad_sweep_specs(self, bad):
        with pytest.raises(InvalidParameterError):
            parse_sweep(bad)

    def test_range(self):
        assert np.allclose(parse_range("0:10:3"), [0.0, 5.0, 10.0])
        with pytest.raises(InvalidParameterError):
            parse_range("0:10")


class TestExitCodes:
    def test_invalid_parameter_exits_2(self, tmp_path, capsys):
        code = run(["single", "--purcell", "-3",
                    "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_sweep_exits_2(self, tmp_path):
        assert run(["single", "--sweep", "kind=0:1:2",
                    "--out", str(tmp_path / "x.csv")]) == 2

    def test_unknown_config_key_exits_2(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sgma = 0.2\n")
        assert run(["single", "--config", str(cfg),
                    "--out", str(tmp_path / "x.csv")]) == 2

    def test_all_points_invalid_exits_2(self, tmp_path, capsys):
        # Sweeping sigma through nonpositive values fails every point with
        # a parameter error, which must surface as exit code 2.
        code = run(["single", "--sweep", "sigma=-2:-1:3",
                    "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_numeric_failure_exits_3(self, tmp_path, capsys):
        # omega_rabi equal to the lossy half-width makes the bound-state
        # roots degenerate: a numeric failure, not a parameter error.
        code = run(["two-photon", "--purcell", "1", "--omega-rabi", "1",
                    "--out", str(tmp_path / "x.csv")])
        assert code == 3
        assert "numeric failure" in capsys.readouterr().err

    def test_partial_failures_warn_but_succeed(self, tmp_path, capsys):
        path = tmp_path / "x.csv"
        code = run(["single", "--sweep", "sigma=-0.1:0.3:3",
                    "--out", str(path)])
        assert code == 0
        assert "warning: point" in capsys.readouterr().err
        man, _, rows = read_csv(path)
        assert man["n_failures"] == 1
        assert len(rows) == 2


class TestSingleCommand:
    def test_sweep_output(self, tmp_path):
        path = tmp_path / "s.csv"
        assert run(["single", "--sweep", "delta_omega=-1:1:5",
                    "--out", str(path)]) == 0
        man, cols, rows = read_csv(path)
        assert cols == ["delta_omega", "T", "R", "loss", "quad_err"]
        assert len(rows) == 5
        assert man["params"]["purcell"] == 9.0
        assert man["wall_time"] is None
        total = _floats(rows, 1) + _floats(rows, 2) + _floats(rows, 3)
        assert np.allclose(total, 1.0, atol=1e-10)

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["single", "--sweep", "delta_omega=-1:1:5"]
        assert run(argv + ["--out", str(a)]) == 0
        assert run(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_workers_do_not_change_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["single", "--sweep", "delta_omega=-1:1:4"]
        assert run(argv + ["--workers", "1", "--out", str(a)]) == 0
        assert run(argv + ["--workers", "2", "--out", str(b)]) == 0
        ta = a.read_text().splitlines()
        tb = b.read_text().splitlines()
        # Manifests record the worker count; data rows must be identical.
        assert ta[1:] == tb[1:]

    def test_config_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("purcell = 4\nsigma = 0.1\n")
        path = tmp_path / "s.csv"
        assert run(["single", "--config", str(cfg), "--sigma", "0.3",
                    "--out", str(path)]) == 0
        man, _, _ = read_csv(path)
        assert man["params"]["purcell"] == 4.0  # from config
        assert man["params"]["sigma"] == 0.3  # flag beats config
        assert man["params"]["omega_rabi"] == 1.6  # default


class TestCoeffsCommand:
    def test_json_snapshot_frozen_eit(self, tmp_path):
        path = tmp_path / "c.json"
        assert run(["coeffs", "--k1", "0", "--k2", "0",
                    "--out", str(path)]) == 0
        rec = json.loads(path.read_text())
        assert rec["gamma1"]["re"] == pytest.approx(0.131456143534598,
                                                    abs=1e-12)
        assert rec["gamma2"]["re"] == pytest.approx(4.868543856465402,
                                                    abs=1e-12)
        assert rec["eta"] == 0.0
        assert rec["tbar_k1"]["re"] == pytest.approx(1.0, abs=1e-12)
        # Closure of the pair coefficients at this point.
        c1 = complex(rec["C1"]["re"], rec["C1"]["im"])
        c2 = complex(rec["C2"]["re"], rec["C2"]["im"])
        assert abs(c1 + c2) < 1e-12  # alpha(0,0) = 0 at full transparency

    def test_three_momentum_block(self, tmp_path):
        path = tmp_path / "c.json"
        assert run(["coeffs", "--k1", "0.2", "--k2", "-0.1", "--k3", "0.4",
                    "--kind", "n", "--out", str(path)]) == 0
        rec = json.loads(path.read_text())
        for key in ("D1", "D2", "D3", "D4"):
            assert key in rec


class TestFigureRecipes:
    def test_fig2_schema(self, tmp_path):
        assert run(["reproduce-figure", "fig2", "--points", "3",
                    "--out", str(tmp_path)]) == 0
        man, cols, rows = read_csv(tmp_path / "fig2.csv")
        assert cols == ["sigma", "omega_rabi", "delta_omega", "T", "R",
                        "loss", "quad_err"]
        assert len(rows) == 2 * 2 * 3
        assert man["subcommand"] == "reproduce-figure"

    def test_fig5_schema(self, tmp_path):
        assert run(["reproduce-figure", "fig5", "--points", "5",
                    "--out", str(tmp_path)]) == 0
        for kind in ("lambda", "n"):
            _, cols, rows = read_csv(tmp_path / f"fig5_{kind}.csv")
            assert cols == ["omega1", "omega2", "F_RR", "F_RL", "F_LL",
                            "G_RR", "G_RL", "G_LL"]
            assert len(rows) == 25

    def test_fig7_schema(self, tmp_path):
        assert run(["reproduce-figure", "fig7", "--points", "3",
                    "--out", str(tmp_path), "--workers", "2"]) == 0
        _, cols, rows = read_csv(tmp_path / "fig7_map.csv")
        assert cols == ["omega_rabi", "purcell", "log10_g2"]
        assert len(rows) == 9
        _, cols, rows = read_csv(tmp_path / "fig7_tau.csv")
        assert cols == ["purcell", "tau", "g2"]
        assert len(rows) == 4 * 3
