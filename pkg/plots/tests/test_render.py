import numpy as np
import pytest

from wqed_plots.render import (Dataset, RenderError, main, read_dataset,
                               render_figures)

MANIFEST = '# {"tool": "wqed", "seed": 1}'


def _write(path, columns, rows):
    lines = [MANIFEST, ",".join(columns)]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\r\n".join(lines) + "\r\n", encoding="utf-8")


def _write_fig2(data_dir, n=5):
    rows = []
    for sigma in (0.01, 0.2):
        for omega in (0.0, 1.6):
            for d in np.linspace(-3, 3, n):
                rows.append((sigma, omega, d, 0.5, 0.3, 0.2, 1e-9))
    _write(data_dir / "fig2.csv",
           ["sigma", "omega_rabi", "delta_omega", "T", "R", "loss",
            "quad_err"], rows)


def _write_fig34(data_dir):
    sweeps = (("detuning", "delta_omega"), ("purcell", "purcell"),
              ("sigma", "sigma"))
    two_cols = ["P_RR", "P_RR_pw", "P_RR_bs", "P_RL", "P_RL_pw", "P_RL_bs",
                "P_LL", "P_LL_pw", "P_LL_bs", "loss2", "P21", "quad_err"]
    for label, name in sweeps:
        rows3, rows4 = [], []
        for kind in ("lambda", "n"):
            for x in np.linspace(0.5, 2.0, 4):
                rows3.append([kind, x] + [0.1] * 11 + [1e-9])
                rows4.append([kind, x, 1.2, 0.8, 1e-4])
        _write(data_dir / f"fig3_{label}.csv", ["kind", name] + two_cols,
               rows3)
        _write(data_dir / f"fig4_{label}.csv",
               ["kind", name, "P21", "P31", "mc_err"], rows4)


def _write_fig5(data_dir, n=4):
    w = np.linspace(-0.05, 0.05, n)
    cols = ["omega1", "omega2", "F_RR", "F_RL", "F_LL", "G_RR", "G_RL",
            "G_LL"]
    for kind in ("lambda", "n"):
        rows = [(w1, w2, 1.0, 2.0, 3.0, 0.5, 1.0, 1.5)
                for w1 in w for w2 in w]
        _write(data_dir / f"fig5_{kind}.csv", cols, rows)


def _write_fig6(data_dir, n=3):
    cols = ["omega_rabi", "purcell", "ratio_0", "ratio_1", "ratio_2",
            "ratio_3"]
    for kind in ("lambda", "n"):
        rows = [(o, p, 1.0, 1.1, 0.8, 0.5)
                for o in np.linspace(0.4, 3, n)
                for p in np.linspace(1, 20, n)]
        _write(data_dir / f"fig6_{kind}.csv", cols, rows)


def _write_fig7(data_dir, n=3):
    rows = [(o, p, (o - 1.5) * (p - 10) / 20)
            for o in np.linspace(0.1, 3, n)
            for p in np.linspace(0, 20, n)]
    _write(data_dir / "fig7_map.csv",
           ["omega_rabi", "purcell", "log10_g2"], rows)
    rows = [(p, t, 1.0 + 0.1 * p * np.exp(-t))
            for p in (0.0, 9.0) for t in np.linspace(0, 10, 5)]
    _write(data_dir / "fig7_tau.csv", ["purcell", "tau", "g2"], rows)


@pytest.fixture()
def full_data(tmp_path):
    _write_fig2(tmp_path)
    _write_fig34(tmp_path)
    _write_fig5(tmp_path)
    _write_fig6(tmp_path)
    _write_fig7(tmp_path)
    return tmp_path


class TestReadDataset:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "d.csv"
        _write(path, ["x", "y"], [(1, 2.5), (3, 4.5)])
        ds = read_dataset(path)
        assert ds.manifest == {"tool": "wqed", "seed": 1}
        assert list(ds.col("x")) == [1.0, 3.0]
        assert list(ds.col("y")) == [2.5, 4.5]

    def test_missing_file(self, tmp_path):
        with pytest.raises(RenderError, match="missing input file"):
            read_dataset(tmp_path / "nope.csv")

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "d.csv"
        _write(path, ["x"], [(1,)])
        with pytest.raises(RenderError, match="missing column 'T'"):
            read_dataset(path).col("T")

    def test_empty_rows_error(self, tmp_path):
        path = tmp_path / "d.csv"
        _write(path, ["x", "y"], [])
        with pytest.raises(RenderError, match="no data rows"):
            read_dataset(path)

    def test_non_numeric_column_preserved(self, tmp_path):
        path = tmp_path / "d.csv"
        _write(path, ["kind", "x"], [("lambda", 1), ("n", 2)])
        ds = read_dataset(path)
        assert list(ds.col("kind")) == ["lambda", "n"]


class TestRenderFigures:
    def test_all_six_images(self, full_data, tmp_path):
        out = tmp_path / "img"
        paths = render_figures(full_data, out)
        assert [p.name for p in paths] == [f"fig{i}.png"
                                           for i in range(2, 8)]
        for p in paths:
            assert p.exists() and p.stat().st_size > 0

    def test_only_flag(self, full_data, tmp_path):
        out = tmp_path / "img"
        paths = render_figures(full_data, out, only="fig5")
        assert [p.name for p in paths] == ["fig5.png"]
        assert not (out / "fig2.png").exists()

    def test_unknown_figure(self, full_data, tmp_path):
        with pytest.raises(RenderError, match="unknown figure"):
            render_figures(full_data, tmp_path / "img", only="fig9")

    def test_missing_input_no_image(self, tmp_path):
        out = tmp_path / "img"
        with pytest.raises(RenderError, match="missing input file"):
            render_figures(tmp_path, out, only="fig2")
        assert not (out / "fig2.png").exists()

    def test_schema_mismatch_names_column(self, tmp_path):
        _write(tmp_path / "fig7_map.csv", ["omega_rabi", "purcell", "g2"],
               [(1, 1, 0.5)])
        _write_fig7(tmp_path)  # rewrites both files correctly
        _write(tmp_path / "fig7_map.csv", ["omega_rabi", "purcell", "g2"],
               [(1, 1, 0.5)])
        with pytest.raises(RenderError, match="missing column 'log10_g2'"):
            render_figures(tmp_path, tmp_path / "img", only="fig7")
        assert not (tmp_path / "img" / "fig7.png").exists()

    def test_empty_rows_no_image(self, tmp_path):
        _write(tmp_path / "fig2.csv",
               ["sigma", "omega_rabi", "delta_omega", "T", "R", "loss",
                "quad_err"], [])
        with pytest.raises(RenderError, match="no data rows"):
            render_figures(tmp_path, tmp_path / "img", only="fig2")
        assert not (tmp_path / "img" / "fig2.png").exists()

    def test_incomplete_grid_rejected(self, tmp_path):
        rows = [(0.1, 1.0, 0.0), (0.2, 2.0, 0.1), (0.2, 1.0, 0.2)]
        _write(tmp_path / "fig7_map.csv",
               ["omega_rabi", "purcell", "log10_g2"], rows)
        _write(tmp_path / "fig7_tau.csv", ["purcell", "tau", "g2"],
               [(0.0, 0.0, 1.0)])
        with pytest.raises(RenderError, match="complete"):
            render_figures(tmp_path, tmp_path / "img", only="fig7")

    def test_deterministic_bytes(self, full_data, tmp_path):
        a = render_figures(full_data, tmp_path / "a", only="fig6")[0]
        b = render_figures(full_data, tmp_path / "b", only="fig6")[0]
        assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_main_success(self, full_data, tmp_path, capsys):
        assert main([str(full_data), str(tmp_path / "img"),
                     "--only", "fig2"]) == 0
        assert "fig2.png" in capsys.readouterr().out

    def test_main_error_exit(self, tmp_path, capsys):
        assert main([str(tmp_path), str(tmp_path / "img")]) == 1
        assert "error:" in capsys.readouterr().err
