"""Render figure layouts from the wqed CSV datasets.

This package consumes only the CSV files written by
``wqed reproduce-figure figN``; it never imports the numerical library.
Each dataset starts with a '#'-prefixed JSON manifest line, then a header
row, then numeric rows.  All axes are in units of the emitter decay rate
(the CSV columns are already in those units).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class RenderError(Exception):
    """Dataset missing, malformed, or schema mismatch."""


class Dataset:
    """One parsed CSV: manifest dict, column names, and columns as arrays.

    Non-numeric columns (e.g. the emitter kind) stay as object arrays.
    """

    def __init__(self, manifest, columns, table):
        self.manifest = manifest
        self.columns = columns
        self._table = table

    def col(self, name):
        if name not in self.columns:
            raise RenderError(
                f"missing column {name!r}; file has columns "
                f"{', '.join(self.columns)}")
        return self._table[name]


def read_dataset(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise RenderError(f"missing input file {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        manifest = None
        while True:
            pos = fh.tell()
            line = fh.readline()
            if line.startswith("#"):
                if manifest is None:
                    manifest = json.loads(line.lstrip("#").strip())
            else:
                fh.seek(pos)
                break
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            raise RenderError(f"{path} has no header row") from None
        rows = [row for row in reader if row]
    if not rows:
        raise RenderError(f"{path} contains a header but no data rows")
    table = {}
    for j, name in enumerate(columns):
        raw = [row[j] for row in rows]
        try:
            table[name] = np.array([float(v) for v in raw])
        except ValueError:
            table[name] = np.array(raw, dtype=object)
    return Dataset(manifest, columns, table)


def _grid(ds: Dataset, x_name, y_name, z_name):
    """Reshape long-format (x, y, z) rows into (xs, ys, Z[len(xs), len(ys)])."""
    x, y, z = ds.col(x_name), ds.col(y_name), ds.col(z_name)
    xs = np.unique(x)
    ys = np.unique(y)
    if xs.size * ys.size != z.size:
        raise RenderError(
            f"rows do not form a complete ({x_name}, {y_name}) grid")
    zz = np.full((xs.size, ys.size), np.nan)
    xi = np.searchsorted(xs, x)
    yi = np.searchsorted(ys, y)
    zz[xi, yi] = z
    return xs, ys, zz


# ---------------------------------------------------------------------------
# Figure recipes


def _fig2(data_dir, out_path):
    ds = read_dataset(data_dir / "fig2.csv")
    sigma = ds.col("sigma")
    omega = ds.col("omega_rabi")
    fig, axes = plt.subplots(2, 2, figsize=(9, 7), sharex=True)
    panels = [(s, o) for s in np.unique(sigma) for o in np.unique(omega)]
    for ax, (s, o) in zip(axes.ravel(), panels):
        mask = (sigma == s) & (omega == o)
        d = ds.col("delta_omega")[mask]
        order = np.argsort(d)
        for name, style in (("T", "-"), ("R", "--"), ("loss", ":")):
            ax.plot(d[order], ds.col(name)[mask][order], style, label=name)
        ax.set_title(f"sigma={s:g}, omega_rabi={o:g}")
        ax.set_ylim(-0.02, 1.02)
    for ax in axes[-1]:
        ax.set_xlabel("detuning")
    for ax in axes[:, 0]:
        ax.set_ylabel("probability")
    axes[0, 0].legend(loc="center right")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


_SWEEPS = (("detuning", "delta_omega"), ("purcell", "purcell"),
           ("sigma", "sigma"))


def _lines_by_kind(ax, ds, x_name, y_name):
    kind = ds.col("kind")
    for k, style in (("lambda", "-"), ("n", "--")):
        mask = kind == k
        x = ds.col(x_name)[mask]
        order = np.argsort(x)
        ax.plot(x[order], ds.col(y_name)[mask][order], style, label=k)


def _fig3(data_dir, out_path):
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for ax, (label, x_name) in zip(axes, _SWEEPS):
        ds = read_dataset(data_dir / f"fig3_{label}.csv")
        _lines_by_kind(ax, ds, x_name, "P21")
        ax.axhline(1.0, color="0.7", lw=0.8)
        ax.set_xlabel(x_name)
        ax.set_ylabel("P21")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def _fig4(data_dir, out_path):
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for ax, (label, x_name) in zip(axes, _SWEEPS):
        ds = read_dataset(data_dir / f"fig4_{label}.csv")
        for y_name in ("P21", "P31"):
            _lines_by_kind(ax, ds, x_name, y_name)
        ax.axhline(1.0, color="0.7", lw=0.8)
        ax.set_xlabel(x_name)
        ax.set_ylabel("P21, P31")
    axes[0].legend(["P21 lambda", "P21 n", "P31 lambda", "P31 n"])
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def _fig5(data_dir, out_path):
    ds_l = read_dataset(data_dir / "fig5_lambda.csv")
    ds_n = read_dataset(data_dir / "fig5_n.csv")
    fig, axes = plt.subplots(3, 3, figsize=(11, 10))
    col_specs = (("F (lambda)", ds_l, "F"), ("F (n)", ds_n, "F"),
                 ("G (n)", ds_n, "G"))
    for i, ch in enumerate(("RR", "RL", "LL")):
        for j, (title, ds, prefix) in enumerate(col_specs):
            xs, ys, zz = _grid(ds, "omega1", "omega2", f"{prefix}_{ch}")
            ax = axes[i, j]
            im = ax.pcolormesh(xs, ys, zz.T, shading="auto")
            fig.colorbar(im, ax=ax)
            if i == 0:
                ax.set_title(title)
            if j == 0:
                ax.set_ylabel(f"{ch}\nomega2")
            if i == 2:
                ax.set_xlabel("omega1")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def _fig6(data_dir, out_path):
    fig, axes = plt.subplots(2, 2, figsize=(10, 8))
    for j, kind in enumerate(("lambda", "n")):
        ds = read_dataset(data_dir / f"fig6_{kind}.csv")
        for i, ratio in enumerate(("ratio_1", "ratio_2")):
            xs, ys, zz = _grid(ds, "omega_rabi", "purcell", ratio)
            ax = axes[i, j]
            im = ax.pcolormesh(xs, ys, zz.T, shading="auto")
            fig.colorbar(im, ax=ax)
            ax.set_title(f"{ratio} ({kind})")
            ax.set_xlabel("omega_rabi")
            ax.set_ylabel("purcell")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def _fig7(data_dir, out_path):
    ds_map = read_dataset(data_dir / "fig7_map.csv")
    ds_tau = read_dataset(data_dir / "fig7_tau.csv")
    fig, (ax_a, ax_b) = plt.subplots(1, 2, figsize=(12, 5))

    xs, ys, zz = _grid(ds_map, "omega_rabi", "purcell", "log10_g2")
    finite = np.isfinite(zz)
    vmax = float(np.max(np.abs(zz[finite]))) if np.any(finite) else 1.0
    # Symmetric log10 color range about 0 so white marks the bunching
    # border; dashed contour at exactly 0.
    im = ax_a.pcolormesh(xs, ys, zz.T, shading="auto", cmap="RdBu_r",
                         vmin=-vmax, vmax=vmax)
    if np.any(finite) and zz[finite].min() < 0 < zz[finite].max():
        ax_a.contour(xs, ys, zz.T, levels=[0.0], colors="k",
                     linestyles="dashed")
    fig.colorbar(im, ax=ax_a, label="log10 g2(0)")
    ax_a.set_xlabel("omega_rabi")
    ax_a.set_ylabel("purcell")

    purcell = ds_tau.col("purcell")
    for p in np.unique(purcell):
        mask = purcell == p
        tau = ds_tau.col("tau")[mask]
        order = np.argsort(tau)
        ax_b.plot(tau[order], ds_tau.col("g2")[mask][order],
                  label=f"P={p:g}")
    ax_b.axhline(1.0, color="0.7", lw=0.8)
    ax_b.set_xlabel("tau")
    ax_b.set_ylabel("g2(tau)")
    ax_b.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


_RECIPES = {"fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5,
            "fig6": _fig6, "fig7": _fig7}


def render_figures(data_dir, out_dir, only=None):
    """Render all (or one) figure images; returns the written paths.

    Inputs are validated before any file is written, so a schema error
    never leaves a partial image behind.
    """
    data_dir = Path(data_dir)
    out_dir = Path(out_dir)
    if only is not None and only not in _RECIPES:
        raise RenderError(f"unknown figure {only!r}; expected one of "
                          f"{', '.join(sorted(_RECIPES))}")
    names = [only] if only else sorted(_RECIPES)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in names:
        out_path = out_dir / f"{name}.png"
        _RECIPES[name](data_dir, out_path)
        written.append(out_path)
    return written


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render figure images from wqed CSV datasets.")
    parser.add_argument("data_dir")
    parser.add_argument("out_dir")
    parser.add_argument("--only", default=None,
                        help="render a single figure (fig2 .. fig7)")
    args = parser.parse_args(argv)
    try:
        for path in render_figures(args.data_dir, args.out_dir,
                                   only=args.only):
            print(path)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
