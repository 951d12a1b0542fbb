"""Command-line interface: parameter handling, CSV/JSON emission with a
reproducibility manifest, and figure-dataset recipes.

Every CSV file starts with a single '#'-prefixed JSON manifest line that
records the resolved parameters, seed, budget, tolerances, and worker
count, so a run can be reproduced bit-exactly from its own output.  Wall
time is deliberately not written to the file (it would break byte-identical
reruns); numbers are serialized with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coeffs import spectral_constants, three_photon_coeffs, \
    two_photon_coeffs
from .coherent import g2, g2_zero_map, number_statistics
from .errors import InvalidParameterError, WqedError
from .numerics import QmcSpec, default_workers, sweep
from .params import (CONFIG_KEYS, AtomKind, Wavepacket, build_params,
                     load_config, parse_kind)
from .single_photon import amplitudes, transmission_reflection
from .three_photon import three_photon_probabilities
from .two_photon import joint_spectra, two_photon_probabilities

_FLOAT_FMT = "{:.17g}"


# ---------------------------------------------------------------------------
# Serialization


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return _FLOAT_FMT.format(float(value))
    return str(value)


def serialize_manifest(manifest: dict) -> str:
    return "# " + json.dumps(manifest, sort_keys=True,
                             separators=(", ", ": "))


def parse_manifest(line: str) -> dict:
    if not line.startswith("#"):
        raise InvalidParameterError("manifest line must start with '#'")
    return json.loads(line.lstrip("#").strip())


def read_csv(path):
    """Read (manifest, columns, rows-as-float-or-str) from a dataset file."""
    manifest = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header_lines = []
        while True:
            pos = fh.tell()
            line = fh.readline()
            if line.startswith("#"):
                header_lines.append(line)
            else:
                fh.seek(pos)
                break
        if header_lines:
            manifest = parse_manifest(header_lines[0])
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [tuple(row) for row in reader]
    return manifest, columns, rows


def write_csv(path, columns, rows, manifest: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_manifest(manifest) + "\r\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Argument plumbing


_PARAM_DEFAULTS = {"kind": AtomKind.LAMBDA3LS, "purcell": 9.0,
                   "omega_rabi": 1.6, "sigma": 0.2, "delta_omega": 0.0,
                   "gamma3": 0.0, "gamma4": 1.0, "delta_ctrl": 0.0}


def _add_common(parser):
    for key in CONFIG_KEYS:
        flag = "--" + key.replace("_", "-")
        if key == "kind":
            parser.add_argument(flag, type=parse_kind, default=None)
        else:
            parser.add_argument(flag, type=float, default=None)
    parser.add_argument("--config", type=str, default=None,
                        help="flat key=value parameter file")
    parser.add_argument("--out", type=str, default=None,
                        help="output path (directory for reproduce-figure)")
    parser.add_argument("--abs-tol", type=float, default=1e-10)
    parser.add_argument("--rel-tol", type=float, default=1e-8)
    parser.add_argument("--budget", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=12345)
    parser.add_argument("--workers", type=int, default=None)


def _resolve(args) -> dict:
    """defaults < config file < explicit flags."""
    values = dict(_PARAM_DEFAULTS)
    if args.config:
        values.update(load_config(args.config))
    for key in CONFIG_KEYS:
        flag_val = getattr(args, key)
        if flag_val is not None:
            values[key] = flag_val
    return values


def _build(values):
    params = build_params(values["kind"], purcell=values["purcell"],
                          omega_rabi=values["omega_rabi"],
                          gamma3=values["gamma3"], gamma4=values["gamma4"],
                          delta_ctrl=values["delta_ctrl"])
    wp = Wavepacket(sigma=values["sigma"],
                    omega0=params.eps2 + values["delta_omega"])
    return params, wp


def _manifest(args, values, subcommand, extra=None):
    record = {k: (v.value if isinstance(v, AtomKind) else v)
              for k, v in values.items()}
    man = {"tool": "wqed", "version": __version__, "subcommand": subcommand,
           "params": record, "abs_tol": args.abs_tol,
           "rel_tol": args.rel_tol, "budget": args.budget,
           "seed": args.seed,
           "workers": args.workers if args.workers is not None
           else default_workers(),
           "wall_time": None}
    if extra:
        man.update(extra)
    return man


def parse_sweep(text: str):
    """'name=lo:hi:n' -> (name, ndarray of n evenly spaced values)."""
    if "=" not in text:
        raise InvalidParameterError(f"bad sweep spec {text!r}; "
                                    "expected name=lo:hi:n")
    name, _, span = text.partition("=")
    name = name.strip()
    if name not in CONFIG_KEYS or name == "kind":
        raise InvalidParameterError(f"cannot sweep over {name!r}")
    parts = span.split(":")
    if len(parts) != 3:
        raise InvalidParameterError(f"bad sweep range {span!r}; "
                                    "expected lo:hi:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidParameterError(f"bad sweep range {span!r}") from None
    if n < 1:
        raise InvalidParameterError("sweep must have n >= 1 points")
    return name, np.linspace(lo, hi, n)


def parse_range(text: str):
    """'lo:hi:n' -> ndarray."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameterError(f"bad range {text!r}; expected lo:hi:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidParameterError(f"bad range {text!r}") from None
    if n < 1:
        raise InvalidParameterError("range must have n >= 1 points")
    return np.linspace(lo, hi, n)


def _out_path(args, default_name):
    return Path(args.out) if args.out else Path(default_name)


def _workers(args):
    return args.workers if args.workers is not None else default_workers()


# ---------------------------------------------------------------------------
# Sweep tasks (module-level so they are picklable for process pools)


class _PointTask:
    def __init__(self, values, name, kind_of_run, budget, seed):
        self.values = values
        self.name = name
        self.kind_of_run = kind_of_run
        self.budget = budget
        self.seed = seed

    def __call__(self, value):
        values = dict(self.values)
        values[self.name] = value
        params, wp = _build(values)
        if self.kind_of_run == "single":
            rep = transmission_reflection(params, wp)
            return (value, rep.t_prob, rep.r_prob, rep.loss, rep.quad_err)
        if self.kind_of_run == "two":
            rep = two_photon_probabilities(params, wp)
            return (value, rep.rr.total, rep.rr.pw, rep.rr.bs,
                    rep.rl.total, rep.rl.pw, rep.rl.bs,
                    rep.ll.total, rep.ll.pw, rep.ll.bs,
                    rep.loss2, rep.p21, rep.quad_err)
        rep = three_photon_probabilities(
            params, wp, qmc=QmcSpec(budget=self.budget, seed=self.seed))
        return (value, rep.rrr.total, rep.rrr.pw, rep.rrr.bs,
                rep.rrl.total, rep.rrl.pw, rep.rrl.bs,
                rep.rll.total, rep.rll.pw, rep.rll.bs,
                rep.lll.total, rep.lll.pw, rep.lll.bs,
                rep.loss3, rep.p31, rep.mc_err)


_SINGLE_COLS = ("T", "R", "loss", "quad_err")
_TWO_COLS = ("P_RR", "P_RR_pw", "P_RR_bs", "P_RL", "P_RL_pw", "P_RL_bs",
             "P_LL", "P_LL_pw", "P_LL_bs", "loss2", "P21", "quad_err")
_THREE_COLS = ("P_RRR", "P_RRR_pw", "P_RRR_bs", "P_RRL", "P_RRL_pw",
               "P_RRL_bs", "P_RLL", "P_RLL_pw", "P_RLL_bs", "P_LLL",
               "P_LLL_pw", "P_LLL_bs", "loss3", "P31", "mc_err")


def _run_sweep_command(args, kind_of_run, columns, default_out):
    values = _resolve(args)
    if args.sweep:
        name, points = parse_sweep(args.sweep)
    else:
        name = "delta_omega"
        points = np.array([values["delta_omega"]])
    task = _PointTask(values, name, kind_of_run, args.budget, args.seed)
    results = sweep([float(p) for p in points], task,
                    workers=_workers(args))
    rows, failures = [], []
    for res in results:
        if hasattr(res, "message"):  # SweepError
            failures.append(res)
        else:
            rows.append(res)
    if failures and not rows:
        if all(isinstance(f.error, InvalidParameterError) for f in failures):
            raise InvalidParameterError(failures[0].message)
        raise WqedError(f"all sweep points failed: {failures[0].message}")
    manifest = _manifest(args, values, kind_of_run,
                         {"sweep": f"{name}={points[0]}:{points[-1]}"
                                   f":{len(points)}",
                          "n_failures": len(failures)})
    path = _out_path(args, default_out)
    write_csv(path, (name,) + columns, rows, manifest)
    for fail in failures:
        print(f"warning: point {fail.point} failed: {fail.message}",
              file=sys.stderr)
    return path


# ---------------------------------------------------------------------------
# Subcommand implementations


def _cmd_single(args):
    _run_sweep_command(args, "single", _SINGLE_COLS, "wqed_single.csv")


def _cmd_two_photon(args):
    _run_sweep_command(args, "two", _TWO_COLS, "wqed_two_photon.csv")


def _cmd_three_photon(args):
    _run_sweep_command(args, "three", _THREE_COLS, "wqed_three_photon.csv")


def _cmd_joint_spectrum(args):
    values = _resolve(args)
    params, wp = _build(values)
    js = joint_spectra(params, wp, n=args.points,
                       half_width_sigmas=args.half_width)
    rows = []
    for i, w1 in enumerate(js.omega1):
        for j, w2 in enumerate(js.omega2):
            rows.append((w1, w2,
                         js.f["RR"][i, j], js.f["RL"][i, j],
                         js.f["LL"][i, j],
                         js.g["RR"][i, j], js.g["RL"][i, j],
                         js.g["LL"][i, j]))
    manifest = _manifest(args, values, "joint-spectrum",
                         {"points": args.points,
                          "half_width": args.half_width})
    write_csv(_out_path(args, "wqed_joint_spectrum.csv"),
              ("omega1", "omega2", "F_RR", "F_RL", "F_LL",
               "G_RR", "G_RL", "G_LL"), rows, manifest)


def _cmd_stats(args):
    values = _resolve(args)
    params, wp = _build(values)
    rep = number_statistics(params, wp, args.nbar,
                            qmc=QmcSpec(budget=args.budget, seed=args.seed))
    rows = [(n, rep.p_n[n], rep.ratio[n], rep.loss_mass) for n in range(4)]
    manifest = _manifest(args, values, "stats",
                         {"nbar": args.nbar,
                          "truncated_mass": rep.truncated_mass,
                          "mu_matched": rep.mu_matched,
                          "mc_err": rep.mc_err})
    write_csv(_out_path(args, "wqed_stats.csv"),
              ("n", "p_n", "ratio_n", "loss_mass"), rows, manifest)


def _cmd_g2(args):
    values = _resolve(args)
    params, wp = _build(values)
    taus = parse_range(args.tau)
    rep = g2(params, wp, taus)
    rows = list(zip(rep.taus, rep.values))
    manifest = _manifest(args, values, "g2", {"tau": args.tau,
                                              "g2_zero": rep.g2_zero})
    write_csv(_out_path(args, "wqed_g2.csv"), ("tau", "g2"), rows, manifest)


def _cmd_g2map(args):
    values = _resolve(args)
    omegas = parse_range(args.omega)
    purcells = parse_range(args.purcell_range)
    rep = g2_zero_map(omegas, purcells, sigma=values["sigma"],
                      delta_omega=values["delta_omega"],
                      kind=values["kind"], gamma3=values["gamma3"],
                      gamma4=values["gamma4"], workers=_workers(args))
    rows = []
    for i, om in enumerate(rep.omega_rabi):
        for j, pu in enumerate(rep.purcell):
            rows.append((om, pu, rep.log10_g2[i, j]))
    manifest = _manifest(args, values, "g2map",
                         {"omega": args.omega,
                          "purcell_range": args.purcell_range,
                          "n_failures": rep.n_failures})
    write_csv(_out_path(args, "wqed_g2map.csv"),
              ("omega_rabi", "purcell", "log10_g2"), rows, manifest)


def _complex_record(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _cmd_coeffs(args):
    values = _resolve(args)
    params, wp = _build(values)
    consts = spectral_constants(params)
    amp1 = amplitudes(params, args.k1)
    record = {
        "params": {k: (v.value if isinstance(v, AtomKind) else v)
                   for k, v in values.items()},
        "gamma1": _complex_record(consts.gamma1),
        "gamma2": _complex_record(consts.gamma2_bs),
        "lambda1": _complex_record(consts.lambda1),
        "lambda2": _complex_record(consts.lambda2),
        "xi": consts.xi, "eta": consts.eta, "chi": consts.chi,
        "gamma_prime": consts.gamma_prime,
        "k1": args.k1, "k2": args.k2,
        "tbar_k1": _complex_record(amp1.tbar),
        "t_k1": _complex_record(amp1.t),
        "r_k1": _complex_record(amp1.r),
    }
    cc = two_photon_coeffs(params, consts, args.k1, args.k2)
    record["C1"] = _complex_record(cc.c1)
    record["C2"] = _complex_record(cc.c2)
    if args.k3 is not None:
        dd = three_photon_coeffs(params, consts, args.k1, args.k2, args.k3)
        record["k3"] = args.k3
        for name in ("d1", "d2", "d3", "d4"):
            record[name.upper()] = _complex_record(getattr(dd, name))
    text = json.dumps(record, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


# ---------------------------------------------------------------------------
# Figure dataset recipes (desk-scale defaults; --points/--budget trade
# resolution and noise for time)


def _fig2(args, outdir):
    rows = []
    n = args.points or 121
    for sigma in (0.01, 0.2):
        for omega_rabi in (0.0, 1.6):
            for d in np.linspace(-3.0, 3.0, n):
                params, wp = _build({**_PARAM_DEFAULTS, "sigma": sigma,
                                     "omega_rabi": omega_rabi,
                                     "delta_omega": float(d)})
                rep = transmission_reflection(params, wp)
                rows.append((sigma, omega_rabi, d, rep.t_prob, rep.r_prob,
                             rep.loss, rep.quad_err))
    manifest = _manifest(args, _PARAM_DEFAULTS, "reproduce-figure",
                         {"figure": "fig2", "points": n})
    write_csv(outdir / "fig2.csv",
              ("sigma", "omega_rabi", "delta_omega") + _SINGLE_COLS,
              rows, manifest)
    return [outdir / "fig2.csv"]


_FIG34_SWEEPS = (("detuning", "delta_omega", -3.0, 3.0),
                 ("purcell", "purcell", 0.5, 20.0),
                 ("sigma", "sigma", 0.02, 1.0))


def _fig3(args, outdir):
    n = args.points or 41
    paths = []
    for label, name, lo, hi in _FIG34_SWEEPS:
        rows = []
        for kind in ("lambda", "n"):
            values = dict(_PARAM_DEFAULTS, kind=parse_kind(kind))
            task = _PointTask(values, name, "two", args.budget, args.seed)
            for res in sweep(list(np.linspace(lo, hi, n)), task,
                             workers=_workers(args)):
                rows.append((kind,) + res)
        manifest = _manifest(args, _PARAM_DEFAULTS, "reproduce-figure",
                             {"figure": "fig3", "sweep": label, "points": n})
        path = outdir / f"fig3_{label}.csv"
        write_csv(path, ("kind", name) + _TWO_COLS, rows, manifest)
        paths.append(path)
    return paths


def _fig4(args, outdir):
    n = args.points or 9
    paths = []
    for label, name, lo, hi in _FIG34_SWEEPS:
        rows = []
        for kind in ("lambda", "n"):
            values = dict(_PARAM_DEFAULTS, kind=parse_kind(kind))
            task2 = _PointTask(values, name, "two", args.budget, args.seed)
            task3 = _PointTask(values, name, "three", args.budget, args.seed)
            pts = list(np.linspace(lo, hi, n))
            res2 = sweep(pts, task2, workers=_workers(args))
            res3 = sweep(pts, task3, workers=_workers(args))
            for r2, r3 in zip(res2, res3):
                rows.append((kind, r2[0], r2[-2], r3[-2], r3[-1]))
        manifest = _manifest(args, _PARAM_DEFAULTS, "reproduce-figure",
                             {"figure": "fig4", "sweep": label, "points": n})
        path = outdir / f"fig4_{label}.csv"
        write_csv(path, ("kind", name, "P21", "P31", "mc_err"),
                  rows, manifest)
        paths.append(path)
    return paths


def _fig5(args, outdir):
    n = args.points or 201
    paths = []
    for kind in ("lambda", "n"):
        values = dict(_PARAM_DEFAULTS, kind=parse_kind(kind), sigma=0.01)
        params, wp = _build(values)
        js = joint_spectra(params, wp, n=n)
        rows = []
        for i, w1 in enumerate(js.omega1):
            for j, w2 in enumerate(js.omega2):
                rows.append((w1, w2, js.f["RR"][i, j], js.f["RL"][i, j],
                             js.f["LL"][i, j], js.g["RR"][i, j],
                             js.g["RL"][i, j], js.g["LL"][i, j]))
        manifest = _manifest(args, values, "reproduce-figure",
                             {"figure": "fig5", "points": n})
        path = outdir / f"fig5_{kind}.csv"
        write_csv(path, ("omega1", "omega2", "F_RR", "F_RL", "F_LL",
                         "G_RR", "G_RL", "G_LL"), rows, manifest)
        paths.append(path)
    return paths


def _fig6(args, outdir):
    n = args.points or 4
    omegas = np.linspace(0.4, 3.0, n)
    purcells = np.linspace(1.0, 20.0, n)
    paths = []
    for kind in ("lambda", "n"):
        rows = []
        for om in omegas:
            for pu in purcells:
                values = dict(_PARAM_DEFAULTS, kind=parse_kind(kind),
                              sigma=0.2, omega_rabi=float(om),
                              purcell=float(pu))
                params, wp = _build(values)
                try:
                    rep = number_statistics(
                        params, wp, 1.0,
                        qmc=QmcSpec(budget=args.budget, seed=args.seed))
                    rows.append((om, pu) + tuple(rep.ratio))
                except WqedError:
                    rows.append((om, pu) + (np.nan,) * 4)
        manifest = _manifest(args, _PARAM_DEFAULTS, "reproduce-figure",
                             {"figure": "fig6", "points": n, "nbar": 1.0})
        path = outdir / f"fig6_{kind}.csv"
        write_csv(path, ("omega_rabi", "purcell", "ratio_0", "ratio_1",
                         "ratio_2", "ratio_3"), rows, manifest)
        paths.append(path)
    return paths


def _fig7(args, outdir):
    n = args.points or 21
    rep = g2_zero_map(np.linspace(0.1, 3.0, n), np.linspace(0.0, 20.0, n),
                      sigma=0.2, workers=_workers(args))
    rows = []
    for i, om in enumerate(rep.omega_rabi):
        for j, pu in enumerate(rep.purcell):
            rows.append((om, pu, rep.log10_g2[i, j]))
    manifest = _manifest(args, _PARAM_DEFAULTS, "reproduce-figure",
                         {"figure": "fig7", "panel": "a", "points": n})
    path_a = outdir / "fig7_map.csv"
    write_csv(path_a, ("omega_rabi", "purcell", "log10_g2"), rows, manifest)

    taus = np.linspace(0.0, 10.0, args.points or 101)
    rows = []
    for purcell in (0.0, 2.0, 9.0, 16.0):
        values = dict(_PARAM_DEFAULTS, purcell=purcell)
        params, wp = _build(values)
        repg = g2(params, wp, taus)
        for tau, val in zip(repg.taus, repg.values):
            rows.append((purcell, tau, val))
    manifest = _manifest(args, _PARAM_DEFAULTS, "reproduce-figure",
                         {"figure": "fig7", "panel": "b"})
    path_b = outdir / "fig7_tau.csv"
    write_csv(path_b, ("purcell", "tau", "g2"), rows, manifest)
    return [path_a, path_b]


_FIGURES = {"fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5,
            "fig6": _fig6, "fig7": _fig7}


def _cmd_reproduce_figure(args):
    outdir = Path(args.out) if args.out else Path("figdata")
    outdir.mkdir(parents=True, exist_ok=True)
    paths = _FIGURES[args.figure](args, outdir)
    for p in paths:
        print(p)


# ---------------------------------------------------------------------------
# Entry point


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wqed",
        description="Few-photon scattering observables for a waveguide "
                    "coupled to a driven multilevel emitter.")
    parser.add_argument("--version", action="version",
                        version=f"wqed {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("single", help="wavepacket T/R/loss (sweepable)")
    _add_common(p)
    p.add_argument("--sweep", type=str, default=None,
                   help="name=lo:hi:n over any numeric parameter")
    p.set_defaults(func=_cmd_single)

    p = sub.add_parser("two-photon", help="two-photon channel probabilities")
    _add_common(p)
    p.add_argument("--sweep", type=str, default=None)
    p.set_defaults(func=_cmd_two_photon)

    p = sub.add_parser("three-photon",
                       help="three-photon channel probabilities (QMC)")
    _add_common(p)
    p.add_argument("--sweep", type=str, default=None)
    p.set_defaults(func=_cmd_three_photon)

    p = sub.add_parser("joint-spectrum",
                       help="joint/uncorrelated two-photon spectra")
    _add_common(p)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--half-width", type=float, default=5.0,
                   help="grid half-width in units of sigma")
    p.set_defaults(func=_cmd_joint_spectrum)

    p = sub.add_parser("stats", help="transmitted photon-number statistics")
    _add_common(p)
    p.add_argument("--nbar", type=float, required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("g2", help="second-order correlation vs delay")
    _add_common(p)
    p.add_argument("--tau", type=str, default="0:10:201",
                   help="delay grid lo:hi:n")
    p.set_defaults(func=_cmd_g2)

    p = sub.add_parser("g2map", help="log10 g2(0) over (omega_rabi, P)")
    _add_common(p)
    p.add_argument("--omega", type=str, default="0.1:3:30",
                   help="omega_rabi grid lo:hi:n")
    p.add_argument("--purcell-range", type=str, default="0.1:20:30",
                   help="purcell grid lo:hi:n")
    p.set_defaults(func=_cmd_g2map)

    p = sub.add_parser("coeffs",
                       help="JSON snapshot of spectral constants and "
                            "coefficients")
    _add_common(p)
    p.add_argument("--k1", type=float, required=True)
    p.add_argument("--k2", type=float, required=True)
    p.add_argument("--k3", type=float, default=None)
    p.set_defaults(func=_cmd_coeffs)

    p = sub.add_parser("reproduce-figure",
                       help="emit a figure dataset at desk scale")
    p.add_argument("figure", choices=sorted(_FIGURES))
    _add_common(p)
    p.add_argument("--points", type=int, default=None,
                   help="override the per-figure default resolution")
    p.set_defaults(func=_cmd_reproduce_figure)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WqedError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
