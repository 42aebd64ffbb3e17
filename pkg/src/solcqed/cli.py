"""Command-line front end.

    solcqed map --n-segments 5 --out fig2e.csv
    solcqed phasematch --n-segments 5 --q-max 2 --format json
    solcqed trajectory --n-segments 5 --p 1 --q 1 --steps 1000 --out traj.csv
    solcqed --validate traj.csv

Exit status: 0 success, 2 invalid configuration, 3 internal inconsistency,
4 I/O failure.  Diagnostics go to stderr; stdout carries at most one JSON
summary line.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, bloch, fileio, sweep, transfer
from .core import InternalConsistencyError, InvalidParameterError, ReducedParams

log = logging.getLogger("solcqed")

EXIT_OK, EXIT_CONFIG, EXIT_INTERNAL, EXIT_IO = 0, 2, 3, 4
OUTPUT_DIR_ENV = "SOLCQED_OUTPUT_DIR"
SUBCOMMANDS = ("map", "trajectory", "passband", "mandelq", "fourier", "phasematch")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    parameters: dict = field(default_factory=dict)
    output_format: str = "csv"
    emit_plot_script: bool = False
    out: Path | None = None
    threads: int = 0
    quiet: bool = False

    def output_path(self) -> Path:
        if self.out is not None:
            return Path(self.out)
        base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
        return base / f"{self.subcommand}.{self.output_format}"


def _positive_int(name, v, minimum=1):
    if v is None or int(v) != v or v < minimum:
        raise ConfigError(f"--{name} must be an integer >= {minimum}, got {v}")


def validate(cfg: RunConfig) -> None:
    """Reject bad parameters before any computation starts."""
    p = cfg.parameters
    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {cfg.subcommand!r}")
    if cfg.output_format not in ("csv", "json"):
        raise ConfigError(f"unknown format {cfg.output_format!r}")
    if cfg.threads < 0:
        raise ConfigError("--threads must be >= 0")
    _positive_int("n-segments", p["n_segments"])
    n = p["n_segments"]
    sc = cfg.subcommand
    try:
        if sc == "map":
            sweep.AxisSpec("delta_over_pi", *p["delta_axis"])
            sweep.AxisSpec("eta", *p["eta_axis"])
            if p["method"] == "table" and not 1 <= n <= 8:
                raise ConfigError("--method table supports N = 1..8 only")
        elif sc == "mandelq":
            sweep.AxisSpec("n", *p["n_axis"])
            sweep.AxisSpec("delta_over_pi", *p["delta_axis"])
            if not p["n_axis"][0] > 0:
                raise ConfigError("--n-min must be > 0")
            if not p["d_cav"] > 0:
                raise ConfigError("--d-cav must be > 0")
        elif sc == "trajectory":
            _positive_int("steps", p["steps"], bloch.MIN_STEPS)
            _positive_int("every", p["every"])
            if p["p"] is not None or p["q"] is not None:
                if p["p"] is None or p["q"] is None:
                    raise ConfigError("--p and --q must be given together")
                if not 1 <= p["p"] <= n:
                    raise ConfigError(f"--p must lie in 1..{n}")
                _positive_int("q", p["q"])
            elif p["eta"] is None or p["delta_over_pi"] is None:
                raise ConfigError("give either --p/--q or --eta/--delta-over-pi")
        elif sc == "passband":
            if not 1 <= p["p"] <= n:
                raise ConfigError(f"--p must lie in 1..{n}")
            if not p["phi_max_over_pi"] > 0:
                raise ConfigError("--phi-max-over-pi must be > 0")
            _positive_int("samples", p["samples"], 2)
        elif sc == "fourier":
            _positive_int("l-max", p["l_max"])
        elif sc == "phasematch":
            _positive_int("q-max", p["q_max"])
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None


def _check_writable(path: Path) -> None:
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {path}")


# -- subcommand bodies: each returns (text, summary, plot_script or None) ---------

def _gnuplot_header(title: str) -> str:
    return ("set datafile separator ','\n"
            "set datafile commentschars '#'\n"
            f"set title '{title}'\n")


def _run_map(cfg: RunConfig, out: Path):
    p = cfg.parameters
    n = p["n_segments"]
    dax = sweep.AxisSpec("delta_over_pi", *p["delta_axis"])
    eax = sweep.AxisSpec("eta", *p["eta_axis"])
    if p["method"] == "direct":
        grid = sweep.scan_emission(n, dax, eax, workers=cfg.threads)
    else:
        D, E = np.meshgrid(dax.values * math.pi, eax.values)
        r = ReducedParams(E, D, n)
        vals = transfer.emission_closed(r) if p["method"] == "closed" \
            else transfer.table_polynomial(n, r)
        grid = sweep.ScalarGrid(dax, eax, vals, sweep.EMISSION, {"N": n})
    geom = sweep.branch_geometry(n, p["q_max"], (dax, eax))
    extra = {"method": p["method"],
             "branch_lines": [{"p": l.p, "theta": l.theta, "start": list(l.start),
                               "end": list(l.end)} for l in geom.lines],
             "branch_circles": [{"q": c.q, "radius": c.radius} for c in geom.circles]}
    text = fileio.grid_to_csv(grid, extra) if cfg.output_format == "csv" \
        else fileio.grid_to_json(grid, extra)
    plot = None
    if cfg.emit_plot_script and cfg.output_format == "csv":
        lines = [_gnuplot_header(f"emission probability, N = {n}"),
                 "set xlabel 'delta / pi'\nset ylabel 'eta'\nset cbrange [0:1]\n"]
        for i, l in enumerate(geom.lines, start=1):
            lines.append(f"set arrow {i} from {fileio.fmt(l.start[0])},{fileio.fmt(l.start[1])} "
                         f"to {fileio.fmt(l.end[0])},{fileio.fmt(l.end[1])} nohead dt 2 front\n")
        for i, c in enumerate(geom.circles, start=1):
            lines.append(f"set object {i} ellipse center 0,0 size "
                         f"{fileio.fmt(2 * c.radius / math.pi)},{fileio.fmt(2 * c.radius)} "
                         "front fillstyle empty border lc rgb 'white' dt 2\n")
        lines.append(f"plot '{out.name}' every ::1 using 1:2:3 with image notitle\n")
        plot = "".join(lines)
    summary = {"max": float(np.max(grid.values)), "min": float(np.min(grid.values))}
    return text, summary, plot


def _run_mandelq(cfg: RunConfig, out: Path):
    p = cfg.parameters
    nax = sweep.AxisSpec("n", *p["n_axis"])
    dax = sweep.AxisSpec("delta_over_pi", *p["delta_axis"])
    grid = sweep.scan_mandel_q(p["n_segments"], p["eta0"], p["d_cav"], nax, dax,
                               workers=cfg.threads)
    stable = grid.stable_mask()
    iy, ix = grid.argmin(stable)
    extra = {"stable_region": "Q > -1 (slope < d_cav)",
             "min_q_stable": fileio.json_number(grid.values[iy, ix]),
             "min_q_at": {"n": float(nax.values[ix]), "delta_over_pi": float(dax.values[iy])}}
    text = fileio.grid_to_csv(grid, extra) if cfg.output_format == "csv" \
        else fileio.grid_to_json(grid, extra)
    plot = None
    if cfg.emit_plot_script and cfg.output_format == "csv":
        plot = (_gnuplot_header(f"Mandel Q, N = {p['n_segments']} (negative part)")
                + "set xlabel 'n'\nset ylabel 'delta / pi'\nset cbrange [-1:0]\n"
                + f"plot '{out.name}' every ::1 using 1:2:($3 < 0 && $3 > -1 ? $3 : NaN) "
                  "with image notitle\n")
    return text, {"min_q_stable": extra["min_q_stable"]}, plot


def _trajectory_params(p) -> ReducedParams:
    n = p["n_segments"]
    if p["p"] is not None:
        theta = bloch.phase_match_theta(n, p["p"])
        radius = (2 * p["q"] - 1) * math.pi
        return ReducedParams(radius * math.sin(theta), radius * math.cos(theta), n)
    return ReducedParams(p["eta"], p["delta_over_pi"] * math.pi, n)


def _run_trajectory(cfg: RunConfig, out: Path):
    p = cfg.parameters
    r = _trajectory_params(p)
    traj = bloch.integrate_trajectory(r, p["steps"], renormalize=p["renormalize"])
    keep = np.arange(0, len(traj), p["every"])
    if keep[-1] != len(traj) - 1:
        keep = np.append(keep, len(traj) - 1)
    records = [{"t": traj.t[i], "segment": int(traj.segment[i]), "x": traj.R[i, 0],
                "y": traj.R[i, 1], "z": traj.R[i, 2], "norm_drift": traj.norm_drift[i]}
               for i in keep]
    meta = {"quantity": "trajectory", "N": r.n_segments, "eta": r.eta,
            "delta_over_pi": r.delta / math.pi, "steps_per_segment": p["steps"],
            "renormalize": p["renormalize"], "every": p["every"],
            "p_em": bloch.emission_from_trajectory(traj),
            "max_norm_drift": traj.max_norm_drift}
    text = fileio.records_to_csv(records, fileio.TRAJECTORY_COLUMNS, meta) \
        if cfg.output_format == "csv" else fileio.records_to_json(records, meta)
    plot = None
    if cfg.emit_plot_script and cfg.output_format == "csv":
        plot = (_gnuplot_header(f"Bloch trajectory, N = {r.n_segments}")
                + "set view equal xyz\nset xrange [-1:1]\nset yrange [-1:1]\n"
                  "set zrange [-1:1]\nset parametric\nset urange [0:2*pi]\n"
                  "set vrange [-pi/2:pi/2]\nset isosamples 13\n"
                + f"splot cos(u)*cos(v),sin(u)*cos(v),sin(v) lc rgb 'grey' notitle, "
                  f"'{out.name}' every ::1 using 3:4:5:2 with lines lc variable notitle\n")
    summary = {"final_z": float(traj.R[-1, 2]), "p_em": meta["p_em"]}
    return text, summary, plot


def _run_passband(cfg: RunConfig, out: Path):
    p = cfg.parameters
    spec = analysis.passband(p["n_segments"], p["p"], p["phi_max_over_pi"] * math.pi,
                             p["samples"])
    theta = spec.theta
    records = [{"phi_over_pi": phi / math.pi, "delta_over_pi": phi * math.cos(theta) / math.pi,
                "eta": phi * math.sin(theta), "p_em": v}
               for phi, v in zip(spec.phi_axis, spec.values)]
    meta = {"quantity": "passband", "N": spec.N, "p": spec.p, "theta": theta,
            "phi_max_over_pi": p["phi_max_over_pi"], "samples": p["samples"]}
    try:
        meta["fwhm_q1"] = analysis.passband_fwhm(spec, math.pi)
    except analysis.PeakNotFoundError:
        meta["fwhm_q1"] = None
    cols = ("phi_over_pi", "delta_over_pi", "eta", "p_em")
    text = fileio.records_to_csv(records, cols, meta) if cfg.output_format == "csv" \
        else fileio.records_to_json(records, meta)
    plot = None
    if cfg.emit_plot_script and cfg.output_format == "csv":
        plot = (_gnuplot_header(f"passband, N = {spec.N}, p = {spec.p}")
                + "set xlabel 'phi / pi'\nset ylabel 'P_em'\nset yrange [0:1.05]\n"
                + f"plot '{out.name}' every ::1 using 1:4 with lines notitle\n")
    return text, {"fwhm_q1": meta["fwhm_q1"]}, plot


def _run_fourier(cfg: RunConfig, out: Path):
    p = cfg.parameters
    fc = analysis.fourier_coefficients(p["n_segments"], p["l_max"])
    records = [{"l": l, "re": c.real, "im": c.imag, "power": abs(c) ** 2}
               for l, c in sorted(fc.coefficients.items())]
    partial = fc.parseval_partial_sums()
    meta = {"quantity": "fourier", "N": fc.N, "l_max": p["l_max"], "units": "g0",
            "parseval_sum": float(partial[-1])}
    text = fileio.records_to_csv(records, ("l", "re", "im", "power"), meta) \
        if cfg.output_format == "csv" else fileio.records_to_json(records, meta)
    plot = None
    if cfg.emit_plot_script and cfg.output_format == "csv":
        plot = (_gnuplot_header(f"|G(l)|^2, N = {fc.N}")
                + "set xlabel 'l'\nset ylabel '|G|^2 / g0^2'\n"
                + f"plot '{out.name}' every ::1 using 1:4 with impulses lw 2 notitle\n")
    return text, {"parseval_sum": meta["parseval_sum"]}, plot


def _run_phasematch(cfg: RunConfig, out: Path):
    p = cfg.parameters
    n = p["n_segments"]
    pts = bloch.phase_match_points(n, p["q_max"])
    records = []
    for pt in pts:
        records.append({"p": pt.p, "q": pt.q, "sign": pt.sign, "theta": pt.theta,
                        "delta_over_pi": pt.delta_over_pi, "eta": pt.eta_opt,
                        "p_em": transfer.emission_direct(ReducedParams(pt.eta_opt, pt.delta_opt, n))})
    meta = {"quantity": "phasematch", "N": n, "q_max": p["q_max"]}
    cols = ("p", "q", "sign", "theta", "delta_over_pi", "eta", "p_em")
    text = fileio.records_to_csv(records, cols, meta) if cfg.output_format == "csv" \
        else fileio.records_to_json(records, meta)
    plot = None
    if cfg.emit_plot_script and cfg.output_format == "csv":
        plot = (_gnuplot_header(f"phase-matched points, N = {n}")
                + "set xlabel 'delta / pi'\nset ylabel 'eta'\n"
                + f"plot '{out.name}' every ::1 using 5:6 with points pt 2 notitle\n")
    return text, {"count": len(records)}, plot


RUNNERS = {"map": _run_map, "mandelq": _run_mandelq, "trajectory": _run_trajectory,
           "passband": _run_passband, "fourier": _run_fourier, "phasematch": _run_phasematch}


def run(cfg: RunConfig) -> int:
    """Validate, compute, write.  Returns the process exit status."""
    try:
        validate(cfg)
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    out = cfg.output_path()
    try:
        _check_writable(out)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    try:
        text, summary, plot = RUNNERS[cfg.subcommand](cfg, out)
    except InternalConsistencyError as exc:
        log.error("internal consistency check failed: %s", exc)
        return EXIT_INTERNAL
    except InvalidParameterError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    try:
        fileio.atomic_write(out, text)
        written = [str(out)]
        if plot is not None:
            script = out.with_suffix(".gp")
            fileio.atomic_write(script, plot)
            written.append(str(script))
    except OSError as exc:
        log.error("write failed: %s", exc)
        return EXIT_IO
    if not cfg.quiet:
        print(json.dumps({"subcommand": cfg.subcommand, "files": written, **summary},
                         sort_keys=True))
    return EXIT_OK


def validate_file(path: str, quiet: bool = False) -> int:
    """Parse an artifact written by this tool and report what was found."""
    try:
        meta, records = fileio.read_records(path)
    except OSError as exc:
        log.error("cannot read %s: %s", path, exc)
        return EXIT_IO
    except (fileio.ArtifactFormatError, ValueError, KeyError) as exc:
        log.error("%s is not a valid artifact: %s", path, exc)
        return EXIT_CONFIG
    if not quiet:
        print(json.dumps({"valid": True, "path": path, "quantity": meta.get("quantity"),
                          "rows": len(records),
                          "columns": list(records[0]) if records else []}, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="solcqed", formatter_class=fmt,
                                     description="Poled atom-cavity coupling: maps, "
                                                 "trajectories, passbands, Mandel Q.")
    parser.add_argument("--validate", metavar="FILE",
                        help="parse a file written by this tool and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n-segments", "-N", type=int, required=True,
                        help="number of poled intervals N")
    common.add_argument("--out", type=Path, default=None,
                        help=f"output file (default: ${OUTPUT_DIR_ENV}/<subcommand>.<format>)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--plot-script", action="store_true",
                        help="also write a gnuplot script next to the CSV output")
    common.add_argument("--threads", type=int, default=0, help="worker processes, 0 = auto")
    common.add_argument("--seed", type=int, default=None,
                        help="accepted for interface stability; nothing is random")
    common.add_argument("--quiet", action="store_true", help="no JSON summary on stdout")

    sub = parser.add_subparsers(dest="subcommand")
    d2, e2 = sweep.FIG2_DELTA, sweep.FIG2_ETA
    p = sub.add_parser("map", parents=[common], formatter_class=fmt,
                       help="emission probability over (delta, eta)")
    p.add_argument("--delta-min", type=float, default=d2[1], help="in units of pi")
    p.add_argument("--delta-max", type=float, default=d2[2], help="in units of pi")
    p.add_argument("--delta-count", type=int, default=d2[3])
    p.add_argument("--eta-min", type=float, default=e2[1])
    p.add_argument("--eta-max", type=float, default=e2[2])
    p.add_argument("--eta-count", type=int, default=e2[3])
    p.add_argument("--q-max", type=int, default=2, help="branch circles in the overlay")
    p.add_argument("--method", choices=("direct", "closed", "table"), default="direct")

    p = sub.add_parser("trajectory", parents=[common], formatter_class=fmt,
                       help="RK4 Bloch-vector trajectory")
    p.add_argument("--p", type=int, default=None, help="branch line of the phase-matched point")
    p.add_argument("--q", type=int, default=None, help="branch circle of the phase-matched point")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--delta-over-pi", type=float, default=None)
    p.add_argument("--steps", type=int, default=bloch.DEFAULT_STEPS, help="RK4 steps per interval")
    p.add_argument("--every", type=int, default=1, help="keep every k-th sample")
    p.add_argument("--renormalize", action="store_true")

    p = sub.add_parser("passband", parents=[common], formatter_class=fmt,
                       help="emission along a branch line versus phi")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--phi-max-over-pi", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=2001)

    d5, n5 = sweep.FIG5_DELTA, sweep.FIG5_N
    p = sub.add_parser("mandelq", parents=[common], formatter_class=fmt,
                       help="Mandel Q over (n, delta)")
    p.add_argument("--eta0", type=float, default=sweep.FIG5_ETA0)
    p.add_argument("--d-cav", type=float, default=sweep.FIG5_D_CAV)
    p.add_argument("--n-min", type=float, default=n5[1])
    p.add_argument("--n-max", type=float, default=n5[2])
    p.add_argument("--n-count", type=int, default=n5[3])
    p.add_argument("--delta-min", type=float, default=d5[1], help="in units of pi")
    p.add_argument("--delta-max", type=float, default=d5[2], help="in units of pi")
    p.add_argument("--delta-count", type=int, default=d5[3])

    p = sub.add_parser("fourier", parents=[common], formatter_class=fmt,
                       help="Fourier coefficients of the poled coupling")
    p.add_argument("--l-max", type=int, default=32)

    p = sub.add_parser("phasematch", parents=[common], formatter_class=fmt,
                       help="complete-emission points")
    p.add_argument("--q-max", type=int, default=2)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    sc = args.subcommand
    p = {"n_segments": args.n_segments}
    if sc == "map":
        p.update(delta_axis=(args.delta_min, args.delta_max, args.delta_count),
                 eta_axis=(args.eta_min, args.eta_max, args.eta_count),
                 q_max=args.q_max, method=args.method)
    elif sc == "mandelq":
        p.update(eta0=args.eta0, d_cav=args.d_cav,
                 n_axis=(args.n_min, args.n_max, args.n_count),
                 delta_axis=(args.delta_min, args.delta_max, args.delta_count))
    elif sc == "trajectory":
        p.update(p=args.p, q=args.q, eta=args.eta, delta_over_pi=args.delta_over_pi,
                 steps=args.steps, every=args.every, renormalize=args.renormalize)
    elif sc == "passband":
        p.update(p=args.p, phi_max_over_pi=args.phi_max_over_pi, samples=args.samples)
    elif sc == "fourier":
        p.update(l_max=args.l_max)
    elif sc == "phasematch":
        p.update(q_max=args.q_max)
    return RunConfig(sc, p, args.format, args.plot_script, args.out, args.threads, args.quiet)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s", stream=sys.stderr)
    if args.validate:
        return validate_file(args.validate)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
