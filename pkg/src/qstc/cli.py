"""Command-line entry point ``qstc``.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 invariant
breach during a run.  Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import config, deadbeat, matops, simkernel, standard
from .errors import FrameBreach, InvariantBreach, QSTCError

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_BREACH = 0, 1, 2, 3

FIGURES = {
    "3": ["fig3_standard_N31", "fig3_standard_N101", "fig3_deadbeat_N11", "fig3_deadbeat_N101"],
    "4": ["fig4_standard_sigma0193", "fig4_standard_sigma0343", "fig4_deadbeat_sigma0193",
          "fig4_deadbeat_sigma0343"],
    "5": ["fig5_standard_dos", "fig5_deadbeat_dos"],
    "6": ["fig6_standard", "fig6_deadbeat"],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def data_path(name: str) -> Path:
    return Path(str(resources.files("qstc") / "data" / name))


def _write_run(sc, cfg, trace, out: Path, stem="") -> dict:
    out.mkdir(parents=True, exist_ok=True)
    pre = f"{stem}_" if stem else ""
    trace.to_csv(out / f"{pre}trace.csv")
    summary = simkernel.summarize(sc, trace)
    (out / f"{pre}summary.json").write_text(simkernel.summary_json(summary))
    (out / f"{pre}resolved_config.yaml").write_text(config.dump_config(config.resolved_config(cfg, sc)))
    return summary


def cmd_simulate(args) -> int:
    cfg = config.load_config(args.config)
    sc = config.build_scenario(cfg)
    out = Path(args.out or cfg["run"]["output_dir"])
    try:
        trace = simkernel.run_closed_loop(sc)
    except (FrameBreach, InvariantBreach) as exc:
        partial = getattr(exc, "trace", None)
        if partial is not None:
            out.mkdir(parents=True, exist_ok=True)
            partial.to_csv(out / "trace.csv")
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_BREACH
    summary = _write_run(sc, cfg, trace, out)
    print(simkernel.summary_json(summary), end="")
    return EXIT_OK


def _load_grid(path):
    grid = yaml.safe_load(Path(path).read_text()) or {}
    unknown = set(grid) - {"sigma", "N", "tau_max"}
    if unknown:
        raise config.SchemaError(str(path), f"unknown grid keys {sorted(unknown)}")
    return grid


SWEEP_COLS = ["sigma", "N", "tau_max", "feasible", "omega1", "omega_a", "dos_bound", "sample_count", "omega_hat",
              "reason"]


def write_sweep(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else (repr(row[k]) if isinstance(row.get(k), float) else row[k]))
                        for k in SWEEP_COLS})


def run_sweep(cfg, grid):
    base = config.build_scenario(cfg)
    t = cfg["trigger"]
    return simkernel.sweep_tradeoff(base, grid.get("sigma", [t["sigma"]]), grid.get("N", [t["N"]]),
                                    grid.get("tau_max", [t["tau_max"]]))


def cmd_sweep(args) -> int:
    cfg = config.load_config(args.config)
    rows = run_sweep(cfg, _load_grid(args.grid))
    out = Path(args.out or cfg["run"]["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_sweep(rows, out / "sweep.csv")
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    return EXIT_OK


def cmd_verify_gains(args) -> int:
    cfg = config.load_config(args.config)
    model = config.build_model(cfg)
    gains = config.build_gains(cfg, model)
    variant = cfg["run"]["variant"]
    ok = True
    lines = [f"eta = {model.eta}, Delta = {model.Delta!r}, delta = {model.delta!r}"]
    rho_k = matops.spectral_radius(model.A + model.B @ gains.K)
    lines.append(f"rho(A + BK) = {rho_k:.10g}")
    if variant == "standard":
        ok &= rho_k < 1 - matops.SCHUR_TOL
        rho_l = matops.spectral_radius(model.A - gains.L @ model.C)
        ok &= rho_l < 1 - matops.SCHUR_TOL
        lines.append(f"rho(A - LC) = {rho_l:.10g}")
    else:
        res = deadbeat.verify_deadbeat_gain(model.At, model.Bt, gains.K, model.eta)
        thresh = standard.DEADBEAT_RTOL * max(1.0, matops.inf_norm(model.At) ** model.eta)
        ok &= res <= thresh
        lines.append(f"||(At + Bt K)^eta|| = {res:.3e} (threshold {thresh:.3e})")
        rho_m = matops.spectral_radius(model.A @ (np.eye(model.n_x) - gains.M @ model.C))
        ok &= rho_m < 1 - matops.SCHUR_TOL
        lines.append(f"rho(At^eta (I - MC)) = {rho_m:.10g}")
    print("\n".join(lines))
    if not ok:
        print("gain check failed", file=sys.stderr)
        return EXIT_INVALID
    sc = config.build_scenario(cfg)
    b = sc.bounds()
    print(f"certificate: gamma = {b['gamma']:.10g}, Gamma = {b['Gamma']:.10g}")
    print(f"sigma interval: [{b['sigma_lo']:.6g}, {b['sigma_hi']:.6g}), sigma = {b['sigma']:.6g}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = config.load_config(args.config)
    sc = config.build_scenario(cfg)
    print(json.dumps(sc.bounds(), indent=2, sort_keys=True))
    return EXIT_OK


GNUPLOT = """set datafile separator ','
set key autotitle columnhead
set logscale y
set xlabel 's'
m(a, b) = a > b ? a : b
set multiplot layout {n},1
{plots}
unset multiplot
"""


def _norm_expr(n_x: int) -> str:
    """gnuplot expression for the max-abs state on rows with k = 0 (x0 is column 3)."""
    expr = "abs($3)"
    for c in range(4, 3 + n_x):
        expr = f"m({expr}, abs(${c}))"
    return f"($2 == 0 ? {expr} : 1/0)"


def _gnuplot(names, n_x=4, kind="trace"):
    if kind == "sweep":
        plots = "\n".join(f"plot '{n}.csv' using 1:7 with linespoints title '{n} dos_bound'" for n in names)
    else:
        plots = "\n".join(
            f"plot '{n}_trace.csv' using 1:{_norm_expr(n_x)} with lines title '{n} |x|', "
            f"'' using 1:(column('E')) with lines title 'E', "
            f"'' using 1:(column('sampled') > 0 ? column('E') : 1/0) with points pt 7 title 'samples'"
            for n in names)
    return GNUPLOT.format(n=len(names), plots=plots)


def cmd_reproduce(args) -> int:
    figs = [args.fig] if args.fig else sorted(FIGURES)
    out = Path(args.out)
    for fig in figs:
        names = FIGURES[fig]
        fig_dir = out / f"fig{fig}"
        fig_dir.mkdir(parents=True, exist_ok=True)
        for name in names:
            cfg = config.load_config(data_path(f"{name}.yaml"))
            if fig == "6":
                grid = _load_grid(data_path("fig6_grid.yaml"))
                write_sweep(run_sweep(cfg, grid), fig_dir / f"{name}.csv")
                continue
            sc = config.build_scenario(cfg)
            try:
                trace = simkernel.run_closed_loop(sc)
            except (FrameBreach, InvariantBreach) as exc:
                print(f"{name}: invariant breach: {exc}", file=sys.stderr)
                return EXIT_BREACH
            s = _write_run(sc, cfg, trace, fig_dir, stem=name)
            print(f"{name}: samples={s['sample_count']} omega_hat={s['omega_hat']} "
                  f"final |x|={s['x_final_norm']:.3e} dos_bound={s['dos_bound']}")
        (fig_dir / f"fig{fig}.gp").write_text(_gnuplot(names, kind="sweep" if fig == "6" else "trace"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qstc", description="Self-triggered quantized-output control simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("simulate", help="run one scenario")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)
    s = sub.add_parser("sweep", help="trade-off sweep over sigma, N, tau_max")
    s.add_argument("--config", required=True)
    s.add_argument("--grid", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("verify-gains", help="stability checks and certificates")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_verify_gains)
    s = sub.add_parser("bounds", help="print alpha, omega1, omega_a and the DoS bound")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_bounds)
    s = sub.add_parser("reproduce-paper", help="run the shipped batch-reactor scenarios")
    s.add_argument("--fig", choices=sorted(FIGURES))
    s.add_argument("--out", default="reproduce")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FrameBreach, InvariantBreach) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except (QSTCError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
