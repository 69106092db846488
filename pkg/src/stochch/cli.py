"""Command-line entry point.

    stochch simulate --config run.ini [--seed N] [--out DIR] [--paths N] [--quiet]
    stochch study:<name> --config run.ini ...
    stochch verify

Each invocation writes ``<out>/<run-id>/`` holding the resolved config echo,
CSV output, a plain-text report and PNG figures.  The run id is derived from
the command and a hash of the resolved config, so reruns overwrite the same
directory with byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import experiments as ex
from . import output, plotting, verify
from . import noise as nz
from .diagnostics import SERIES_COLUMNS, ensemble_summary, estimate_suite, series_rows
from .errors import StochCHError
from .stepper import run_paths

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
DEFAULT_STUDY_PATHS = 64

ESTIMATE_COLUMNS = (
    "path", "est1", "est2", "est2_star", "sup_grad_u2", "sup_j_lam", "grad_w_l2",
    "mean_defect", "residual_max", "sup_H",
)


def _say(args, text: str):
    if not args.quiet:
        print(text, end="" if text.endswith("\n") else "\n")


def _resolve(args) -> cfgmod.RunConfig:
    rc = cfgmod.parse_config(args.config) if args.config else cfgmod.parse_text("")
    if args.seed is not None:
        rc = rc.replace("run", seed=args.seed)
    if args.paths is not None:
        rc = rc.replace("run", paths=args.paths)
    return rc


def _run_dir(args, command: str, rc: cfgmod.RunConfig) -> Path:
    rid = f"{command.replace(':', '-')}-{rc.digest()}"
    d = output.ensure_dir(Path(args.out) / rid)
    output.write_text(d / "config.echo", rc.echo())
    return d


def simulate(args, rc: cfgmod.RunConfig) -> int:
    d = _run_dir(args, "simulate", rc)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sim = cfgmod.build_simulation(rc)
        n_paths = rc.get("run", "paths") or 1
        records = run_paths(sim, list(range(n_paths)))
    rec = records[0]
    output.write_csv(d / "series.csv", SERIES_COLUMNS, series_rows(rec))
    reports = [estimate_suite(r) for r in records]
    rows = [
        (r.path_id, e.est1, e.est2, e.est2_star, e.sup_grad_u2, e.sup_j_lam, e.grad_w_l2, e.mean_defect, e.residual_max, e.sup_H)
        for r, e in zip(records, reports)
    ]
    output.write_csv(d / "estimates.csv", ESTIMATE_COLUMNS, rows)
    if rc.get("output", "snapshots"):
        snap = output.ensure_dir(d / "snapshots")
        for i, t in enumerate(rec.times):
            output.write_snapshot(snap / f"u_{i:05d}.chs", sim.domain, sim.domain.to_physical(rec.u[i]), float(t))
    if rc.get("output", "figures"):
        plotting.plot_series(rec.times, {k: rec.series[k][rec.steps] for k in rec.series}, d / "series.png", "path 0")
        plotting.plot_field(sim.domain, sim.domain.to_physical(rec.u[-1]), d / "field.png", f"u at t = {rec.times[-1]:g}")

    checks = {
        "mean law": all(e.mean_law_ok for e in reports),
        "est2* <= est2": all(e.fenchel_ok for e in reports),
        "residual <= 1e-9 (1 + |u|_H)": all(
            np.all(r.series["residual"] <= 1e-9 * (1.0 + r.series["H_norm"])) for r in records
        ),
    }
    lines = [f"simulate seed={rc.seed} paths={n_paths} steps={sim.n_steps} dt={sim.dt:g} lambda={sim.lam:g}"]
    for k, (m, se) in ensemble_summary(reports).items():
        lines.append(f"  {k} = {m:.6g} +- {se:.2g}")
    for k in ("sup_grad_u2", "sup_j_lam", "sup_H"):
        lines.append(f"  max over paths {k} = {max(getattr(e, k) for e in reports):.6g}")
    if sim.noise is not None and sim.noise.multiplicative:
        lines.append(f"  growth offset f = {nz.growth_offset(sim.noise):.6g}")
    for k, v in sorted(reports[0].flags.items()):
        lines.append(f"  flag {k} = {v}")
    if not sim.potential.full_domain:
        lines.append("  note: the potential has a restricted domain; existence theory assumes D(beta) = R")
    for w in caught:
        lines.append(f"  warning: {w.message}")
    for k, ok in checks.items():
        lines.append(f"  [{'PASS' if ok else 'FAIL'}] {k}")
    report = "\n".join(lines) + "\n"
    output.write_text(d / "report.txt", report)
    _say(args, report)
    _say(args, f"wrote {d}")
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def study(args, rc: cfgmod.RunConfig, name: str) -> int:
    if name not in ex.STUDIES:
        raise StochCHError(f"unknown study {name!r}; choose from {sorted(ex.STUDIES)}")
    d = _run_dir(args, f"study:{name}", rc)
    base = cfgmod.build_simulation(rc)
    spec = ex.StudySpec(base, cfgmod.study_schedule(rc, name), rc.get("run", "paths") or DEFAULT_STUDY_PATHS)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if name == "continuous_dependence":
            table = ex.continuous_dependence(spec, target=rc.get("study", "target"))
        elif name == "picard_contraction":
            table = ex.picard_contraction(spec, n_iter=rc.get("study", "iterations"))
        else:
            table = ex.STUDIES[name](spec)
    table.to_csv(d / f"{name}.csv")
    output.write_text(d / "report.txt", table.summary())
    if rc.get("output", "figures"):
        plotting.plot_table(table, d / f"{name}.png")
    _say(args, table.summary())
    _say(args, f"wrote {d}")
    return EXIT_OK if table.passed else EXIT_FAIL


def run_verify(args, rc: cfgmod.RunConfig) -> int:
    d = _run_dir(args, "verify", rc)
    checks = verify.run_all(seed=rc.seed)
    text = "".join(c.line() + "\n" for c in checks)
    ok = all(c.passed for c in checks)
    text += f"{sum(c.passed for c in checks)}/{len(checks)} checks passed\n"
    output.write_text(d / "report.txt", text)
    _say(args, text)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stochch", description="Stochastic Cahn-Hilliard simulator and estimate checks.")
    p.add_argument("command", help="simulate | verify | study:<name> with name in " + ", ".join(sorted(ex.STUDIES)))
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--out", default="out", help="output root (default: out)")
    p.add_argument("--paths", type=int, help="override run.paths")
    p.add_argument("--quiet", action="store_true", help="suppress console output")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = _resolve(args)
        if args.command == "simulate":
            return simulate(args, rc)
        if args.command == "verify":
            return run_verify(args, rc)
        if args.command.startswith("study:"):
            return study(args, rc, args.command.split(":", 1)[1])
        print(f"error: unknown command {args.command!r}", file=sys.stderr)
        return EXIT_ERROR
    except StochCHError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
