"""Command-line front end.

``cogmove <simulate|stability|sweep|measure|oracle> --config FILE --out DIR
[--override section.key=value ...]``

Exit codes: 0 success, 2 invalid configuration or expression, 3 numerical
failure (summary still written), 4 filesystem error.
"""

import argparse
import copy
import csv
import json
import os
import platform
import sys
from importlib import metadata

import numpy as np
import scipy

from . import config as cfgmod
from .errors import CogmoveError, DivergenceError, StepRejectedError
from .expr import Expression
from .measures import mass_balance, measure_report, sweep
from .oracle import verify_fokker_planck
from .stability import dispersion
from .stepper import detect_attractor, run

SCHEMA_VERSION = "1"
CSV_SCHEMAS = {
    "simulate": {"trajectory.csv": ["t", "field", "x", "value"],
                 "diagnostics.csv": ["t", "field", "mass", "min"]},
    "stability": {"dispersion.csv": ["j", "k", "re_lambda", "im_lambda", "unstable"]},
    "measure": {"measure.csv": ["kind", "value", "t_prime", "t_max"]},
    "sweep": {"sweep.csv": ["<parameters...>", "value", "status", "error"]},
    "oracle": {"oracle.csv": ["x", "c_hat", "d_hat", "two_d_hat_slope", "rel_dev"]},
}
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_FILESYSTEM = 0, 2, 3, 4


def fmt(value):
    """Shortest round-trip text for floats; plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return str(obj)


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def versions():
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"artifact": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _summary(command, plan):
    step = plan.step
    return {
        "schema_version": SCHEMA_VERSION,
        "csv_schemas": CSV_SCHEMAS[command],
        "command": command,
        "config_hash": plan.hash,
        "config": plan.echo,
        "n_defaults_documented": sum(len(v) for v in cfgmod.DEFAULTS.values()),
        "versions": versions(),
        "tolerances": {"mass_drift": step.mass_drift_tol, "linear_solve": step.linear_tol,
                       "attractor": 1e-6},
        "warnings": list(plan.warnings),
        "flags": list(plan.model.flags),
        "status": "ok",
    }


def _simulate(plan):
    u0 = plan.initial_fields() or None
    return run(plan.model, plan.grid, u0, plan.step, noise=plan.noise, seed=plan.seed)


def _trajectory_outputs(traj, out, summary, snapshots=True):
    x = traj.grid.centers
    states = list(zip(traj.times, traj.states))
    if not snapshots:
        states = states[-1:]

    def rows():
        for t, s in states:
            for i, name in enumerate(traj.fields):
                for xi, v in zip(x, s[i]):
                    yield t, name, xi, v
    write_csv(os.path.join(out, "trajectory.csv"), CSV_SCHEMAS["simulate"]["trajectory.csv"], rows())
    diag = []
    for k, (t, s) in enumerate(zip(traj.times, traj.states)):
        for i, name in enumerate(traj.fields):
            diag.append((t, name, float(np.sum(s[i]) * traj.grid.dx), float(np.min(s[i]))))
    write_csv(os.path.join(out, "diagnostics.csv"), CSV_SCHEMAS["simulate"]["diagnostics.csv"], diag)
    summary["diagnostics"] = traj.diagnostics()
    summary["attractor"] = detect_attractor(traj).as_dict() if len(traj.times) > 2 else None
    if traj.status == "ok":
        balance = {}
        for name in traj.densities:
            balance[name] = mass_balance(traj, traj.times[0], traj.times[-1], name)
        summary["mass_balance"] = balance


def cmd_simulate(plan, out, summary):
    traj = _simulate(plan)
    _trajectory_outputs(traj, out, summary, plan.config["output"]["snapshots"])


def cmd_stability(plan, out, summary):
    res = dispersion(plan.model, plan.grid, int(plan.config["stability"]["j_max"]))
    write_csv(os.path.join(out, "dispersion.csv"), CSV_SCHEMAS["stability"]["dispersion.csv"],
              res.rows())
    summary["unstable_modes"] = [j for j in res.unstable if j > 0]
    summary["analysis_flags"] = list(res.flags)


def _resource(plan):
    spec = plan.config["measure"]["resource"]
    if spec == "model":
        if "m" in plan.landscapes:
            return plan.landscapes["m"]
        m = plan.model.params.get("m")
        if m is None:
            raise CogmoveError("measure.resource: the model has no resource map m; "
                               "give an expression instead")
        return m
    return Expression(spec)


def _measure(plan, traj):
    ms = plan.config["measure"]
    auto = cfgmod._auto
    m = _resource(plan) if ms["kind"] != "net_growth" else None
    return measure_report(ms["kind"], traj, m, auto(ms["t_prime"]), auto(ms["t_max"]),
                          auto(ms["period"]), auto(ms["species"]))


def cmd_measure(plan, out, summary):
    traj = _simulate(plan)
    summary["diagnostics"] = traj.diagnostics()
    report = _measure(plan, traj)
    window = list(report.window) + [None, None]
    write_csv(os.path.join(out, "measure.csv"), CSV_SCHEMAS["measure"]["measure.csv"],
              [(report.kind, report.value, window[0], window[1])])
    summary["measure"] = report.as_dict()


def cmd_sweep(plan, out, summary):
    grid_spec = plan.config["sweep"]["parameters"]
    if not grid_spec:
        raise cfgmod.ConfigurationError("no parameters to sweep", key="sweep.parameters")
    base = plan.config

    def evaluate(params):
        merged = copy.deepcopy(base)
        for path, value in params.items():
            cfgmod.set_path(merged, path, value)
        cell = cfgmod.build_plan(merged)
        traj = _simulate(cell)
        return {"value": _measure(cell, traj).value}

    table = sweep(grid_spec, evaluate)
    header = list(table.names) + ["value", "status", "error"]
    rows = [[r["params"][n] for n in table.names] + [r["value"], r["status"], r.get("error")]
            for r in table.rows]
    write_csv(os.path.join(out, "sweep.csv"), header, rows)
    summary["n_cells"] = len(rows)
    summary["n_failed"] = sum(r["status"] != "ok" for r in table.rows)


def cmd_oracle(plan, out, summary):
    o = plan.config["oracle"]
    covariates = [(float(c["beta"]), Expression(c["a"])) for c in o["covariates"]]
    spacing = cfgmod._auto(o["spacing"])
    report = verify_fokker_planck(covariates, o["sigma"], o["tau_step"], o["length"], spacing,
                                  o["t_final"])
    rows = [(r["x"], r["c_hat"], r["d_hat"], 2.0 * r["d_hat"] * r["predicted"], r["rel_dev"])
            for r in report["rows"]]
    write_csv(os.path.join(out, "oracle.csv"), CSV_SCHEMAS["oracle"]["oracle.csv"], rows)
    summary["oracle"] = {k: v for k, v in report.items() if k != "rows"}


COMMANDS = {"simulate": cmd_simulate, "stability": cmd_stability, "sweep": cmd_sweep,
            "measure": cmd_measure, "oracle": cmd_oracle}


def build_parser():
    parser = argparse.ArgumentParser(prog="cogmove", description="Run cognitive-movement models.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key, e.g. grid.n=256")
    return parser


def execute(command, config_text, out, overrides=()):
    """Run one subcommand; returns the exit code."""
    try:
        plan = cfgmod.parse_config(config_text, overrides)
    except (CogmoveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    summary = _summary(command, plan)
    code = EXIT_OK
    try:
        os.makedirs(out, exist_ok=True)
        try:
            COMMANDS[command](plan, out, summary)
        except (DivergenceError, StepRejectedError) as exc:
            summary["status"] = "diverged" if isinstance(exc, DivergenceError) else "step_rejected"
            summary["error"] = str(exc)
            traj = getattr(exc, "trajectory", None)
            if traj is not None:
                summary["diagnostics"] = traj.diagnostics()
            print(f"error: {exc}", file=sys.stderr)
            code = EXIT_NUMERICAL
        except (CogmoveError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        write_json(os.path.join(out, "summary.json"), summary)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILESYSTEM
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILESYSTEM
    return execute(args.command, text, args.out, args.override)


if __name__ == "__main__":
    sys.exit(main())
