"""Command-line front end: ``genlik <subcommand> [--key value ...]``.

Parameters come from flags and optionally from ``--config FILE`` holding flat
``key = value`` lines (``#`` comments, vectors as comma lists, grids as CSV
paths). Flags override file entries. Exit status is 0 on success, 1 on a
solver failure (a JSON diagnostic goes to stderr) and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic, constrained, em, experiments, sparse
from .errors import GenlikError
from .likelihood import FiniteJoint, log_generalized_likelihood

FORMATS = ("csv", "jsonl")


class UsageError(Exception):
    """Bad command line or config; maps to exit status 2."""


# --------------------------------------------------------------------------
# parameter types

def _float(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        raise UsageError(f"expected a number, got {s!r}") from None


def _int(s):
    try:
        return int(s)
    except (TypeError, ValueError):
        raise UsageError(f"expected an integer, got {s!r}") from None


def _floats(s):
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    parts = [p for p in str(s).replace(" ", "").split(",") if p]
    if not parts:
        raise UsageError("expected a comma-separated list of numbers")
    return [_float(p) for p in parts]


def _ints(s):
    return [_int(p) for p in str(s).replace(" ", "").split(",") if p]


def _str(s):
    return str(s)


def read_grid(path) -> np.ndarray:
    """A grid from CSV: long format with header ``x,y,<value>`` or a plain numeric matrix."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"grid file not found: {path}")
    text = p.read_text()
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if first.replace(" ", "").startswith("x,y,"):
        rows = list(csv.reader(io.StringIO(text)))[1:]
        rows = [r for r in rows if r]
        xs = [int(r[0]) for r in rows]
        ys = [int(r[1]) for r in rows]
        grid = np.full((max(xs) + 1, max(ys) + 1), np.nan)
        for x, y, r in zip(xs, ys, rows):
            grid[x, y] = float(r[2])
        if np.isnan(grid).any():
            raise UsageError(f"grid file {path} does not cover every cell")
        return grid
    try:
        return np.atleast_2d(np.loadtxt(io.StringIO(text), delimiter=",", comments="#"))
    except ValueError as exc:
        raise UsageError(f"cannot parse grid file {path}: {exc}") from None


def resolve_score(spec, n, m) -> np.ndarray:
    """Builtin score name (``abs-diff``, ``product``) or CSV path."""
    if spec in ("abs-diff", "product"):
        return experiments.score_grid(spec, n, m)
    E = read_grid(spec)
    if E.shape != (n, m):
        raise UsageError(f"score grid {spec} has shape {E.shape}, expected {(n, m)}")
    return E


# --------------------------------------------------------------------------
# configuration

COMMON = {
    "seed": (_int, 0, "RNG seed"),
    "beta": (_float, 0.95, "inverse temperature"),
    "format": (_str, "csv", "output format: csv or jsonl"),
    "output": (_str, None, "output path (default stdout)"),
    "threads": (_int, None, "worker threads (default GENLIK_THREADS or all cores)"),
}

COMMANDS = {
    "eval": ("L_beta of a stored grid", {
        "grid": (_str, None, "joint grid CSV"),
        "pY": (_floats, None, "observed marginal (default: the grid's own)"),
    }),
    "em": ("generalized EM trace", {
        "family": (_str, "discrete", "discrete or mixture"),
        "z": (_float, 0.5, "discrete family: true z"),
        "components": (_str, None, "mixture family: component grid CSV (columns sum to 1)"),
        "pY": (_floats, None, "observed marginal (mixture family)"),
        "theta0": (_floats, None, "starting parameters"),
        "max_iters": (_int, 500, "iteration cap"),
    }),
    "solve-avg": ("known-average solve (beta > 1 uses the sparse solver)", {
        "pY": (_floats, None, "observed marginal"),
        "score": (_str, "product", "abs-diff, product or CSV path"),
        "n": (_int, None, "hidden states (default len(pY))"),
        "target": (_float, None, "constraint average"),
    }),
    "solve-two": ("known average and known p(y)", {
        "pY": (_floats, None, "observed marginal"),
        "score": (_str, "product", "abs-diff, product or CSV path"),
        "n": (_int, None, "hidden states (default len(pY))"),
        "target": (_float, None, "constraint average"),
    }),
    "gibbs-limit": ("beta -> 1 Gibbs solution", {
        "pY": (_floats, None, "observed marginal"),
        "score": (_str, "product", "abs-diff, product or CSV path"),
        "n": (_int, None, "hidden states (default len(pY))"),
        "target": (_float, None, "constraint average"),
    }),
    "discrete": ("binary model solution", {
        "z": (_float, 0.5, "true z in (0, 1)"),
    }),
    "continuous": ("Gaussian model solution", {
        "chi": (_float, 2.0, "true ratio chi"),
        "cap": (_float, None, "upper bound H on h_hat"),
    }),
    "maximin-demo": ("worst-case overlap profiles", {
        "u_max": (_float, 20.0, "grid upper end"),
        "n_grid": (_int, 4001, "grid points"),
    }),
    "majorize": ("greedy sparse maximizer for beta > 1", {
        "pY": (_floats, None, "observed marginal"),
        "pX": (_floats, None, "known hidden marginal"),
        "score": (_str, None, "optional score for an average constraint"),
        "target": (_float, None, "constraint average (with --score)"),
        "n": (_int, None, "hidden states (default len(pX) or len(pY))"),
    }),
    "d1d2": ("single-guess comparison", {
        "n": (_int, 4, "hidden states"),
        "m": (_int, 4, "observed states"),
        "score": (_str, "abs-diff", "abs-diff, product or CSV path"),
        "S": (_int, 1000, "random truths"),
        "summary": (_str, None, "write the JSON summary here (default stderr)"),
    }),
    "d3": ("averaged-guess comparison", {
        "n": (_int, 3, "hidden states"),
        "m": (_int, 3, "observed states"),
        "score": (_str, "abs-diff", "abs-diff, product or CSV path"),
        "S": (_int, 300, "random truths"),
        "M": (_int, 10_000, "guesses averaged per truth"),
        "summary": (_str, None, "write the JSON summary here (default stderr)"),
    }),
    "fig1": ("Hellinger sweep over targets", {
        "betas": (_floats, list(experiments.FIG1_BETAS), "beta values"),
        "targets": (_floats, None, "target list (default 25 interior points)"),
        "points": (_int, 25, "number of default targets"),
    }),
    "maxent-study": ("maximum-entropy constraint study", {
        "n": (_int, 6, "support size"),
        "z": (_floats, None, "support values (default 1..n)"),
        "M_list": (_ints, [7, 11, 21, 31, 41, 61, 101], "sample lengths"),
        "samples": (_int, 1000, "samples per length and draw"),
        "draws": (_int, 100, "random true distributions"),
    }),
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)

    @property
    def seed(self):
        return self.params["seed"]

    @property
    def format(self):
        return self.params["format"]

    @property
    def output(self):
        return self.params["output"]


def _flag(key):
    return "--" + key.replace("_", "-")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="genlik", description="Generalized likelihood toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (helptext, table) in COMMANDS.items():
        sp = sub.add_parser(name, help=helptext, description=helptext)
        sp.add_argument("--config", default=argparse.SUPPRESS, help="key = value config file")
        for key, (_, default, h) in {**COMMON, **table}.items():
            flags = [_flag(key)]
            if "_" in key:
                flags.append("--" + key)
            sp.add_argument(*flags, dest=key, default=argparse.SUPPRESS,
                            help=f"{h} (default: {default})")
    return parser


def read_config_file(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_config(argv) -> RunConfig:
    """Merge defaults, then config-file entries, then flags; validate preconditions."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    table = {**COMMON, **COMMANDS[command][1]}
    file_values = read_config_file(ns.pop("config")) if "config" in ns else {}
    unknown = sorted(set(file_values) - set(table))
    if unknown:
        raise UsageError(f"unknown key {unknown[0]!r} for {command}")
    params = {k: d for k, (_, d, _) in table.items()}
    for source in (file_values, ns):
        for key, value in source.items():
            try:
                params[key] = table[key][0](value)
            except UsageError as exc:
                raise UsageError(f"--{key}: {exc}") from None
    if params["threads"] is None:
        params["threads"] = experiments.default_threads()
    _validate(command, params)
    return RunConfig(command, params)


def _need(params, *keys):
    for k in keys:
        if params.get(k) is None:
            raise UsageError(f"missing required parameter {_flag(k)}")


def _validate(command, p):
    if not p["beta"] > 0 or not math.isfinite(p["beta"]):
        raise UsageError(f"--beta must be a positive number, got {p['beta']!r}")
    if p["format"] not in FORMATS:
        raise UsageError(f"--format must be csv or jsonl, got {p['format']!r}")
    if p["threads"] < 1:
        raise UsageError("--threads must be at least 1")
    for key in ("pY", "pX"):
        v = p.get(key)
        if v is not None and (min(v) < 0 or abs(sum(v) - 1) > 1e-9):
            raise UsageError(f"{_flag(key)} must be nonnegative and sum to 1")
    for key in ("n", "m", "S", "M", "samples", "draws", "points", "max_iters", "n_grid"):
        if key in p and p[key] is not None and p[key] < 1:
            raise UsageError(f"{_flag(key)} must be at least 1")
    if command == "eval":
        _need(p, "grid")
    if command in ("solve-avg", "solve-two", "gibbs-limit"):
        _need(p, "pY", "target")
    if command == "majorize":
        _need(p, "pY")
        if (p["score"] is None) != (p["target"] is None):
            raise UsageError("--score and --target go together")
    if command == "em" and p["family"] not in ("discrete", "mixture"):
        raise UsageError("--family must be discrete or mixture")
    if command == "discrete" and not 0 < p["z"] < 1:
        raise UsageError("--z must lie in (0, 1)")
    if command == "continuous" and not p["chi"] > 0:
        raise UsageError("--chi must be positive")
    if command == "maxent-study" and p["z"] is not None and len(p["z"]) != p["n"]:
        raise UsageError("--z must list n values")


# --------------------------------------------------------------------------
# serialization

def fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def json_value(v) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(json_value(x) for x in v) + "]"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g") if math.isfinite(v) else "null"
    if v is None:
        return "null"
    return json.dumps(str(v))


def render(records, fmt) -> str:
    records = list(records)
    if fmt == "jsonl":
        return "".join(json_value(r) + "\n" for r in records)
    cols = []
    for r in records:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([json_value(r[c]) if isinstance(r.get(c), (list, tuple, dict)) else fmt_value(r.get(c))
                    for c in cols])
    return buf.getvalue()


def joint_records(p, value_name="p_hat"):
    for x in range(p.shape[0]):
        for y in range(p.shape[1]):
            yield {"x": x, "y": y, value_name: float(p[x, y])}


# --------------------------------------------------------------------------
# subcommands; each returns (records, extra) where extra is an optional side report

def _score_setup(p):
    w = np.asarray(p["pY"], dtype=float)
    n = p.get("n") or w.size
    return w, resolve_score(p["score"], n, w.size)


def cmd_eval(p):
    joint = FiniteJoint(read_grid(p["grid"]))
    pY = joint.marginal_y() if p["pY"] is None else np.asarray(p["pY"])
    val = log_generalized_likelihood(joint, pY, p["beta"])
    return [{"beta": p["beta"], "L_beta": val}], None


def cmd_em(p):
    beta = p["beta"]
    if p["family"] == "discrete":
        fam = em.discrete_family()
        pY = analytic.discrete_marginal(p["z"])
        theta0 = p["theta0"] or [0.3, 0.2]
    else:
        _need(p, "components", "pY")
        fam = em.mixture_weight_family(read_grid(p["components"]))
        pY = p["pY"]
        theta0 = p["theta0"] or [0.5]
    trace = em.em_run(fam, theta0, pY, beta, em.StopRule(max_iters=p["max_iters"]))
    recs = []
    for k, (th, v, g) in enumerate(zip(trace.thetas, trace.values, trace.grad_norms)):
        recs.append({"iter": k, **{f"theta_{i}": float(t) for i, t in enumerate(th)},
                     "L_beta": v, "grad_norm": g})
    return recs, {"stop_reason": trace.stop_reason, "iterations": trace.iterations}


def cmd_solve_avg(p):
    w, E = _score_setup(p)
    con = constrained.LinearConstraint(E, p["target"])
    if p["beta"] > 1:
        sol = sparse.greedy_majorize(sparse.FeasibleSet(w, constraints=(con,), n=E.shape[0]))
        return list(joint_records(sol.p)), {"beta": p["beta"], "L_inf": sol.L_inf_value,
                                            "solver": "greedy_majorize"}
    if p["beta"] == 1:
        raise UsageError("beta = 1 leaves the joint undetermined; use gibbs-limit")
    sol = constrained.solve_known_average(w, con, p["beta"])
    return list(joint_records(sol.p)), sol.sidecar()


def cmd_solve_two(p):
    w, E = _score_setup(p)
    if not 0 < p["beta"] < 1:
        raise UsageError("solve-two needs 0 < beta < 1")
    sol = constrained.solve_two_constraints(w, constrained.LinearConstraint(E, p["target"]), p["beta"])
    return list(joint_records(sol.p)), sol.sidecar()


def cmd_gibbs_limit(p):
    w, E = _score_setup(p)
    joint, Gamma = constrained.gibbs_limit_solution(w, constrained.LinearConstraint(E, p["target"]))
    return list(joint_records(joint.p)), {"Gamma": Gamma}


def cmd_discrete(p):
    return [analytic.discrete_solve(p["z"], p["beta"]).as_record()], None


def cmd_continuous(p):
    return [analytic.continuous_solve(p["chi"], p["beta"], p["cap"]).as_record()], None


def cmd_maximin(p):
    rep = analytic.maximin_demo(u_max=p["u_max"], n_grid=p["n_grid"])
    return list(rep.records()), None


def cmd_majorize(p):
    cons = ()
    n = p["n"] or (len(p["pX"]) if p["pX"] is not None else len(p["pY"]))
    if p["score"] is not None:
        cons = (constrained.LinearConstraint(resolve_score(p["score"], n, len(p["pY"])), p["target"]),)
    fs = sparse.FeasibleSet(p["pY"], p["pX"], cons, n=n)
    sol = sparse.greedy_majorize(fs)
    return list(joint_records(sol.p)), {"L_inf": sol.L_inf_value, "zero_count": sol.zero_count,
                                        "order": list(sol.order_records())}


def _experiment_score(p):
    s = p["score"]
    return s if s in ("abs-diff", "product") else resolve_score(s, p["n"], p["m"])


def cmd_d1d2(p):
    rep = experiments.run_d1_d2(p["n"], p["m"], _experiment_score(p), p["beta"], p["S"], p["seed"],
                                p["threads"])
    return _report_records(rep), {**rep.summary(), "skipped_records": rep.skipped}


def cmd_d3(p):
    rep = experiments.run_d3(p["n"], p["m"], _experiment_score(p), p["beta"], p["S"], p["M"], p["seed"],
                             p["threads"])
    return _report_records(rep), {**rep.summary(), "skipped_records": rep.skipped}


def _report_records(rep):
    return [{"k": r["k"], **{c: r[c] for c in rep.columns}} for r in rep.records]


def cmd_fig1(p):
    grid = p["targets"] if p["targets"] is not None else experiments.fig1_default_grid(p["points"])
    return experiments.run_fig1_sweep(p["betas"], grid, threads=p["threads"]), None


def cmd_maxent(p):
    rows = experiments.run_maxent_study(p["n"], p["z"], tuple(p["M_list"]), p["samples"], p["draws"],
                                        p["seed"], p["threads"])
    return [r.record() for r in rows], {"skipped": {r.M: r.skipped for r in rows}}


DISPATCH = {
    "eval": cmd_eval, "em": cmd_em, "solve-avg": cmd_solve_avg, "solve-two": cmd_solve_two,
    "gibbs-limit": cmd_gibbs_limit, "discrete": cmd_discrete, "continuous": cmd_continuous,
    "maximin-demo": cmd_maximin, "majorize": cmd_majorize, "d1d2": cmd_d1d2, "d3": cmd_d3,
    "fig1": cmd_fig1, "maxent-study": cmd_maxent,
}


def _diagnostic(exc) -> dict:
    rec = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("diagnostics", "residuals"):
        if getattr(exc, attr, None) is not None:
            rec[attr] = getattr(exc, attr)
    return rec


def dispatch(config: RunConfig, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    p = config.params
    try:
        records, extra = DISPATCH[config.command](p)
    except UsageError as exc:
        stderr.write(f"genlik: usage error: {exc}\n")
        return 2
    except GenlikError as exc:
        if isinstance(exc, ValueError):
            stderr.write(f"genlik: usage error: {exc}\n")
            return 2
        stderr.write(json_value(_diagnostic(exc)) + "\n")
        return 1
    text = render(records, p["format"])
    if p["output"]:
        Path(p["output"]).write_text(text)
    else:
        stdout.write(text)
    if extra is not None:
        side = json_value(extra) + "\n"
        if p.get("summary"):
            Path(p["summary"]).write_text(side)
        else:
            stderr.write(side)
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(f"genlik: usage error: {exc}\n")
        return 2
    return dispatch(config)


if __name__ == "__main__":
    sys.exit(main())
