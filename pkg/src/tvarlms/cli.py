"""Batch front-end: ``tvarlms --config run.yaml [command]``.

The config is YAML (or a manifest written by a previous run).  Every run
writes ``manifest.txt`` (the fully resolved config, reloadable with
``--config``), one or more CSV files, ``summary.txt`` and, with
``--emit-plots``, matplotlib scripts that read only those CSV files.

Exit codes: 0 success, 1 invalid config or arguments, 2 numerical failure,
64 unknown command, 74 I/O error.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .curves import curve_from_config
from .errors import NumericalError, TVARError, ValidationError
from .local_stationary import covariance_approx_error, local_covariance
from .linalg import operator_norm
from .nlms import (bias_corrected_estimate, error_decomposition, nlms_run,
                   pointwise_estimate)
from .risk import (Scenario, StepRule, compare_estimators, monte_carlo_msem,
                   msem_expansion_check, rate_fit_report)
from .rng import InnovationSpec
from .tvar import fmt, simulate

COMMANDS = ("simulate", "estimate", "decompose", "covariance", "risk", "rate",
            "expansion-check", "compare")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 64, 74

DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "emit_plots": False,
    "init": "zero",
    "innovations": {"family": "gaussian", "moment_order_q": 4.0, "df": None},
    "n": 1000,
    "mu": 0.05,
    "gamma": 0.5,
    "t_points": [1.0],
    "n_list": [1024, 2048, 4096, 8192],
    "step": {"kind": "fixed", "value": 0.05, "alpha": 1.0, "beta": 1.0},
    "replicates": 200,
    "estimator": "nlms",
    "covariance": {"t_grid": 11, "quadrature_nodes": 16384, "approx": None},
    "expansion": {"beta": 1.0, "theta_t_beta": None, "beta_prime": None},
}
APPROX_DEFAULTS = {"n_list": [256, 512, 1024, 2048], "replicates": 1000, "method": "coupled"}
TOP_KEYS = set(DEFAULTS) | {"command", "curve", "tool"}


@dataclass
class RunConfig:
    command: str
    settings: dict
    output_dir: str
    seed: int
    emit_plots: bool
    curve: object = field(default=None, repr=False)

    def scenario(self) -> Scenario:
        s = self.settings
        return Scenario(curve=self.curve, spec=_innovation_spec(s["innovations"]),
                        n_list=s["n_list"], t_points=s["t_points"],
                        mu_rule=StepRule(**s["step"]), replicates=s["replicates"],
                        master_seed=self.seed, estimator=s["estimator"], gamma=s["gamma"],
                        init=s["init"])


# -- config loading ----------------------------------------------------------------

class _Loader(yaml.SafeLoader):
    pass


# PyYAML follows YAML 1.1, where "1e-3" is a string; accept it as a float.
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                  |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                  |[-+]?\.(?:inf|Inf|INF)
                  |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))

_MANIFEST_LINE = re.compile(r"^([A-Za-z_][\w.\-]*) = (.*)$")


def _is_manifest(text: str) -> bool:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return bool(lines) and all(_MANIFEST_LINE.match(ln) for ln in lines)


def parse_manifest(text: str) -> dict:
    """``a.b = <json>`` lines back into a nested mapping."""
    out: dict = {}
    for ln in text.splitlines():
        if not ln.strip() or ln.startswith("#"):
            continue
        key, raw = _MANIFEST_LINE.match(ln).groups()
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = json.loads(raw)
    return out


def format_manifest(cfg: dict) -> str:
    lines = []

    def walk(prefix, node):
        for k, v in node.items():
            key = f"{prefix}.{k}" if prefix else k
            if isinstance(v, dict) and v:
                walk(key, v)
            else:
                lines.append(f"{key} = {json.dumps(v, sort_keys=True)}")

    walk("", cfg)
    return "\n".join(lines) + "\n"


def _parse_text(text: str):
    if _is_manifest(text):
        return parse_manifest(text)
    return yaml.load(text, Loader=_Loader)


# -- validation --------------------------------------------------------------------

def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _merge(defaults: dict, given: dict, prefix: str, errors: list) -> dict:
    out = copy.deepcopy(defaults)
    if not isinstance(given, dict):
        errors.append(f"{prefix}: expected a mapping")
        return out
    for k, v in given.items():
        if k not in defaults:
            errors.append(f"{prefix}.{k}: unknown key")
        else:
            out[k] = v
    return out


def validate_config(text: str):
    """Parse and check a config; return a :class:`RunConfig` or a list of errors.

    All problems found are reported together.  This function never raises.
    """
    errors: list[str] = []
    try:
        raw = _parse_text(text)
    except Exception as exc:  # malformed YAML or JSON value
        return [f"config: cannot parse ({exc.__class__.__name__}: {exc})"]
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        return ["config: top level must be a mapping"]
    try:
        return _validate(raw, errors)
    except Exception as exc:  # defensive: report, never raise
        errors.append(f"config: {exc.__class__.__name__}: {exc}")
        return errors


def _validate(raw: dict, errors: list):
    for k in raw:
        if k not in TOP_KEYS:
            errors.append(f"{k}: unknown key")
    s = {k: copy.deepcopy(v) for k, v in DEFAULTS.items()}
    for k in DEFAULTS:
        if k in raw:
            s[k] = raw[k]
    for sect in ("innovations", "step", "covariance", "expansion"):
        if sect in raw:
            s[sect] = _merge(DEFAULTS[sect], raw[sect], sect, errors)

    command = raw.get("command")
    if command is None:
        errors.append(f"command: missing (expected one of {', '.join(COMMANDS)})")
    elif command not in COMMANDS:
        errors.append(f"command: unknown command {command!r}")

    if not _is_int(s["seed"]) or not 0 <= s["seed"] < 2 ** 64:
        errors.append("seed: must be an integer in [0, 2^64)")
    if not isinstance(s["output_dir"], str) or not s["output_dir"]:
        errors.append("output_dir: must be a non-empty string")
    if not isinstance(s["emit_plots"], bool):
        errors.append("emit_plots: must be true or false")
    if not _is_int(s["n"]) or s["n"] < 1:
        errors.append("n: must be a positive integer")
    if not _is_num(s["mu"]) or not s["mu"] > 0:
        errors.append("mu: must be a positive number")
    if s["gamma"] is not None and (not _is_num(s["gamma"]) or not 0 < s["gamma"] < 1):
        errors.append(f"gamma: {s['gamma']!r} is outside the open interval (0,1)")
    if not _is_int(s["replicates"]) or s["replicates"] < 2:
        errors.append("replicates: must be an integer >= 2")
    if s["estimator"] not in ("nlms", "romberg"):
        errors.append("estimator: must be 'nlms' or 'romberg'")
    if s["estimator"] == "romberg" and s["gamma"] is None:
        errors.append("gamma: required by the romberg estimator")
    tp = s["t_points"]
    if not isinstance(tp, list) or not tp or not all(_is_num(t) and 0 < t <= 1 for t in tp):
        errors.append("t_points: must be a non-empty list of numbers in (0,1]")
    nl = s["n_list"]
    if not isinstance(nl, list) or not nl or not all(_is_int(n) and n >= 10 for n in nl):
        errors.append("n_list: must be a non-empty list of integers >= 10")
    elif command == "rate" and (len(nl) < 4 or max(nl) < 4 * min(nl)):
        errors.append("n_list: the rate fit needs at least 4 sizes spanning two octaves")

    st = s["step"]
    if st["kind"] not in ("fixed", "minimax"):
        errors.append("step.kind: must be 'fixed' or 'minimax'")
    for key in ("value", "alpha", "beta"):
        if not _is_num(st[key]) or not st[key] > 0:
            errors.append(f"step.{key}: must be a positive number")

    inn = s["innovations"]
    try:
        _innovation_spec(inn)
    except (TVARError, TypeError, ValueError) as exc:
        errors.append(f"innovations: {exc}")

    cov = s["covariance"]
    if not _is_int(cov["t_grid"]) or cov["t_grid"] < 2:
        errors.append("covariance.t_grid: must be an integer >= 2")
    qn = cov["quadrature_nodes"]
    if not _is_int(qn) or qn < 256 or qn & (qn - 1):
        errors.append("covariance.quadrature_nodes: must be a power of two >= 256")
    if cov["approx"] is not None:
        cov["approx"] = _merge(APPROX_DEFAULTS, cov["approx"], "covariance.approx", errors)
        ap = cov["approx"]
        if not (isinstance(ap["n_list"], list) and ap["n_list"]
                and all(_is_int(n) and n >= 1 for n in ap["n_list"])):
            errors.append("covariance.approx.n_list: must be a list of positive integers")
        if not _is_int(ap["replicates"]) or ap["replicates"] < 2:
            errors.append("covariance.approx.replicates: must be an integer >= 2")
        if ap["method"] not in ("coupled", "plain"):
            errors.append("covariance.approx.method: must be 'coupled' or 'plain'")

    ex = s["expansion"]
    if not _is_num(ex["beta"]) or not ex["beta"] > 0:
        errors.append("expansion.beta: must be a positive number")
    if ex["beta_prime"] is not None and not _is_num(ex["beta_prime"]):
        errors.append("expansion.beta_prime: must be a number")
    if command == "expansion-check" and s["estimator"] != "nlms":
        errors.append("estimator: expansion-check applies to 'nlms' only")

    curve = None
    c = raw.get("curve")
    if c is None:
        errors.append("curve: missing")
    elif not isinstance(c, dict):
        errors.append("curve: expected a mapping")
    elif "kind" not in c:
        errors.append("curve.kind: missing (expected closed_form, piecewise_linear or roots)")
    else:
        try:
            curve = curve_from_config(c)
            c = dict(c)
            c.setdefault("sigma", 1.0)
            c["declared_beta"] = curve.declared_beta
            c["declared_rho"] = curve.declared_rho
            c["name"] = curve.name
        except KeyError as exc:
            errors.append(f"curve: missing field {exc.args[0]!r}")
        except (TVARError, TypeError, ValueError) as exc:
            errors.append(f"curve: {exc}")

    init = s["init"]
    if isinstance(init, list):
        if not all(_is_num(v) for v in init):
            errors.append("init: explicit vector must hold numbers")
        elif curve is not None and len(init) != curve.d:
            errors.append(f"init: explicit vector must have length d={curve.d}")
    elif init not in ("zero", "stationary"):
        errors.append("init: must be 'zero', 'stationary' or a vector")
    if command in ("risk", "rate", "expansion-check", "compare") and isinstance(init, list):
        errors.append("init: Monte Carlo commands accept 'zero' or 'stationary' only")

    if (curve is not None and command == "expansion-check" and ex["theta_t_beta"] is None
            and not curve.has_derivative):
        errors.append("expansion.theta_t_beta: required for curves without a derivative")
    if ex["theta_t_beta"] is not None:
        tb = ex["theta_t_beta"]
        if not isinstance(tb, list) or not all(_is_num(v) for v in tb):
            errors.append("expansion.theta_t_beta: must be a list of numbers")
        elif curve is not None and len(tb) != curve.d:
            errors.append(f"expansion.theta_t_beta: must have length d={curve.d}")

    if errors:
        return errors
    s["command"] = command
    s["curve"] = c
    return RunConfig(command=command, settings=s, output_dir=s["output_dir"], seed=s["seed"],
                     emit_plots=s["emit_plots"], curve=curve)


def _innovation_spec(inn: dict) -> InnovationSpec:
    df = inn.get("df")
    return InnovationSpec(family=inn["family"], moment_order_q=float(inn["moment_order_q"]),
                          df=None if df is None else float(df))


def resolved_config(cfg: RunConfig) -> dict:
    """The manifest content: every setting plus tool metadata."""
    s = {"command": cfg.command}
    s.update(copy.deepcopy(cfg.settings))
    s["seed"] = cfg.seed
    s["output_dir"] = cfg.output_dir
    s["emit_plots"] = cfg.emit_plots
    s["tool"] = {"name": "tvarlms", "version": __version__}
    return s


# -- commands ----------------------------------------------------------------------

class Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []
        self.summary: list[tuple[str, object]] = []
        self.plots: list[dict] = []

    def csv(self, name: str, writer):
        with open(self.root / name, "w", encoding="utf-8", newline="") as fh:
            writer(fh)
        self.files.append(name)

    def rows(self, name: str, header, rows):
        import csv

        def w(fh):
            cw = csv.writer(fh, lineterminator="\n")
            cw.writerow(header)
            cw.writerows(rows)

        self.csv(name, w)

    def note(self, key: str, value):
        self.summary.append((key, value))

    def plot(self, csv_name, x, ys, logx=False, logy=False, title=""):
        self.plots.append({"csv": csv_name, "x": x, "ys": ys, "logx": logx, "logy": logy,
                           "title": title})


def _cmd_simulate(cfg, out, workers):
    s = cfg.settings
    path = simulate(cfg.curve, s["n"], _innovation_spec(s["innovations"]), cfg.seed, s["init"])
    out.csv("path.csv", path.to_csv)
    out.note("n", path.n)
    out.note("sample_mean", fmt(np.mean(path.samples)))
    out.plot("path.csv", "k", ["x"], title="TVAR sample path")
    return path


def _cmd_estimate(cfg, out, workers):
    s = cfg.settings
    path = _cmd_simulate(cfg, out, workers)
    traj = nlms_run(path, s["mu"])
    out.csv("trajectory.csv", traj.to_csv)
    d = cfg.curve.d
    rows = []
    for t in s["t_points"]:
        th = cfg.curve.theta(t)
        rows.append([fmt(t), "nlms"] + [fmt(v) for v in pointwise_estimate(traj, t, path.n)]
                    + [fmt(v) for v in th])
        if s["gamma"] is not None:
            rb = bias_corrected_estimate(path, s["mu"], s["gamma"], t)
            rows.append([fmt(t), "romberg"] + [fmt(v) for v in rb] + [fmt(v) for v in th])
    out.rows("estimates.csv", ["t", "estimator"] + [f"estimate_{i + 1}" for i in range(d)]
             + [f"theta_{i + 1}" for i in range(d)], rows)
    out.note("mu", fmt(s["mu"]))
    out.plot("trajectory.csv", "k", [f"theta_hat_{i + 1}" for i in range(d)],
             title="NLMS estimates")


def _cmd_decompose(cfg, out, workers):
    s = cfg.settings
    path = simulate(cfg.curve, s["n"], _innovation_spec(s["innovations"]), cfg.seed, s["init"])
    dec = error_decomposition(path, s["mu"], cfg.curve)
    out.csv("decomposition.csv", dec.to_csv)
    out.note("identity_residual", fmt(dec.identity_residual()))
    out.plot("decomposition.csv", "k", ["u_1", "v_1", "w_1"], title="Error decomposition")


def _cmd_covariance(cfg, out, workers):
    s = cfg.settings
    cs = s["covariance"]
    d = cfg.curve.d
    ts = np.linspace(0.0, 1.0, cs["t_grid"])
    rows, worst = [], 0.0
    for t in ts:
        yw = local_covariance(cfg.curve, float(t), "yule_walker").matrix
        qd = local_covariance(cfg.curve, float(t), "quadrature", cs["quadrature_nodes"]).matrix
        diff = operator_norm(yw - qd)
        worst = max(worst, diff)
        rows.append([fmt(t)] + [fmt(v) for v in yw.ravel()] + [fmt(diff)])
    head = ["t"] + [f"sigma_{i + 1}{j + 1}" for i in range(d) for j in range(d)]
    out.rows("local_covariance.csv", head + ["quadrature_gap"], rows)
    out.note("max_quadrature_gap", fmt(worst))
    out.plot("local_covariance.csv", "t", ["sigma_11"], title="Local variance")
    ap = cs["approx"]
    if ap is not None:
        spec = _innovation_spec(s["innovations"])
        init = s["init"] if isinstance(s["init"], str) else "zero"
        rows = []
        for n in ap["n_list"]:
            rep = covariance_approx_error(cfg.curve, spec, n, [n], ap["replicates"], cfg.seed,
                                          init=init, method=ap["method"])
            rows.append([n, n, fmt(rep.deviation[0]), fmt(rep.stderr[0]), fmt(rep.exact[0]),
                         fmt(rep.bound_shape[0])])
        out.rows("covariance_approx.csv",
                 ["n", "k", "deviation", "stderr", "exact", "bound_shape"], rows)
        out.plot("covariance_approx.csv", "n", ["deviation", "exact"], logx=True, logy=True,
                 title="Covariance approximation error at k = n")


def _cmd_risk(cfg, out, workers):
    rep = monte_carlo_msem(cfg.scenario(), workers)
    out.csv("risk.csv", rep.to_csv)
    out.plot("risk.csv", "n", ["l2_risk"], logx=True, logy=True, title="L2 risk")
    return rep


def _cmd_rate(cfg, out, workers):
    rep = _cmd_risk(cfg, out, workers)
    rows = []
    for t in cfg.settings["t_points"]:
        fit = rate_fit_report(rep, t)
        rows.append([fmt(t), cfg.settings["estimator"], fmt(fit.slope), fmt(fit.intercept),
                     fmt(fit.r_squared), len(fit.points)])
        out.note(f"slope.t={fmt(t)}", fmt(fit.slope))
    out.rows("rate.csv", ["t", "estimator", "slope", "intercept", "r_squared", "points"], rows)


def _cmd_expansion(cfg, out, workers):
    ex = cfg.settings["expansion"]
    res = msem_expansion_check(cfg.scenario(), ex["theta_t_beta"], ex["beta"],
                               ex["beta_prime"], workers)
    d = cfg.curve.d
    scale_keys = list(res[0].remainder_scales) if res else []
    head = ["n", "t", "mu", "mu_n"] + [f"bias_{i + 1}" for i in range(d)] + \
        [f"predicted_bias_{i + 1}" for i in range(d)] + \
        [f"bias_stderr_{i + 1}" for i in range(d)] + ["bias_residual", "cov_residual"] + \
        [f"scale_{k}" for k in scale_keys]
    rows = []
    for e in res:
        rows.append([e.n, fmt(e.t), fmt(e.mu), fmt(e.mu * e.n)]
                    + [fmt(v) for v in e.empirical_bias] + [fmt(v) for v in e.predicted_bias]
                    + [fmt(v) for v in e.bias_stderr]
                    + [fmt(e.bias_residual), fmt(e.cov_residual)]
                    + [fmt(e.remainder_scales[k]) for k in scale_keys])
    out.rows("expansion.csv", head, rows)
    out.plot("expansion.csv", "mu_n", ["bias_1", "predicted_bias_1"], logx=True,
             title="Empirical and predicted bias")


def _cmd_compare(cfg, out, workers):
    rep = compare_estimators(cfg.scenario(), workers)
    out.csv("comparison.csv", rep.to_csv)
    for c in rep.cells:
        out.note(f"ratio.n={c.n}.t={fmt(c.t)}", fmt(c.ratio))
    out.plot("comparison.csv", "n", ["nlms_l2", "romberg_l2"], logx=True, logy=True,
             title="NLMS and bias-corrected risk")


HANDLERS = {"simulate": _cmd_simulate, "estimate": _cmd_estimate,
            "decompose": _cmd_decompose, "covariance": _cmd_covariance, "risk": _cmd_risk,
            "rate": _cmd_rate, "expansion-check": _cmd_expansion, "compare": _cmd_compare}

PLOT_TEMPLATE = '''"""Plot {csv} (generated; reads only the CSV next to this script)."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with open(here / {csv!r}, newline="") as fh:
    rows = list(csv.DictReader(fh))
x = [float(r[{x!r}]) for r in rows]
fig, ax = plt.subplots()
for col in {ys!r}:
    ax.plot(x, [abs(float(r[col])) if {logy!r} else float(r[col]) for r in rows],
            marker="o" if len(rows) < 50 else None, label=col)
if {logx!r}:
    ax.set_xscale("log")
if {logy!r}:
    ax.set_yscale("log")
ax.set_xlabel({x!r})
ax.set_title({title!r})
ax.legend()
fig.savefig(here / {png!r}, dpi=120)
'''


def run(cfg: RunConfig, workers: int = 1) -> int:
    """Execute a validated config; returns the exit status."""
    root = Path(cfg.output_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
        probe = root / ".write-test"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {root} is not writable: {exc}", file=sys.stderr)
        return EXIT_IO
    out = Outputs(root)
    try:
        HANDLERS[cfg.command](cfg, out, workers)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        (root / "manifest.txt").write_text(format_manifest(resolved_config(cfg)),
                                           encoding="utf-8")
        summary = [("command", cfg.command), ("files", ",".join(out.files))] + out.summary
        (root / "summary.txt").write_text("".join(f"{k} = {v}\n" for k, v in summary),
                                          encoding="utf-8")
        if cfg.emit_plots:
            for p in out.plots:
                stem = p["csv"][:-4]
                src = PLOT_TEMPLATE.format(png=f"{stem}.png", **p)
                (root / f"plot_{stem}.py").write_text(src, encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvarlms", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", help=f"one of {', '.join(COMMANDS)} "
                   "(overrides the config's command)")
    p.add_argument("--config", required=True, help="YAML config or manifest.txt")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="worker processes for Monte Carlo commands")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--emit-plots", action="store_true", help="write matplotlib scripts")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    if args.command is not None and args.command not in COMMANDS:
        print(f"usage error: unknown command {args.command!r}; "
              f"expected one of {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        raw = _parse_text(text)
    except Exception:
        raw = None
    if isinstance(raw, dict):
        if raw.get("command") not in (None, *COMMANDS) and args.command is None:
            print(f"usage error: unknown command {raw['command']!r}", file=sys.stderr)
            return EXIT_USAGE
        if args.command is not None:
            raw["command"] = args.command
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["output_dir"] = args.out
        if args.emit_plots:
            raw["emit_plots"] = True
        text = format_manifest(raw)
    result = validate_config(text)
    if isinstance(result, list):
        for e in result:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(result, args.workers)


if __name__ == "__main__":
    sys.exit(main())
