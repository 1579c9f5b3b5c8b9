"""Command-line front end.

Subcommands: ``solve`` one instance, ``tune`` the noise-oracle tuning,
``verify`` one bound certificate, ``campaign`` a Monte Carlo certification
run, ``catalog`` the estimator registry. Every command writes a
``manifest.json`` (tool version, canonical config hash, seed, timestamps,
output list) next to its outputs.

Exit codes: 0 success, 2 invalid config/data, 3 non-convergence,
4 assumption violation (zero response, vanished dual terms, degenerate
square-root residual), 5 certification failure.

The ``PBLAB_LOG`` environment variable (error, info, debug) controls log
verbosity. All floating-point output uses shortest round-trip decimals.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import check_bound
from .catalog import CATALOG, build_estimator, catalog_labels
from .errors import (
    AssumptionViolationError,
    CertificationError,
    DegenerateInputError,
    InvalidInputError,
    InvalidPremiseError,
    NonConvergenceError,
)
from .experiments import ExperimentConfig, _trial_problem, run_monte_carlo, summarize
from .model import Problem
from .solvers import SolverConfig, solve
from .tuning import oracle_lambda

log = logging.getLogger("pblab")

CSV_HEADER = (
    "trial,estimator,n,p,rho,noise,sigma,lambda,lhs,rhs_special1,rhs_special2,"
    "rhs_theorem_u05,holds_special2,kkt_residual,fp_residual,solve_ms"
)

VERIFY_HEADER = "estimator,mode,n,p,u,c,lhs,rhs,slack,holds,certified"


def _configure_logging():
    level = os.environ.get("PBLAB_LOG", "error").lower()
    mapping = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=mapping.get(level, logging.ERROR), format="%(levelname)s %(message)s")


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InvalidInputError(f"{what} file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{what} file {path} is not valid JSON: {exc}")


def load_problem(path) -> Problem:
    """Problem JSON schema: X (nested rows), Y, optional beta_star and eps."""
    doc = _load_json(path, "data")
    for fieldname in ("X", "Y"):
        if fieldname not in doc:
            raise InvalidInputError(f"data file missing field '{fieldname}'")
    try:
        x = np.asarray(doc["X"], dtype=float)
    except (TypeError, ValueError):
        raise InvalidInputError("field 'X' must be a rectangular numeric array")
    try:
        y = np.asarray(doc["Y"], dtype=float)
    except (TypeError, ValueError):
        raise InvalidInputError("field 'Y' must be a numeric vector")
    kwargs = {}
    if "beta_star" in doc or "eps" in doc:
        if not ("beta_star" in doc and "eps" in doc):
            raise InvalidInputError("fields 'beta_star' and 'eps' must appear together")
        kwargs["beta_star"] = np.asarray(doc["beta_star"], dtype=float)
        kwargs["eps"] = np.asarray(doc["eps"], dtype=float)
    return Problem(x, y, seed=doc.get("seed"), **kwargs)


class _Manifest:
    def __init__(self, out_dir: Path, config: dict, seed):
        self.out_dir = out_dir
        self.doc = {
            "tool_version": __version__,
            "config_hash": config_hash(config),
            "seed": seed,
            "started": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "outputs": [],
        }

    def add(self, path: Path):
        self.doc["outputs"].append(path.name)

    def write(self):
        self.doc["finished"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        path = self.out_dir / "manifest.json"
        with open(path, "w") as fh:
            json.dump(self.doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _parse_lambdas(text: str, k: int) -> np.ndarray:
    try:
        values = [float(tok) for tok in text.split(";")]
    except ValueError:
        raise InvalidInputError("field 'lambda' must be a number or semicolon-joined numbers")
    if len(values) == 1:
        values = values * k
    if len(values) != k:
        raise InvalidInputError(f"field 'lambda' needs 1 or {k} values")
    if any(v <= 0 for v in values):
        raise InvalidInputError("field 'lambda' must be positive")
    return np.asarray(values)


def _estimator_setup(args, problem):
    """Resolve estimator label/params from flags plus optional config file."""
    config = _load_json(args.config, "config") if args.config else {}
    label = args.estimator or config.get("estimator")
    if not label:
        raise InvalidInputError("field 'estimator' is required (flag or config)")
    params = dict(config.get("params", {}))
    spec, problem = build_estimator(label, problem, params)
    solver = dict(config.get("solver", {}))
    if args.seed is not None:
        solver["seed"] = args.seed
    cfg = SolverConfig(**{"tol": 1e-8, "max_iter": 100_000, "restarts": 2, **solver})
    return label, spec, problem, cfg, config


def cmd_solve(args) -> int:
    problem = load_problem(args.data)
    label, spec, problem, cfg, config = _estimator_setup(args, problem)
    lam_text = args.lam or config.get("lambda")
    if lam_text is None:
        raise InvalidInputError("field 'lambda' is required for solve")
    spec = spec.with_lambdas(_parse_lambdas(str(lam_text), spec.penalty.k))
    out = _out_dir(args)
    manifest = _Manifest(out, {"command": "solve", "estimator": label, "lambda": str(lam_text), **config}, args.seed)
    solution = solve(spec, problem, cfg)
    doc = {
        "estimator": label,
        "lambda": [float(v) for v in spec.penalty.lambdas],
        "beta": [float(v) for v in solution.beta],
        "fitted": [float(v) for v in solution.fitted],
        "objective": solution.objective,
        "kkt_residual": solution.kkt_residual,
        "iterations": solution.iterations,
        "converged": solution.converged,
    }
    path = out / "solution.json"
    _write_json(path, doc)
    manifest.add(path)
    manifest.write()
    log.info("solution written to %s", path)
    return 0 if solution.converged else 3


def _tuning_inputs(args):
    """Problem with ground truth, from a data file or a generator config."""
    if args.data:
        problem = load_problem(args.data)
        if not problem.has_truth:
            raise InvalidInputError("tuning needs 'beta_star' and 'eps' in the data file")
        return problem
    if not args.config:
        raise InvalidInputError("tune/verify need --data with ground truth or a generator --config")
    config = _load_json(args.config, "config")
    exp = _experiment_config(config, args)
    problem, _, _ = _trial_problem(exp, 0)
    return problem


def _experiment_config(config: dict, args) -> ExperimentConfig:
    config = dict(config)
    config.pop("mode", None)
    config.pop("u", None)
    if args.estimator:
        config["estimator"] = args.estimator
    if args.seed is not None:
        config["seed"] = args.seed
    try:
        return ExperimentConfig(**config)
    except TypeError as exc:
        raise InvalidInputError(f"config error: {exc}")


def cmd_tune(args) -> int:
    problem = _tuning_inputs(args)
    label, spec, problem, cfg, config = _estimator_setup(args, problem)
    fp = {"fp_tol": 1e-8, "max_fp_iter": 200, "damping": 0.5}
    fp.update(config.get("fixed_point", {}))
    c = config.get("c", 1.0)
    tuning = oracle_lambda(spec, problem, c, cfg, **fp)
    out = _out_dir(args)
    manifest = _Manifest(out, {"command": "tune", "estimator": label, **config}, args.seed)
    doc = {
        "estimator": label,
        "c": [float(v) for v in tuning.c],
        "lambda": [float(v) for v in tuning.lam],
        "fixed_point_residual": tuning.fixed_point_residual,
        "iterations": tuning.iterations,
        "dual_terms": [float(v) for v in tuning.dual_terms],
    }
    path = out / "tuning.json"
    _write_json(path, doc)
    manifest.add(path)
    manifest.write()
    return 0


def cmd_verify(args) -> int:
    problem = _tuning_inputs(args)
    label, spec, problem, cfg, config = _estimator_setup(args, problem)
    fp = {"fp_tol": 1e-8, "max_fp_iter": 200, "damping": 0.5}
    fp.update(config.get("fixed_point", {}))
    c = config.get("c", 1.0)
    mode = args.mode or config.get("mode", "special2")
    u = float(config.get("u", 0.5))
    tuning = oracle_lambda(spec, problem, c, cfg, **fp)
    spec = spec.with_lambdas(tuning.lam)
    solution = solve(spec, problem, cfg)
    report = check_bound(spec, problem, tuning, solution, mode, u=u, tol=cfg.tol)
    out = _out_dir(args)
    manifest = _Manifest(out, {"command": "verify", "estimator": label, "mode": mode, **config}, args.seed)
    path = out / "bound.csv"
    with open(path, "w", newline="") as fh:
        fh.write(VERIFY_HEADER + "\n")
        row = [
            label,
            report.mode,
            problem.n,
            problem.p,
            _fmt(report.u) if report.u is not None else "limit0",
            ";".join(_fmt(float(v)) for v in tuning.c),
            _fmt(report.lhs),
            _fmt(report.rhs),
            _fmt(report.slack),
            _fmt(report.holds),
            _fmt(report.certified),
        ]
        fh.write(",".join(str(v) for v in row) + "\n")
    manifest.add(path)
    manifest.write()
    if not (report.holds and report.certified):
        return 5
    return 0


def _record_row(r) -> str:
    cells = [
        str(r.trial),
        r.estimator,
        str(r.n),
        str(r.p),
        _fmt(float(r.rho)),
        r.noise,
        _fmt(float(r.sigma)),
        ";".join(_fmt(float(v)) for v in r.lam),
        _fmt(float(r.lhs)),
        _fmt(float(r.rhs_special1)),
        _fmt(float(r.rhs_special2)),
        _fmt(float(r.rhs_theorem_u05)),
        _fmt(bool(r.holds_special2)),
        _fmt(float(r.kkt_residual)),
        _fmt(float(r.fp_residual)),
        _fmt(float(r.solve_ms)),
    ]
    return ",".join(cells)


def cmd_campaign(args) -> int:
    config = _load_json(args.config, "config") if args.config else {}
    exp = _experiment_config(config, args)
    records = run_monte_carlo(exp, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _Manifest(out, {"command": "campaign", **dataclasses.asdict(exp)}, exp.seed)
    trials_path = out / "trials.csv"
    with open(trials_path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(_record_row(r) + "\n")
    summary = summarize(records)
    summary["config_hash"] = config_hash(dataclasses.asdict(exp))
    summary["estimator"] = exp.estimator
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    manifest.add(trials_path)
    manifest.add(summary_path)
    manifest.write()
    unit_c = bool(np.allclose(exp.c, 1.0))
    for r in records:
        if r.error:
            continue
        ok = r.certified and r.holds_theorem_u05
        if unit_c:
            ok = ok and r.holds_special1 and r.holds_special2
        if not ok:
            log.error("certification failed on trial %d", r.trial)
            return 5
    return 0


def cmd_catalog(args) -> int:
    doc = {label: {"parameters": CATALOG[label]["schema"]} for label in catalog_labels()}
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pblab",
        description="Composite-norm penalized regression with certified prediction bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out-dir", default=".", help="directory for outputs and the manifest")
        p.add_argument("--estimator", help="catalog estimator label")
        if data:
            p.add_argument("--data", help="problem JSON file (X, Y, optional beta_star/eps)")

    p_solve = sub.add_parser("solve", help="solve one instance at a given tuning")
    common(p_solve, data=True)
    p_solve.add_argument("--lambda", dest="lam", help="tuning value(s), semicolon-joined for k > 1")
    p_solve.set_defaults(func=cmd_solve)

    p_tune = sub.add_parser("tune", help="compute the noise-oracle tuning")
    common(p_tune, data=True)
    p_tune.set_defaults(func=cmd_tune)

    p_verify = sub.add_parser("verify", help="certify one prediction bound")
    common(p_verify, data=True)
    p_verify.add_argument("--mode", choices=["theorem", "special1", "special2", "la"], default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_campaign = sub.add_parser("campaign", help="run a Monte Carlo certification campaign")
    common(p_campaign)
    p_campaign.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    p_campaign.set_defaults(func=cmd_campaign)

    p_catalog = sub.add_parser("catalog", help="list estimators and their parameters")
    p_catalog.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, InvalidPremiseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (AssumptionViolationError, DegenerateInputError) as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return 4
    except NonConvergenceError as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return 3
    except CertificationError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
