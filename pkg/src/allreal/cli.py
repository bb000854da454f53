"""Command-line front end.

    allreal estimate --k 2 --n 10 --measure gaussian --trials 100000 --seed 42
    allreal sweep --k 3 --n 1..64:x2 --measure gaussian --output runs/g3 --format csv,svg
    allreal oracle --k 2 --n 1 --measure rademacher
    allreal bound-check --k 2 --n 1..8 --measure rademacher
    allreal lemma-check --n 1,5 --measure uniform:-1,1

Exit codes: 0 success, 1 bad input, 2 a bound or identity check failed,
3 an exact enumeration exceeded its budget.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from .bounds import (
    check_theorem1,
    exact_real_probability,
    lemma_exchangeable_check,
    proposition_check,
    rank_one_probability,
    theorem1_bound,
)
from .config import COMMANDS, ConfigError, ExperimentConfig
from .measures import BudgetExceededError, IidEntries, MeasureError
from .montecarlo import EstimateResult, TrialConfig, run_trials
from .output import emit_outputs, render_json

EXIT_OK, EXIT_BAD_INPUT, EXIT_BOUND_VIOLATION, EXIT_BUDGET = 0, 1, 2, 3
OUTPUT_DIR_ENV = "ALLREAL_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="allreal", description="Real-spectrum probabilities of random matrix products.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        # defaults are None so that only explicit flags override the config file
        p.add_argument("--config", help="JSON config file; explicit flags override its values")
        p.add_argument("--k", type=int)
        p.add_argument("--n", help="n, list '1,2,4', range '1..8' or geometric '1..64:x2'")
        p.add_argument("--measure", help="gaussian[:mean,std] | uniform[:lo,hi] | rademacher | "
                                         "atomic:v@m,...[+gaussian:...] | inline JSON")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--policy", choices=("float", "exact", "fallback"))
        p.add_argument("--tau", type=float)
        p.add_argument("--rank-tol", dest="rank_tol", type=float)
        p.add_argument("--confidence", type=float)
        p.add_argument("--budget", type=int)
        p.add_argument("--workers", type=int, help="0 = one per CPU")
        p.add_argument("--output", help="output path without extension")
        p.add_argument("--format", dest="formats", help="comma list of json,csv,svg")
    return parser


def parse_config(argv=None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data["command"] = args.command
    for name in ("k", "n", "measure", "trials", "seed", "policy", "tau", "rank_tol",
                 "confidence", "budget", "workers", "output"):
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    if args.formats is not None:
        data["formats"] = [f.strip() for f in args.formats.split(",") if f.strip()]
    if args.command == "lemma-check":
        data.setdefault("k", 2)
    data.setdefault("measure", "gaussian")
    return ExperimentConfig.from_dict(data)


def _rational(q: Fraction) -> dict:
    return {"exact_num": str(q.numerator), "exact_den": str(q.denominator)}


def _number(x):
    return str(x) if isinstance(x, Fraction) else x


def _estimate_row(n: int, est: EstimateResult) -> dict:
    lo, hi = est.ci
    return {
        "n": n,
        "trials": est.trials,
        "all_real": est.all_real,
        "complex_pair": est.complex_pair,
        "indeterminate": est.indeterminate,
        "p_hat": est.p_hat,
        "p_hat_upper": est.p_hat_upper,
        "ci_lo": lo,
        "ci_hi": hi,
        "min_log_scale": est.min_log_scale,
        "max_log_scale": est.max_log_scale,
        "bound": None,
        "exact_num": None,
        "exact_den": None,
    }


def _exact_row(n: int, q: Fraction) -> dict:
    return {"n": n, "trials": None, "all_real": None, "complex_pair": None, "indeterminate": None,
            "p_hat": None, "ci_lo": None, "ci_hi": None, "bound": None, **_rational(q)}


def _trial_config(cfg: ExperimentConfig, measure, n: int) -> TrialConfig:
    return TrialConfig(cfg.k, n, measure, cfg.trials, cfg.seed, cfg.build_policy(), cfg.confidence)


def execute(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Run the experiment; returns ``(record, exit_code)``."""
    started = time.perf_counter()
    measure = cfg.build_measure()
    rows = []
    status = EXIT_OK
    extra: dict = {}

    if cfg.command in ("estimate", "sweep"):
        for n in cfg.n:
            rows.append(_estimate_row(n, run_trials(_trial_config(cfg, measure, n), cfg.workers)))
    elif cfg.command == "oracle":
        p1 = rank_one_probability(measure, budget=cfg.budget, seed=cfg.seed, trials=cfg.trials)
        extra["p1"] = _number(p1)
        for n in cfg.n:
            row = _exact_row(n, exact_real_probability(measure, n, cfg.budget))
            row["bound"] = _number(theorem1_bound(p1, n))
            rows.append(row)
    elif cfg.command == "bound-check":
        p1 = rank_one_probability(measure, budget=cfg.budget, seed=cfg.seed, trials=cfg.trials)
        extra["p1"] = _number(p1)
        proposition_applies = cfg.k == 2 and isinstance(measure, IidEntries)
        for n in cfg.n:
            estimate = None
            if measure.is_finite:
                try:
                    estimate = exact_real_probability(measure, n, cfg.budget)
                except BudgetExceededError:
                    estimate = None
            if estimate is None:
                est = run_trials(_trial_config(cfg, measure, n), cfg.workers)
                report = check_theorem1(measure, n, est, p1)
                row = _estimate_row(n, est)
                prop_ok = proposition_check(est) if proposition_applies else None
            else:
                report = check_theorem1(measure, n, estimate, p1)
                row = _exact_row(n, estimate)
                prop_ok = estimate >= Fraction(1, 2) if proposition_applies else None
            row.update(bound=_number(report.bound), satisfied=report.satisfied,
                       margin=report.margin, proposition_satisfied=prop_ok)
            rows.append(row)
            if not report.satisfied or prop_ok is False:
                status = EXIT_BOUND_VIOLATION
    elif cfg.command == "lemma-check":
        if cfg.k != 2:
            raise ConfigError("lemma-check is defined for k = 2")
        for n in cfg.n:
            rep = lemma_exchangeable_check(measure, cfg.trials, cfg.seed, n)
            lo, hi = rep.ci_d1
            rows.append({
                "n": n, "trials": rep.samples,
                "all_real": rep.d1_nonneg, "complex_pair": rep.samples - rep.d1_nonneg, "indeterminate": 0,
                "p_hat": rep.p_d1, "ci_lo": lo, "ci_hi": hi, "bound": 0.5,
                "exact_num": None, "exact_den": None,
                "d2_nonneg": rep.d2_nonneg, "p_d2": rep.p_d2, "ci_d2": list(rep.ci_d2),
                "either_nonneg": rep.either_nonneg, "exchangeable": rep.exchangeable,
                "sure_event": rep.sure_event, "half_bound": rep.half_bound,
            })
            if not rep.passed:
                status = EXIT_BOUND_VIOLATION

    record = {
        "tool": "allreal",
        "version": __version__,
        "config": cfg.to_dict(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": time.perf_counter() - started,
        "results": rows,
        **extra,
    }
    return record, status


def _output_base(cfg: ExperimentConfig):
    if cfg.output:
        return Path(cfg.output)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / f"{cfg.command}-k{cfg.k}-seed{cfg.seed}"
    return None


def _summary(record: dict) -> str:
    lines = []
    for r in record["results"]:
        if r.get("exact_num") is not None:
            val = f"exact={r['exact_num']}/{r['exact_den']}"
        else:
            val = f"p_hat={r['p_hat']:.6f} ci=[{r['ci_lo']:.6f}, {r['ci_hi']:.6f}] indet={r['indeterminate']}"
        if r.get("bound") is not None and record["config"]["command"] != "lemma-check":
            val += f" bound={r['bound']}"
        if "satisfied" in r:
            val += f" satisfied={r['satisfied']}"
        lines.append(f"n={r['n']}: {val}")
    return "\n".join(lines)


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        record, status = execute(cfg)
    except SystemExit as exc:
        return int(exc.code or 0)
    except BudgetExceededError as exc:
        print(f"allreal: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, MeasureError) as exc:
        print(f"allreal: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    base = _output_base(cfg)
    if base is None:
        sys.stdout.write(render_json(record))
    else:
        try:
            paths = emit_outputs(record, base, cfg.formats)
        except OSError as exc:
            print(f"allreal: cannot write output: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
        print(_summary(record))
        for p in paths:
            print(f"wrote {p}")
    return status


if __name__ == "__main__":
    sys.exit(main())
