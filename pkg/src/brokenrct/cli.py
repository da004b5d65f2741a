"""Command-line front end: analyze, simulate, effect-series.

Exit codes: 0 success, 2 design-validation failure, 3 estimation failure,
4 I/O, schema or configuration failure.  All output is deterministic given
the inputs and seed: reports embed the package version, the seed and a
configuration digest, never timestamps.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import warnings
from dataclasses import fields
from pathlib import Path

from . import __version__
from .comparators import METHODS, itt_at_pp, tsls_survivors
from .errors import BrokenRctError, EstimationError, SchemaError
from .estimation import estimate_pace, estimate_pace_logit, fit_cell_params
from .identify import complier_survival, strata_proportions
from .imputation import impute_within_cells, pool_estimates, read_completed_dir
from .records import cells_from_arrays, read_csv, validate_design
from .simulate import CASES, DgpConfig, run_study

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ESTIMATION = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brokenrct",
        description=(
            "Estimate treatment effects in randomized experiments with "
            "non-compliance, truncation-by-death and missing outcomes."
        ),
    )
    parser.add_argument("--version", action="version", version=f"brokenrct {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="estimate effects from a dataset CSV")
    analyze.add_argument("--input", required=True, help="dataset CSV (z,d,delta_s,s,delta_y,y)")
    analyze.add_argument("--method", action="append", choices=("pace",) + METHODS,
                         help="estimator to run (repeatable; default: pace)")
    analyze.add_argument("--scale", choices=("identity", "logit"), default="identity",
                         help="estimand scale for the pace method")
    analyze.add_argument("--level", type=float, default=0.95)
    analyze.add_argument("--impute", type=int, metavar="M",
                         help="hot-deck imputations to draw and pool (M >= 2)")
    analyze.add_argument("--completed-dir", metavar="DIR",
                         help="directory of externally completed CSV datasets to pool")
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--weak-threshold", type=float, default=0.02)
    analyze.add_argument("--format", choices=("text", "csv", "json"), default="text")
    analyze.add_argument("--output", help="write the report here instead of stdout")
    analyze.set_defaults(func=cmd_analyze)

    simulate = sub.add_parser("simulate", help="run a Monte Carlo study")
    simulate.add_argument("--config", required=True, help="study configuration JSON")
    simulate.add_argument("--out-dir", required=True, help="directory for report files")
    simulate.set_defaults(func=cmd_simulate)

    series = sub.add_parser("effect-series",
                            help="per-period survival and outcome effects")
    series.add_argument("inputs", nargs="+", help="one dataset CSV per period")
    series.add_argument("--level", type=float, default=0.95)
    series.add_argument("--output", help="write the series CSV here instead of stdout")
    series.set_defaults(func=cmd_effect_series)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, FileNotFoundError, NotADirectoryError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except BrokenRctError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def _analyze_one(arr, method: str, scale: str, level: float):
    """(estimate, se, ci_lower, ci_upper, p_value) for one method/dataset."""
    if method == "pace":
        params, cov = fit_cell_params(cells_from_arrays(*(arr[:, i] for i in range(6))))
        fn = estimate_pace_logit if scale == "logit" else estimate_pace
        est = fn(params, cov, level=level, n=arr.shape[0])
        return est.tau, est.se_tau, est.ci_lower, est.ci_upper, est.p_value
    if method == "tsls":
        est = tsls_survivors(arr, level=level)
    else:
        est = itt_at_pp(arr, method, level=level)
    return est.tau, est.se, est.ci_lower, est.ci_upper, est.p_value


def cmd_analyze(args) -> int:
    methods = args.method or ["pace"]
    if args.impute is not None and args.completed_dir is not None:
        print("error: --impute and --completed-dir are mutually exclusive", file=sys.stderr)
        return EXIT_IO
    if args.impute is not None and args.impute < 2:
        print("error: --impute requires M >= 2 for pooled variance", file=sys.stderr)
        return EXIT_IO
    arr = read_csv(args.input)

    report = validate_design(arr, weak_threshold=args.weak_threshold)
    if report.failures:
        for failure in report.failures:
            print(f"validation failure: {failure}", file=sys.stderr)
        return EXIT_VALIDATION

    caught: list[str] = []
    datasets = None
    mode = "complete-case"
    if args.impute is not None:
        datasets = impute_within_cells(arr, args.impute, args.seed)
        mode = f"impute m={args.impute} seed={args.seed}"
    elif args.completed_dir is not None:
        datasets = read_completed_dir(args.completed_dir)
        mode = f"completed-dir m={len(datasets)}"

    with warnings.catch_warnings(record=True) as captured:
        warnings.simplefilter("always")
        params, cov = fit_cell_params(cells_from_arrays(*(arr[:, i] for i in range(6))))
        strata = strata_proportions(params)
        survival = complier_survival(params)
        results = {}
        for method in methods:
            if datasets is None:
                results[method] = _analyze_one(arr, method, args.scale, args.level)
            else:
                per_dataset = []
                for dataset in datasets:
                    est, se, *_ = _analyze_one(dataset, method, args.scale, args.level)
                    per_dataset.append((est, se))
                pooled = pool_estimates(per_dataset, level=args.level)
                results[method] = (pooled.point, pooled.se, pooled.ci_lower,
                                   pooled.ci_upper, pooled.p_value)
    caught.extend(report.warnings)
    caught.extend(str(w.message) for w in captured)

    payload = {
        "version": __version__,
        "input": args.input,
        "n_records": report.n_records,
        "mode": mode,
        "scale": args.scale,
        "level": args.level,
        "first_stage": report.first_stage,
        "strata_proportions": {"always_takers": strata.p_a,
                               "compliers": strata.p_c,
                               "never_takers": strata.p_n},
        "complier_survival": {"treated": survival.s1_given_c,
                              "control": survival.s0_given_c,
                              "effect": survival.effect},
        "estimates": {
            method: {"estimate": est, "se": se, "ci_lower": lo,
                     "ci_upper": hi, "p_value": p}
            for method, (est, se, lo, hi, p) in results.items()
        },
        "warnings": caught,
    }
    _emit(_render_analyze(payload, args.format), args.output)
    return EXIT_OK


def _render_analyze(payload, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["method", "scale", "estimate", "se",
                         "ci_lower", "ci_upper", "p_value"])
        for method, cell in payload["estimates"].items():
            writer.writerow([method, payload["scale"], repr(cell["estimate"]),
                             repr(cell["se"]), repr(cell["ci_lower"]),
                             repr(cell["ci_upper"]), repr(cell["p_value"])])
        return buffer.getvalue()
    lines = [
        f"brokenrct {payload['version']}",
        f"input: {payload['input']} (n={payload['n_records']})",
        f"missing-data mode: {payload['mode']}",
        f"first-stage difference: {payload['first_stage']:.6f}",
        "strata proportions: always-takers {always_takers:.6f}  "
        "compliers {compliers:.6f}  never-takers {never_takers:.6f}".format(
            **payload["strata_proportions"]),
        "complier survival:  treated {treated:.6f}  control {control:.6f}  "
        "effect {effect:.6f}".format(**payload["complier_survival"]),
        "",
        f"{'method':<8}{'scale':<10}{'estimate':>12}{'se':>12}"
        f"{'ci_lower':>12}{'ci_upper':>12}{'p_value':>12}",
    ]
    for method, cell in payload["estimates"].items():
        lines.append(
            f"{method:<8}{payload['scale']:<10}{cell['estimate']:>12.6f}"
            f"{cell['se']:>12.6f}{cell['ci_lower']:>12.6f}"
            f"{cell['ci_upper']:>12.6f}{cell['p_value']:>12.6f}"
        )
    for message in payload["warnings"]:
        lines.append(f"warning: {message}")
    return "\n".join(lines) + "\n"


def _config_error(path: str, message: str) -> SchemaError:
    return SchemaError(f"{path}: {message}")


def load_study_config(path) -> dict:
    with open(path) as handle:
        raw = json.load(handle)
    if not isinstance(raw, dict):
        raise _config_error("<root>", "configuration must be a JSON object")
    known = {"seed", "reps", "cases", "sizes", "estimators", "oracle_n",
             "n_jobs", "dgp"}
    for key in raw:
        if key not in known:
            raise _config_error(key, "unknown configuration field")
    config = {
        "seed": raw.get("seed", 20240501),
        "reps": raw.get("reps", 2000),
        "cases": raw.get("cases", list(CASES)),
        "sizes": raw.get("sizes", [500, 2000, 8000]),
        "estimators": raw.get("estimators", ["pace", "tsls"]),
        "oracle_n": raw.get("oracle_n", 1_000_000),
        "n_jobs": raw.get("n_jobs", 1),
        "dgp": raw.get("dgp", {}),
    }
    for key in ("seed", "reps", "oracle_n", "n_jobs"):
        if not isinstance(config[key], int):
            raise _config_error(key, f"must be an integer, got {config[key]!r}")
    for key in ("cases", "sizes", "estimators"):
        if not isinstance(config[key], list) or not config[key]:
            raise _config_error(key, "must be a non-empty list")
    for i, case in enumerate(config["cases"]):
        if case not in CASES:
            raise _config_error(f"cases[{i}]", f"must be one of {list(CASES)}")
    if not isinstance(config["dgp"], dict):
        raise _config_error("dgp", "must be an object of DGP overrides")
    valid_dgp = {f.name for f in fields(DgpConfig)} - {"n", "case"}
    for key, value in config["dgp"].items():
        if key not in valid_dgp:
            raise _config_error(f"dgp.{key}", "unknown DGP field")
        if isinstance(value, list):
            config["dgp"][key] = tuple(value)
    try:
        DgpConfig(**config["dgp"]).validate()
    except (TypeError, ValueError) as exc:
        raise _config_error("dgp", str(exc)) from None
    return config


def cmd_simulate(args) -> int:
    config = load_study_config(args.config)
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()).hexdigest()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_study(
        cases=config["cases"],
        sizes=config["sizes"],
        reps=config["reps"],
        estimators=config["estimators"],
        seed=config["seed"],
        config=DgpConfig(**config["dgp"]),
        oracle_n=config["oracle_n"],
        n_jobs=config["n_jobs"],
    )
    report.to_csv(out_dir / "report.csv")
    (out_dir / "table.txt").write_text(report.format_table())
    metadata = {
        "version": __version__,
        "seed": config["seed"],
        "config_sha256": digest,
        "config": config,
    }
    (out_dir / "metadata.json").write_text(
        json.dumps(metadata, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir / 'report.csv'}")
    print(f"wrote {out_dir / 'table.txt'}")
    print(f"wrote {out_dir / 'metadata.json'}")
    return EXIT_OK


def cmd_effect_series(args) -> int:
    rows = []
    for period, path in enumerate(args.inputs, start=1):
        row = {"period": period, "input": path}
        try:
            arr = read_csv(path)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                params, cov = fit_cell_params(
                    cells_from_arrays(*(arr[:, i] for i in range(6))))
                survival = complier_survival(params)
                est = estimate_pace(params, cov, level=args.level, n=arr.shape[0])
            row.update(
                n=arr.shape[0],
                s1_complier=survival.s1_given_c,
                s0_complier=survival.s0_given_c,
                survival_effect=survival.effect,
                tau=est.tau, se=est.se_tau,
                ci_lower=est.ci_lower, ci_upper=est.ci_upper,
                status="ok",
            )
        except (BrokenRctError, OSError) as exc:
            row.update(n="", s1_complier="", s0_complier="", survival_effect="",
                       tau="", se="", ci_lower="", ci_upper="",
                       status=f"error: {exc}")
        rows.append(row)
    buffer = io.StringIO()
    names = ["period", "input", "n", "s1_complier", "s0_complier",
             "survival_effect", "tau", "se", "ci_lower", "ci_upper", "status"]
    writer = csv.DictWriter(buffer, fieldnames=names)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v
                         for k, v in row.items()})
    _emit(buffer.getvalue(), args.output)
    return EXIT_OK


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
