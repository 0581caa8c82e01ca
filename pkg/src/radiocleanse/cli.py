"""Command-line pipeline: load, cleanse, position, evaluate, report.

Every subcommand validates its flags before touching data, takes a lock on
the output directory, writes artifacts atomically, and embeds its full
configuration in each report.  Errors map to distinct exit codes (see
errors.EXIT_CODES); 0 means success.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .cleanse import CleanseConfig, clean
from .errors import RadioCleanseError, exit_code_for
from .metrics import EvaluationReport, ecdf, evaluate_full, normalize, rss_histogram
from .positioning import KnnConfig, fit
from .radiomap import (
    ColumnSchema,
    DEFAULT_SENTINEL,
    RadioMap,
    ensure_z,
    load_csv,
    load_profile,
    save_csv,
    to_positive,
)
from .reports import (
    SCHEMA_VERSION,
    atomic_write_text,
    output_lock,
    read_json,
    render_comparison_table,
    write_json,
    write_points_csv,
)
from .sweep import sweep as run_sweep
from .synth import SynthConfig, generate, generate_queries


def _threads_from_env() -> int | None:
    raw = os.environ.get("RADIOCLEANSE_THREADS")
    if raw is None:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


def _add_load_flags(parser: argparse.ArgumentParser, test: bool = False) -> None:
    parser.add_argument("--train", required=True, help="training radio map CSV")
    if test:
        parser.add_argument("--test", required=True, help="test radio map CSV")
    parser.add_argument("--sentinel", type=float, default=DEFAULT_SENTINEL,
                        help="non-detected marker in the files (default 100)")
    parser.add_argument("--schema", default=None,
                        help="key=value column-mapping config file")
    parser.add_argument("--floor-height", type=float, default=4.0,
                        help="metres per floor index when no HEIGHT column exists")


def _add_knn_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int, default=1)
    parser.add_argument("--distance", choices=["manhattan"], default="manhattan")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radiocleanse",
        description="Cleanse Wi-Fi fingerprinting radio maps and quantify the "
                    "effect on k-NN positioning.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_clean = sub.add_parser("clean", help="remove low-correlation fingerprints")
    _add_load_flags(p_clean)
    p_clean.add_argument("--rho", type=float, required=True, help="match threshold, 0-100")
    p_clean.add_argument("--stat", choices=["mean", "max"], default="max")
    p_clean.add_argument("--out", required=True, help="output directory")

    p_eval = sub.add_parser("eval", help="evaluate baseline (and optionally cleansed) 1..k-NN")
    _add_load_flags(p_eval, test=True)
    p_eval.add_argument("--rho", type=float, default=None,
                        help="also run a cleansed evaluation at this threshold")
    p_eval.add_argument("--stat", choices=["mean", "max"], default="max")
    _add_knn_flags(p_eval)
    p_eval.add_argument("--dataset-name", default=None)
    p_eval.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="search the cleansing threshold grid")
    _add_load_flags(p_sweep, test=True)
    p_sweep.add_argument("--grid-step", type=int, default=5)
    p_sweep.add_argument("--stat", choices=["mean", "max", "both"], default="both")
    p_sweep.add_argument("--tune-on", choices=["validation", "test"], default="validation")
    p_sweep.add_argument("--objective", choices=["max_removed", "min_error"],
                         default="max_removed")
    p_sweep.add_argument("--seed", type=int, default=0, help="validation split seed")
    _add_knn_flags(p_sweep)
    p_sweep.add_argument("--out", required=True)

    p_gen = sub.add_parser("gen", help="generate synthetic radio maps")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--ap-count", type=int, default=20)
    p_gen.add_argument("--area", type=float, nargs=2, default=[50.0, 50.0],
                       metavar=("WIDTH", "DEPTH"))
    p_gen.add_argument("--floors", type=int, default=1)
    p_gen.add_argument("--grid-spacing", type=float, default=5.0)
    p_gen.add_argument("--tx-power", type=float, default=-30.0)
    p_gen.add_argument("--path-loss-exp", type=float, default=2.0)
    p_gen.add_argument("--sigma", type=float, default=0.0)
    p_gen.add_argument("--threshold", type=float, default=-95.0)
    p_gen.add_argument("--outliers", type=int, default=0)
    p_gen.add_argument("--queries", type=int, default=0,
                       help="also emit this many random-position test fingerprints")
    p_gen.add_argument("--sentinel", type=float, default=DEFAULT_SENTINEL)
    p_gen.add_argument("--out", required=True)

    p_report = sub.add_parser("report", help="render a comparison table from eval reports")
    p_report.add_argument("reports", nargs="+", help="eval report JSON files")
    p_report.add_argument("--out", default=None, help="write the table here instead of stdout")

    return parser


def _load_pair(args) -> tuple[RadioMap, RadioMap | None]:
    schema = ColumnSchema()
    sentinel = args.sentinel
    floor_height = args.floor_height
    if args.schema:
        profile = load_profile(args.schema)
        schema = profile.schema
        sentinel = profile.sentinel
        floor_height = profile.floor_height
    train = ensure_z(
        load_csv(args.train, schema=schema, sentinel=sentinel, floor_height=floor_height)
    )
    test = None
    if getattr(args, "test", None):
        test = ensure_z(
            load_csv(args.test, schema=schema, sentinel=sentinel, floor_height=floor_height)
        )
    return train, test


def _invocation(args) -> dict:
    payload = {k: v for k, v in vars(args).items() if k != "command" and v is not None}
    return {"command": args.command, "args": payload, "version": __version__}


def _cmd_clean(args) -> int:
    train, _ = _load_pair(args)
    cleansed, report = clean(train, CleanseConfig(rho=args.rho, window_stat=args.stat))
    with output_lock(args.out) as out:
        save_csv(cleansed, out / "cleansed.csv", sentinel=args.sentinel)
        write_json(out / "cleanse_report.json", {
            "invocation": _invocation(args),
            "input_rows": train.m,
            "kept_rows": cleansed.m,
            **report.to_dict(),
        })
    print(f"kept {cleansed.m} of {train.m} fingerprints "
          f"(window={report.window}, rho={report.rho:g})")
    return 0


def _cmd_eval(args) -> int:
    train, test = _load_pair(args)
    knn = KnnConfig(k=args.k, distance=args.distance)
    train_pos = to_positive(train)
    test_pos = to_positive(test, v_min=train_pos.v_min)

    baseline = evaluate_full(fit(train_pos, knn), test_pos)

    rho = args.rho
    cleansed_outcome = None
    report_kwargs: dict = {}
    cleansed_train = None
    if rho is not None:
        cleansed_train, cleanse_report = clean(
            train, CleanseConfig(rho=rho, window_stat=args.stat)
        )
        cleansed_pos = train_pos.select_rows(cleanse_report.kept)
        cleansed_outcome = evaluate_full(fit(cleansed_pos, knn), test_pos)
        report_kwargs = {
            "rho": rho,
            "window_stat": args.stat,
            "window": cleanse_report.window,
            "removed": int(cleanse_report.removed.size),
            "cleansed": cleansed_outcome.metrics,
            "normalized": normalize(cleansed_outcome.metrics, baseline.metrics),
        }

    name = args.dataset_name or Path(args.train).stem
    report = EvaluationReport(
        dataset=name,
        train_size=train.m,
        test_size=test.m,
        ap_count=train.n,
        baseline=baseline.metrics,
        config=_invocation(args),
        **report_kwargs,
    )
    with output_lock(args.out) as out:
        write_json(out / "eval_report.json", report.to_dict())
        write_points_csv(out / "ecdf_baseline.csv", ecdf(baseline.errors_3d),
                         ("error_3d_m", "probability"))
        write_points_csv(out / "rss_hist_baseline.csv", rss_histogram(train),
                         ("bin_center_dbm", "fraction"))
        if cleansed_outcome is not None:
            write_points_csv(out / "ecdf_cleansed.csv", ecdf(cleansed_outcome.errors_3d),
                             ("error_3d_m", "probability"))
            write_points_csv(out / "rss_hist_cleansed.csv", rss_histogram(cleansed_train),
                             ("bin_center_dbm", "fraction"))
    print(f"baseline e3D={baseline.metrics.mean_3d:.3f} m over {test.m} queries")
    if cleansed_outcome is not None:
        ratio = report.normalized.mean_3d
        print(f"cleansed e3D={cleansed_outcome.metrics.mean_3d:.3f} m (ratio {ratio:.3f})")
    return 0


def _cmd_sweep(args) -> int:
    train, test = _load_pair(args)
    stats = ("max", "mean") if args.stat == "both" else (args.stat,)
    result = run_sweep(
        train,
        test,
        grid_step=args.grid_step,
        knn=KnnConfig(k=args.k, distance=args.distance),
        stats=stats,
        tune_on=args.tune_on,
        seed=args.seed,
        objective=args.objective,
        max_workers=_threads_from_env(),
    )
    with output_lock(args.out) as out:
        write_json(out / "sweep_report.json", {
            "invocation": _invocation(args),
            **result.to_dict(),
        })
    if result.no_safe_cleansing:
        print("no safe cleansing found; choosing the least destructive threshold")
    print(f"chosen rho={result.chosen_rho} stat={result.chosen_stat} "
          f"({len(result.records)} thresholds evaluated)")
    return 0


def _cmd_gen(args) -> int:
    config = SynthConfig(
        ap_count=args.ap_count,
        area=tuple(args.area),
        floors=args.floors,
        grid_spacing=args.grid_spacing,
        tx_power=args.tx_power,
        path_loss_exponent=args.path_loss_exp,
        shadowing_sigma=args.sigma,
        detection_threshold=args.threshold,
        outlier_count=args.outliers,
        seed=args.seed,
    )
    clean_map, poisoned, outliers = generate(config)
    with output_lock(args.out) as out:
        save_csv(clean_map, out / "clean.csv", sentinel=args.sentinel)
        save_csv(poisoned, out / "poisoned.csv", sentinel=args.sentinel)
        write_json(out / "gen_report.json", {
            "invocation": _invocation(args),
            "clean_rows": clean_map.m,
            "poisoned_rows": poisoned.m,
            "outlier_indices": [int(i) for i in outliers],
        })
        if args.queries:
            queries = generate_queries(config, args.queries)
            save_csv(queries, out / "queries.csv", sentinel=args.sentinel)
    print(f"wrote {clean_map.m} clean rows, {poisoned.m} poisoned rows")
    return 0


def _cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        payload = read_json(path)
        if payload.get("schema_version") != SCHEMA_VERSION:
            raise RadioCleanseError(
                f"{path}: unsupported schema_version {payload.get('schema_version')!r}"
            )
        reports.append(EvaluationReport.from_dict(payload))
    table = render_comparison_table(reports)
    if args.out:
        atomic_write_text(args.out, table)
    else:
        sys.stdout.write(table)
    return 0


_HANDLERS = {
    "clean": _cmd_clean,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "gen": _cmd_gen,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (RadioCleanseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
