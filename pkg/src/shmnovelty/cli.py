"""Command-line interface.

Commands: ``simulate``, ``train``, ``detect``, ``fit-density``, ``evaluate``.
Every command resolves one declarative configuration (defaults, then
``--config`` file, then ``--set key=value`` flags), derives all randomness
from the named seeds inside it, and stamps the SHA-256 of the resolved
configuration into every output file header.

Exit codes: 0 success, 1 internal error, 2 invalid input,
3 format/version mismatch.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import building, kdme
from .config import RunConfig, config_sha256, config_text, load_config
from .detector import build_report, detect_simulation, train
from .errors import FormatVersionError, InvalidInputError, ShmNoveltyError
from .features import read_accel_csv, segment_record, write_accel_csv
from .persist import (
    fmt,
    load_model,
    save_model,
    write_csv,
    write_detection_csvs,
    write_metrics_csv,
    write_scatter_svg,
)

TRAINING_CSV = "training.csv"
MANIFEST_CSV = "manifest.csv"
CASES_DIR = "cases"


def _parse_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides["simulate_seed"] = str(args.seed)
        overrides["train_seed"] = str(args.seed)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise InvalidInputError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value
    return overrides


def _load(args: argparse.Namespace) -> tuple[RunConfig, str]:
    cfg = load_config(getattr(args, "config", None), _parse_overrides(args))
    return cfg, config_sha256(cfg)


def _require(value: str, flag: str) -> str:
    if not value:
        raise InvalidInputError(f"missing required path: pass {flag} or set it in the config")
    return value


def _comments(sha: str) -> list[str]:
    return [f"config_sha256={sha}"]


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg, sha = _load(args)
    out_dir = _require(args.out or cfg.data_dir, "--out")
    if os.path.isdir(out_dir) and os.listdir(out_dir):
        raise InvalidInputError(f"output directory {out_dir!r} is not empty")
    os.makedirs(os.path.join(out_dir, CASES_DIR), exist_ok=True)

    dataset = building.generate_dataset(cfg.generate_config())
    comments = _comments(sha)
    write_accel_csv(os.path.join(out_dir, TRAINING_CSV), dataset.training_record, comments)
    write_csv(
        os.path.join(out_dir, "training_temperatures.csv"),
        ["block_index", "t_offset_seconds", "temperature_c"],
        [
            (b, b * cfg.temperature_block_minutes * 60.0, float(t))
            for b, t in enumerate(dataset.training_temperatures)
        ],
        comments,
    )
    stories = cfg.stories
    manifest_rows = []
    for case in dataset.test_cases:
        rel = f"{CASES_DIR}/{case.case_id}.csv"
        write_accel_csv(os.path.join(out_dir, rel), case.record, comments)
        manifest_rows.append(
            (
                case.case_id,
                rel,
                "damaged" if case.damaged else "undamaged",
                float(case.scenario.event_pga),
                ";".join(repr(float(f)) for f in case.scenario.damage_factors),
                float(case.temperature),
                *[float(d) for d in case.peak_drift_ratios],
            )
        )
    write_csv(
        os.path.join(out_dir, MANIFEST_CSV),
        [
            "case_id",
            "file",
            "label",
            "event_pga",
            "damage_factors",
            "temperature_c",
            *[f"peak_drift_s{i + 1}" for i in range(stories)],
        ],
        manifest_rows,
        comments,
    )
    with open(os.path.join(out_dir, "config_resolved.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config_sha256={sha}\n")
        fh.write(config_text(cfg))
    n_segments = int(dataset.training_record.duration // cfg.segment_seconds)
    n_damaged = sum(1 for c in dataset.test_cases if c.damaged)
    print(
        f"wrote {out_dir}: training record {dataset.training_record.duration:.0f} s "
        f"({n_segments} segments of {cfg.segment_seconds:.0f} s), "
        f"{len(dataset.test_cases)} test cases ({n_damaged} labeled damaged)"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg, sha = _load(args)
    data_dir = _require(args.data or cfg.data_dir, "--data")
    model_path = _require(args.model or cfg.model_file, "--model")
    training_path = os.path.join(data_dir, TRAINING_CSV)
    if not os.path.isfile(training_path):
        raise InvalidInputError(f"no {TRAINING_CSV} in {data_dir!r}")
    record = read_accel_csv(training_path, record_id="train")
    segments = segment_record(record, cfg.segment_seconds)
    # Feasibility gate before any heavy feature computation.
    d = 4 * cfg.eta_count
    q_max = min(len(segments) - 1, d)
    if cfg.q > q_max:
        raise InvalidInputError(
            f"q={cfg.q} infeasible: {len(segments)} segments of dimension {d} "
            f"support at most q={q_max}"
        )
    model = train(segments, cfg.train_config())
    save_model(model_path, model, config_sha256=sha)

    report_path = args.report or os.path.join(
        os.path.dirname(os.path.abspath(model_path)), "training_report.csv"
    )
    rows: list[tuple] = [
        ("training_segments", "", len(segments)),
        ("threshold", "", float(model.threshold)),
    ]
    for j in range(cfg.q):
        marg = model.marginals[j]
        rows.append(("explained_variance_ratio", j, float(model.pca.explained_variance_ratio[j])))
        rows.append(("ica_converged", j, bool(model.ica.converged[j])))
        rows.append(("kdme_M", j, int(marg.M)))
        rows.append(("kdme_gamma", j, ";".join(repr(float(g)) for g in marg.gamma)))
        rows.append(("kdme_lambda", j, ";".join(repr(float(v)) for v in marg.lam)))
        rows.append(("kdme_theta", j, float(marg.theta)))
    write_csv(report_path, ["field", "component", "value"], rows, _comments(sha))
    evr = ", ".join(f"{v:.3f}" for v in model.pca.explained_variance_ratio)
    print(
        f"trained on {len(segments)} segments; explained variance ratios [{evr}]; "
        f"threshold {model.threshold:.6e}; model -> {model_path}"
    )
    return 0


def _read_manifest(data_dir: str) -> list[tuple[str, str, bool | None]]:
    """(case_id, csv path, label or None) per test case."""
    manifest_path = os.path.join(data_dir, MANIFEST_CSV)
    entries: list[tuple[str, str, bool | None]] = []
    if os.path.isfile(manifest_path):
        with open(manifest_path, "r", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
        if not rows:
            raise InvalidInputError(f"{manifest_path}: empty manifest")
        header = rows[0]
        try:
            i_case = header.index("case_id")
            i_file = header.index("file")
        except ValueError:
            raise InvalidInputError(f"{manifest_path}: need case_id and file columns")
        i_label = header.index("label") if "label" in header else None
        for row in rows[1:]:
            label: bool | None = None
            if i_label is not None and row[i_label]:
                if row[i_label] not in ("damaged", "undamaged"):
                    raise InvalidInputError(
                        f"{manifest_path}: label must be damaged/undamaged, got {row[i_label]!r}"
                    )
                label = row[i_label] == "damaged"
            entries.append((row[i_case], os.path.join(data_dir, row[i_file]), label))
        return entries
    cases_dir = os.path.join(data_dir, CASES_DIR)
    if not os.path.isdir(cases_dir):
        raise InvalidInputError(f"{data_dir!r} has neither {MANIFEST_CSV} nor {CASES_DIR}/")
    for name in sorted(os.listdir(cases_dir)):
        if name.endswith(".csv"):
            entries.append((name[:-4], os.path.join(cases_dir, name), None))
    if not entries:
        raise InvalidInputError(f"no test case CSVs under {cases_dir!r}")
    return entries


def cmd_detect(args: argparse.Namespace) -> int:
    cfg, sha = _load(args)
    model_path = _require(args.model or cfg.model_file, "--model")
    data_dir = _require(args.data or cfg.data_dir, "--data")
    out_dir = _require(args.out or cfg.out_dir, "--out")
    model = load_model(model_path)
    os.makedirs(out_dir, exist_ok=True)
    verdicts = []
    for case_id, path, label in _read_manifest(data_dir):
        record = read_accel_csv(path, record_id=case_id)
        if abs(record.sample_rate - model.metadata.sample_rate) > 1e-6:
            raise InvalidInputError(
                f"{path}: sample rate {record.sample_rate} does not match "
                f"model's {model.metadata.sample_rate}"
            )
        segments = segment_record(record, model.metadata.segment_seconds)
        if not segments:
            raise InvalidInputError(
                f"{path}: record shorter than one {model.metadata.segment_seconds} s segment"
            )
        verdicts.append(detect_simulation(model, segments, case_id=case_id, label=label))
    report = build_report(verdicts)
    comments = _comments(sha)
    write_detection_csvs(out_dir, report, comments)
    if not args.no_plot:
        write_scatter_svg(
            os.path.join(out_dir, "densities.svg"), report.verdicts, model.threshold, comments
        )
    n_damaged = sum(1 for v in report.verdicts if v.damaged)
    line = f"{len(report.verdicts)} simulations, {n_damaged} flagged damaged"
    if report.metrics is not None:
        m = report.metrics
        line += (
            f"; accuracy {m.accuracy:.3f}"
            f", recall {fmt(m.recall) or '-'}"
            f", precision {fmt(m.precision) or '-'}"
            f", F1 {fmt(m.f1) or '-'}"
        )
    print(line + f"; reports -> {out_dir}")
    return 0


def _read_numeric_column(path: str, column: str) -> np.ndarray:
    """One numeric CSV column by header name or 0-based index, with
    line-numbered parse errors."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    header_idx = None
    for i, line in enumerate(lines):
        if not line.startswith("#") and line.strip():
            header_idx = i
            break
    if header_idx is None:
        raise InvalidInputError(f"{path}: no header row found")
    header = [c.strip() for c in lines[header_idx].strip().split(",")]
    if column in header:
        col = header.index(column)
    else:
        try:
            col = int(column)
        except ValueError:
            raise InvalidInputError(
                f"{path}: column {column!r} not in header {header} and not an index"
            )
        if not 0 <= col < len(header):
            raise InvalidInputError(f"{path}: column index {col} out of range")
    values = []
    for lineno, line in enumerate(lines[header_idx + 1 :], start=header_idx + 2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split(",")
        if col >= len(parts):
            raise InvalidInputError(f"{path}:{lineno}: row has only {len(parts)} columns")
        try:
            values.append(float(parts[col]))
        except ValueError:
            raise InvalidInputError(
                f"{path}:{lineno}: could not parse {parts[col]!r} as a number"
            )
    if len(values) < 30:
        raise InvalidInputError(f"{path}: need >= 30 numeric rows, got {len(values)}")
    return np.asarray(values)


def cmd_fit_density(args: argparse.Namespace) -> int:
    cfg, sha = _load(args)
    sample = _read_numeric_column(args.input, args.column)
    model, fit_report = kdme.fit_kdme(sample, cfg.kdme_config(), return_report=True)
    density = kdme.kdme_pdf(model, model.x_eval)
    write_csv(
        args.out,
        ["x", "density"],
        list(zip(model.x_eval.tolist(), density.tolist())),
        _comments(sha),
    )
    if args.trace:
        rows = []
        for m, escalation, history in fit_report.traces:
            for step in history:
                rows.append(
                    (
                        m,
                        escalation,
                        step.iteration,
                        ";".join(repr(float(g)) for g in np.atleast_1d(step.x)),
                        float(step.value),
                        float(step.incumbent),
                        bool(step.penalized),
                    )
                )
        write_csv(
            args.trace,
            ["M", "escalation", "iteration", "gamma", "objective", "incumbent", "penalized"],
            rows,
            _comments(sha),
        )
    gamma = ", ".join(f"{g:.4f}" for g in model.gamma)
    lam = ", ".join(f"{v:.4f}" for v in model.lam)
    print(
        f"fitted KDME on {sample.size} samples: M={model.M}, gamma=[{gamma}], "
        f"lambda=[{lam}], objective {model.theta:.6f}, "
        f"window [{model.window[0]:.6g}, {model.window[1]:.6g}], h {model.h:.6g}; "
        f"density -> {args.out}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg, sha = _load(args)
    with open(args.verdicts, "r", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows or rows[0][:1] != ["case_id"]:
        raise InvalidInputError(f"{args.verdicts}: expected a verdicts CSV with a case_id column")
    header = rows[0]
    try:
        i_verdict = header.index("verdict")
        i_label = header.index("label")
    except ValueError:
        raise InvalidInputError(f"{args.verdicts}: need verdict and label columns")
    tn = tp = fn = fp = 0
    for lineno, row in enumerate(rows[1:], start=2):
        if not row[i_label]:
            raise InvalidInputError(
                f"{args.verdicts}:{lineno}: unlabeled verdict; evaluation needs labels"
            )
        flagged = row[i_verdict] == "damaged"
        truth = row[i_label] == "damaged"
        tp += flagged and truth
        tn += (not flagged) and (not truth)
        fp += flagged and not truth
        fn += (not flagged) and truth
    from .detector import DetectionReport, compute_metrics

    metrics = compute_metrics(tn, tp, fn, fp)
    report = DetectionReport(verdicts=(), tn=tn, tp=tp, fn=fn, fp=fp, metrics=metrics)
    write_metrics_csv(args.out, report, _comments(sha))
    print(
        f"TN={tn} TP={tp} FN={fn} FP={fp}; accuracy {metrics.accuracy:.3f}, "
        f"recall {fmt(metrics.recall) or '-'}, precision {fmt(metrics.precision) or '-'}, "
        f"F1 {fmt(metrics.f1) or '-'}; metrics -> {args.out}"
    )
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value configuration file")
    sub.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one config key (repeatable; wins over --config)",
    )
    sub.add_argument("--seed", type=int, help="set simulate_seed and train_seed at once")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shmnovelty",
        description="Unsupervised structural novelty detection on acceleration records.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--out", help="output directory (must be empty or absent)")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = subparsers.add_parser("train", help="fit the novelty model on a dataset")
    p.add_argument("--data", help="dataset directory from `simulate`")
    p.add_argument("--model", help="output model JSON path")
    p.add_argument("--report", help="training report CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = subparsers.add_parser("detect", help="score test cases against a model")
    p.add_argument("--model", help="model JSON from `train`")
    p.add_argument("--data", help="dataset directory with test cases")
    p.add_argument("--out", help="report output directory")
    p.add_argument("--no-plot", action="store_true", help="skip the SVG scatter plot")
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = subparsers.add_parser("fit-density", help="fit one KDME density to a CSV column")
    p.add_argument("--input", required=True, help="input CSV")
    p.add_argument("--column", required=True, help="column name or 0-based index")
    p.add_argument("--out", required=True, help="output (x, density) CSV")
    p.add_argument("--trace", help="optional Bayesian-optimization trace CSV")
    _add_common(p)
    p.set_defaults(func=cmd_fit_density)

    p = subparsers.add_parser("evaluate", help="recompute metrics from a labeled verdicts CSV")
    p.add_argument("--verdicts", required=True, help="verdicts.csv from `detect`")
    p.add_argument("--out", required=True, help="output metrics CSV")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatVersionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ShmNoveltyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
