"""Command-line pipeline: synth, train, calibrate, detect, eval, spectral.

Every subcommand takes --config pointing at one JSON file; omitted blocks
fall back to defaults.  Reports are JSON, series are CSV, and the report
paths also render matplotlib figures next to the delimited output unless
figures are disabled.  Exit codes: 0 success, 2 config error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import PipelineConfig, config_echo, load_config
from .data import (
    RawSeries,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    load_labels,
    load_schema,
    make_windows,
    save_csv,
    save_labels,
    save_schema,
    synth_generate,
)
from .detect.proactive import proactive_detect
from .detect.threshold import fit_detector, load_detector, save_detector
from .errors import DataError, ProactError
from .forecaster.model import model_from_doc, model_to_doc
from .forecaster.training import train as train_forecaster
from .metrics import compute_metrics
from .spectral import forecastability_report

FORMAT_VERSION = 1


def _write_json(doc: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _read_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _out_dir(config: PipelineConfig) -> Path:
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_series(config: PipelineConfig, split: str, with_labels: bool = False) -> RawSeries:
    schema = load_schema(config.data_path("schema"))
    labels_path = config.data_path("labels")
    use_labels = with_labels and labels_path.exists()
    return load_csv(config.data_path(split), schema, labels_path if use_labels else None)


def _figures_enabled(config: PipelineConfig, args: argparse.Namespace) -> bool:
    return config.figures and not getattr(args, "no_figures", False)


def cmd_synth(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = _out_dir(config)
    seed = args.seed if args.seed is not None else config.synth_seed
    train_series, test_series = synth_generate(config.synth, seed)

    save_csv(train_series, out / "train.csv")
    save_csv(test_series, out / "test.csv")
    save_labels(test_series.labels, out / "labels.csv")
    save_schema(train_series.schema, out / "schema.json")
    ratio = float(test_series.labels.mean())
    print(f"wrote train.csv ({train_series.timesteps} rows), test.csv ({test_series.timesteps} rows)")
    print(f"wrote labels.csv (anomaly ratio {ratio:.4f}), schema.json -> {out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = _out_dir(config)
    train_series = _load_series(config, "train")

    normalizer = fit_normalizer(train_series)
    windows = make_windows(apply_normalizer(normalizer, train_series), config.window, config.horizon)
    started = time.perf_counter()
    result = train_forecaster(windows, config.train)
    elapsed = time.perf_counter() - started

    bundle = {
        "format_version": FORMAT_VERSION,
        "kind": "forecast_bundle",
        "model": model_to_doc(result.model),
        "normalizer": {
            "col_min": normalizer.col_min.tolist(),
            "col_max": normalizer.col_max.tolist(),
        },
    }
    model_path = out / "model.json"
    _write_json(bundle, model_path)

    trace_path = out / "loss_trace.csv"
    with open(trace_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "loss_c", "loss_d", "total"])
        for i, (lc, ld, lt) in enumerate(result.loss_trace):
            writer.writerow([i, repr(lc), repr(ld), repr(lt)])

    written = [model_path.name, trace_path.name]
    if _figures_enabled(config, args) and result.loss_trace:
        from .plots import render_loss_curve

        written.append(render_loss_curve(result.loss_trace, out / "loss_curve.png").name)
    if result.loss_trace:
        lc, ld, _ = result.loss_trace[-1]
    else:
        lc, ld = float("nan"), float("nan")
    print(f"final loss_C={lc:.6f} loss_D={ld:.6f} ({len(result.loss_trace)} iterations, {elapsed:.1f}s)")
    print(f"wrote {', '.join(written)} -> {out}")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = _out_dir(config)
    train_series = _load_series(config, "train")

    det = config.detector
    detector = fit_detector(
        det.kind,
        train_series.values,
        seed=det.seed,
        components=det.components,
        max_iter=det.max_iter,
        tol=det.tol,
        epochs=det.epochs,
        learning_rate=det.learning_rate,
    )
    path = out / "detector.json"
    save_detector(detector, path)
    print(
        f"calibrated {det.kind}: tau={detector.threshold.value:.6f} "
        f"({detector.threshold.orientation})"
    )
    print(f"wrote {path.name} -> {out}")
    return 0


def _load_bundle(path: Path):
    doc = _read_json(path)
    if doc.get("kind") != "forecast_bundle" or doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path} is not a forecast bundle")
    from .data import Normalizer

    model = model_from_doc(doc["model"])
    norm = Normalizer(
        np.asarray(doc["normalizer"]["col_min"], dtype=np.float64),
        np.asarray(doc["normalizer"]["col_max"], dtype=np.float64),
    )
    return model, norm


def cmd_detect(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = _out_dir(config)
    test_series = _load_series(config, "test", with_labels=True)
    model, normalizer = _load_bundle(Path(args.model) if args.model else out / "model.json")
    detector = load_detector(Path(args.detector) if args.detector else out / "detector.json")

    started = time.perf_counter()
    result = proactive_detect(model, normalizer, detector, test_series)
    elapsed = time.perf_counter() - started

    scores_path = out / "scores.csv"
    with open(scores_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "score", "flag"])
        for i in range(result.scores.shape[0]):
            writer.writerow([result.first_timestep + i, repr(float(result.scores[i])), int(result.flags[i])])
    save_labels(result.flags.astype(np.int64), out / "flags.csv")

    written = [scores_path.name, "flags.csv"]
    latencies = None
    if test_series.labels is not None:
        save_labels(test_series.labels[result.first_timestep :], out / "labels_aligned.csv")
        written.append("labels_aligned.csv")
        latencies = [
            {
                "segment_start": e.segment_start,
                "segment_end": e.segment_end,
                "first_flag": e.first_flag,
                "latency": e.latency,
            }
            for e in result.latencies
        ]

    report = {
        "format_version": FORMAT_VERSION,
        "kind": "run_report",
        "config": config_echo(config),
        "data": {
            "timesteps": test_series.timesteps,
            "continuous": test_series.schema.c,
            "discrete": test_series.schema.d,
            "anomaly_ratio": (
                float(test_series.labels.mean()) if test_series.labels is not None else None
            ),
        },
        "threshold": {
            "value": detector.threshold.value,
            "orientation": detector.threshold.orientation,
        },
        "first_timestep": result.first_timestep,
        "scored_timesteps": int(result.scores.shape[0]),
        "flagged": int(result.flags.sum()),
        "latencies": latencies,
        "timings": {"detect_seconds": elapsed},
    }
    _write_json(report, out / "run_report.json")
    written.append("run_report.json")

    if _figures_enabled(config, args):
        from .plots import render_score_series

        fig_path = render_score_series(
            result.scores,
            result.flags,
            detector.threshold.value,
            result.first_timestep,
            out / "scores.png",
            labels=test_series.labels,
        )
        written.append(fig_path.name)

    print(f"flagged {int(result.flags.sum())} of {result.scores.shape[0]} timesteps")
    if latencies is not None:
        hits = [e for e in latencies if e["latency"] is not None]
        print(f"segments detected: {len(hits)}/{len(latencies)}")
        for e in hits:
            print(f"  segment [{e['segment_start']},{e['segment_end']}): latency {e['latency']}")
    print(f"wrote {', '.join(written)} -> {out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = _out_dir(config)
    pred_path = Path(args.pred) if args.pred else out / "flags.csv"
    labels_path = Path(args.labels) if args.labels else out / "labels_aligned.csv"
    pred = load_labels(pred_path)
    truth = load_labels(labels_path)
    if pred.shape != truth.shape:
        raise DataError(f"length mismatch: {pred_path} has {pred.shape[0]}, {labels_path} has {truth.shape[0]}")

    report = compute_metrics(pred, truth)
    doc = {"format_version": FORMAT_VERSION, "kind": "metric_report", **report.to_dict()}
    _write_json(doc, out / "metrics.json")
    print(
        f"f1_at_k={report.f1_at_k:.4f} f1_composite={report.f1_composite:.4f} "
        f"f1_range={report.f1_range:.4f} point_f1={report.point_f1:.4f}"
    )
    print(f"wrote metrics.json -> {out}")
    return 0


def cmd_spectral(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = _out_dir(config)
    train_series = _load_series(config, "train")
    test_series = _load_series(config, "test", with_labels=True)
    if test_series.labels is None:
        raise DataError("spectral analysis requires a labels file")

    report = forecastability_report(
        train_series,
        test_series,
        segment_length=config.spectral.segment_length,
        eps=config.spectral.epsilon,
    )
    doc = {"format_version": FORMAT_VERSION, "kind": "hull_report", **report.to_dict()}
    _write_json(doc, out / "hull_report.json")

    half = config.spectral.segment_length // 2 + 1
    samples_path = out / "spectral_samples.csv"
    with open(samples_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "segment_end_index", "inside"] + [f"a{i + 1}" for i in range(half)])
        for feat in report.features:
            for s in feat.samples:
                writer.writerow([feat.feature, s.end_index, int(s.inside)] + [repr(v) for v in s.magnitudes])

    written = ["hull_report.json", samples_path.name]
    if _figures_enabled(config, args):
        from .plots import render_hull_scatter
        from .spectral import extract_segments, spectral_sample

        train_mags = {}
        cont = train_series.continuous()
        for j, name in enumerate(train_series.schema.continuous_cols):
            segs = extract_segments(cont[:, j], None, "train", config.spectral.segment_length)
            train_mags[name] = np.array(
                [spectral_sample(s, config.spectral.segment_length).magnitudes for s in segs]
            )
        written.append(render_hull_scatter(report, train_mags, out / "hull.png").name)

    for feat in report.features:
        print(
            f"{feat.feature}: superset_equal={feat.superset_equal} "
            f"outside {feat.outside_count}/{feat.anomaly_samples} ({feat.outside_fraction:.1%})"
        )
    print(f"pooled outside fraction: {report.pooled_outside_fraction:.4f}")
    print(f"wrote {', '.join(written)} -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proact",
        description="Proactive anomaly detection: forecast first, then threshold the forecast score.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate the synthetic dataset")
    p_synth.add_argument("--config", default=None, help="pipeline config JSON")
    p_synth.add_argument("--seed", type=int, default=None, help="override the generator seed")
    p_synth.set_defaults(func=cmd_synth)

    p_train = sub.add_parser("train", help="train the forecaster")
    p_train.add_argument("--config", default=None)
    p_train.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_train.set_defaults(func=cmd_train)

    p_cal = sub.add_parser("calibrate", help="fit a detector and its threshold on training data")
    p_cal.add_argument("--config", default=None)
    p_cal.set_defaults(func=cmd_calibrate)

    p_det = sub.add_parser("detect", help="score forecasts of the test series")
    p_det.add_argument("--config", default=None)
    p_det.add_argument("--model", default=None, help="forecast bundle path (default: <out>/model.json)")
    p_det.add_argument("--detector", default=None, help="detector path (default: <out>/detector.json)")
    p_det.add_argument("--no-figures", action="store_true")
    p_det.set_defaults(func=cmd_detect)

    p_eval = sub.add_parser("eval", help="compute metrics from flag and label columns")
    p_eval.add_argument("--config", default=None)
    p_eval.add_argument("--pred", default=None, help="0/1 prediction column (default: <out>/flags.csv)")
    p_eval.add_argument("--labels", default=None, help="0/1 truth column (default: <out>/labels_aligned.csv)")
    p_eval.set_defaults(func=cmd_eval)

    p_spec = sub.add_parser("spectral", help="forecastability analysis of anomaly segments")
    p_spec.add_argument("--config", default=None)
    p_spec.add_argument("--no-figures", action="store_true")
    p_spec.set_defaults(func=cmd_spectral)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
