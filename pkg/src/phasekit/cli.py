"""Command-line interface: simulate, calibrate, infer, evaluate, report,
pipeline, and selftest subcommands wired over the library modules.

Exit codes: 0 success, 1 selftest assertion failure, 2 input or config error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import calibration, inference, metrics, report, simulate
from .logits import LogitSequence, load_bank, load_logits
from .selfcheck import run_selftest
from .simulate import DEFAULT_PAIR_ACCURACY, NoiseSpec, WorkflowSpec, derive_video_seed
from .workflow import NUM_PHASES, PhaseTimeline, load_timelines, save_timelines

# Keys never written to config echoes: paths vary between runs without
# affecting artifact content, and byte-identical reruns are a contract.
_PATH_KEYS = {"out", "val", "test", "base", "bank", "pred", "gt", "trace", "results", "config", "func"}

STRATEGY_LABELS = {
    "baseline": "baseline (argmax)",
    "transition": "transition-based",
    "confidence_uncalibrated": "confidence-based w/o calibration",
    "confidence_calibrated": "confidence-based w/ calibration",
}
STRATEGY_ORDER = tuple(STRATEGY_LABELS)


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def write_config_echo(directory, values: dict) -> None:
    """Echo the resolved run configuration as sorted ``key = value`` lines."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{k} = {_format_value(v)}"
        for k, v in sorted(values.items())
        if k not in _PATH_KEYS and v is not None
    ]
    (directory / "config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _echo_values(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _PATH_KEYS and v is not None}


def load_config_file(path) -> dict[str, str]:
    """Parse a plain-text config file of ``key = value`` lines."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def apply_config_file(args: argparse.Namespace, argv: list[str], parser: argparse.ArgumentParser) -> None:
    """Fill parsed args from the config file; explicit flags keep priority."""
    if not getattr(args, "config", None):
        return
    values = load_config_file(args.config)
    actions = {}
    for action in parser._actions:
        if action.dest in ("help", "func"):
            continue
        actions[action.dest] = action
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ValueError(f"unknown config key {key!r} in {args.config}")
        action = actions[dest]
        given = any(
            a == opt or a.startswith(opt + "=") for a in argv for opt in action.option_strings
        )
        if given:
            continue
        if isinstance(action, argparse.BooleanOptionalAction) or action.type is None and isinstance(action.default, bool):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            value = action.type(raw)
        else:
            value = raw
        setattr(args, dest, value)


def _pair_acc(text: str) -> tuple[float, ...]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        return tuple(parts * (NUM_PHASES - 1))
    return tuple(parts)


def _formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    unknown = set(fmts) - {"text", "json", "svg"}
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown formats: {', '.join(sorted(unknown))}")
    return fmts


def _workflow_spec(args) -> WorkflowSpec:
    dwell_mean = args.frames_mean / NUM_PHASES
    dwell_min = args.dwell_min if args.dwell_min is not None else max(1, round(dwell_mean / 4))
    return WorkflowSpec(dwell_mean=dwell_mean, dwell_min=dwell_min, monotone=args.monotone)


def _noise_spec(args, seed=None) -> NoiseSpec:
    return NoiseSpec(
        base_accuracy_target=args.base_acc,
        pairwise_accuracy_target=args.pair_acc,
        overconfidence=args.overconfidence,
        boundary_jitter=args.jitter,
        rng_seed=args.seed if seed is None else seed,
    )


def _load_dataset_dir(path) -> tuple[dict[str, PhaseTimeline], dict[str, LogitSequence], object]:
    path = Path(path)
    gts = load_timelines(path / "gt.csv")
    baselines = load_logits(path / "baseline.csv")
    bank = load_bank(path / "bank")
    return gts, baselines, bank


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    out = Path(args.out)
    workflow = _workflow_spec(args)
    simulate.generate_dataset(
        out,
        args.videos,
        workflow,
        _noise_spec(args),
        id_prefix=args.prefix,
        smoothing_window=args.attention_smooth,
    )
    echo = _echo_values(args)
    echo["resolved_dwell_mean"] = workflow.dwell_mean[0]
    echo["resolved_dwell_min"] = workflow.dwell_min[0]
    write_config_echo(out, echo)
    print(f"wrote {args.videos} simulated videos to {out}")
    return 0


# ---------------------------------------------------------------- calibrate

def _labeled_split(baselines: dict[str, LogitSequence]) -> list[LogitSequence]:
    seqs = [baselines[v] for v in sorted(baselines)]
    for seq in seqs:
        if seq.labels is None:
            raise ValueError(f"baseline logits for {seq.video_id!r} carry no labels")
    return seqs


def cmd_calibrate(args) -> int:
    out = Path(args.out)
    if out.suffix == ".json":
        out_dir, report_path = out.parent, out
    else:
        out_dir, report_path = out, out / "report.json"
    out_dir.mkdir(parents=True, exist_ok=True)

    _, val_base, val_bank = _load_dataset_dir(args.val)
    _, test_base, _ = _load_dataset_dir(args.test)
    val_seqs = _labeled_split(val_base)
    test_seqs = _labeled_split(test_base)

    cal = calibration.calibrate_report(val_seqs, test_seqs, num_bins=args.bins)
    results = report.calibration_results(cal)
    if args.include_bank:
        results.update(_bank_temperatures(val_bank))
    report.write_results_json(results, report_path)
    (out_dir / "report.txt").write_text(report.render_calibration_table(cal), encoding="utf-8")
    bins_before = calibration.reliability_bins(test_seqs, temperature=1.0, num_bins=args.bins)
    bins_after = calibration.reliability_bins(test_seqs, temperature=cal.fitted.value, num_bins=args.bins)
    report.write_reliability_csv(bins_before, out_dir / "reliability_before.csv")
    report.write_reliability_csv(bins_after, out_dir / "reliability_after.csv")
    write_config_echo(out_dir, _echo_values(args))
    print(report.render_calibration_table(cal), end="")
    return 0


def _bank_temperatures(bank) -> dict:
    """Optional per-pair fits on in-pair frames, labels mapped to {1, 2}."""
    from .workflow import all_transition_pairs

    out = {}
    for pair in all_transition_pairs():
        zs, ys = [], []
        for vid in bank.videos():
            seq = bank.get(vid, pair)
            if seq.labels is None:
                continue
            mask = (seq.labels == pair.low) | (seq.labels == pair.high)
            if mask.any():
                zs.append(seq.logits[mask])
                ys.append(np.where(seq.labels[mask] == pair.high, 2, 1))
        if not zs:
            out[f"calibration.bank.{pair.name}.temperature"] = None
            continue
        fitted = calibration.fit_temperature(np.concatenate(zs), np.concatenate(ys))
        out[f"calibration.bank.{pair.name}.temperature"] = fitted.value
    return out


# ---------------------------------------------------------------- infer

def _resolve_temperature(args) -> float:
    if args.temperature == "auto":
        if not args.val:
            raise ValueError("--temperature auto requires --val <dir> to fit on")
        _, val_base, _ = _load_dataset_dir(args.val)
        fitted = calibration.fit_temperature(_labeled_split(val_base))
        print(f"fitted temperature on validation split: {fitted.value!r}")
        return fitted.value
    try:
        return float(args.temperature)
    except ValueError:
        raise ValueError(f"--temperature must be a number or 'auto', got {args.temperature!r}") from None


def cmd_infer(args) -> int:
    bank = load_bank(args.bank)
    cfg = inference.InferenceConfig(
        buffer_size=args.buffer,
        conf_threshold=args.threshold,
        temperature=_resolve_temperature(args) if args.strategy == "confidence" else 1.0,
    )
    if args.sweep:
        cfg = replace(cfg, conf_threshold=_run_sweep(args, bank, cfg))
    timelines, traces = [], []
    if args.strategy == "transition":
        for vid in bank.videos():
            timeline, trace = inference.transition_inference(bank, vid, cfg)
            timelines.append(timeline)
            traces.append(trace)
    else:
        if not args.base:
            raise ValueError("--strategy confidence requires --base <file>")
        baselines = load_logits(args.base)
        for vid in sorted(baselines):
            timeline, trace = inference.confidence_inference(baselines[vid], bank, cfg)
            timelines.append(timeline)
            traces.append(trace)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_timelines(timelines, out)
    if args.trace:
        inference.save_traces(traces, args.trace)
    echo = _echo_values(args)
    echo["resolved_threshold"] = cfg.conf_threshold
    echo["resolved_temperature"] = cfg.temperature
    write_config_echo(out.parent, echo)
    print(f"wrote {len(timelines)} predicted timelines to {out}")
    return 0


def _run_sweep(args, bank, cfg) -> float:
    if not args.val:
        raise ValueError("--sweep requires --val <dir> with labeled data")
    gts, baselines, val_bank = _load_dataset_dir(args.val)
    best_by_vid = []
    rows_total = None
    for vid in sorted(baselines):
        best, rows = inference.sweep_threshold(baselines[vid], val_bank, gts[vid], cfg)
        best_by_vid.append(best)
        if rows_total is None:
            rows_total = [[t, a * len(gts[vid])] for t, a in rows]
        else:
            for i, (t, a) in enumerate(rows):
                rows_total[i][1] += a * len(gts[vid])
    n_frames = sum(len(g) for g in gts.values())
    table = [(t, weighted / n_frames) for t, weighted in rows_total]
    best = max(table, key=lambda row: (row[1], -row[0]))[0]
    print("threshold sweep on validation split:")
    for t, a in table:
        marker = "  <- best" if t == best else ""
        print(f"  t_conf={t:.1f}  accuracy={100 * a:.2f}%{marker}")
    return best


# ---------------------------------------------------------------- evaluate

def cmd_evaluate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    preds = load_timelines(args.pred)
    gts = load_timelines(args.gt)
    result = metrics.evaluate_predictions(preds, gts)
    results = report.eval_results(result)

    cascade_by_video = {}
    if args.trace:
        traces = inference.load_traces(args.trace)
        for vid in sorted(traces):
            if vid not in gts:
                raise ValueError(f"trace covers video {vid!r} with no ground truth")
            cascade_by_video[vid] = metrics.detect_cascades(traces[vid], gts[vid])
            results.update(report.cascade_results(cascade_by_video[vid], prefix=f"video.{vid}"))

    if "json" in args.format:
        report.write_results_json(results, out / "results.json")
    if "text" in args.format:
        text = report.render_table(
            ["Metric", "Value"],
            [
                ["accuracy (pooled %)", report.pct(result.overall_accuracy)],
                ["accuracy (per-video mean %)", report.pct(result.video_mean_accuracy)],
            ],
            title="Evaluation",
        )
        text += "\n" + report.render_pair_table(result.overall_accuracy, result.restricted_pair_accuracy)
        for vid, cas in cascade_by_video.items():
            text += f"\ncascades for {vid}:\n" + report.render_cascades(cas)
        (out / "evaluation.txt").write_text(text, encoding="utf-8")
    if "svg" in args.format:
        for vid in sorted(preds):
            report.write_ribbon_svg(gts[vid], preds[vid], out / f"ribbon_{vid}.svg")
    write_config_echo(out, _echo_values(args))
    print(f"accuracy: pooled {report.pct(result.overall_accuracy)}%, "
          f"per-video mean {report.pct(result.video_mean_accuracy)}%")
    return 0


# ---------------------------------------------------------------- report

def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = report.load_results_json(args.results)
    text = render_report_text(results)
    (out / "report.txt").write_text(text, encoding="utf-8")
    if "svg" in args.format:
        if not (args.pred and args.gt):
            raise ValueError("--format svg requires --pred and --gt timelines")
        preds = load_timelines(args.pred)
        gts = load_timelines(args.gt)
        for vid in sorted(preds):
            report.write_ribbon_svg(gts[vid], preds[vid], out / f"ribbon_{vid}.svg")
    write_config_echo(out, _echo_values(args))
    print(text, end="")
    return 0


def render_report_text(results: dict) -> str:
    """Re-render the text tables from a flat results dict."""
    from .workflow import TransitionPair

    blocks = []
    strategies = sorted(
        {k.split(".")[1] for k in results if k.startswith("strategy.") and k.endswith(".accuracy.pooled")},
        key=lambda s: (STRATEGY_ORDER.index(s) if s in STRATEGY_ORDER else len(STRATEGY_ORDER), s),
    )
    if strategies:
        rows = [
            (
                STRATEGY_LABELS.get(s, s),
                results[f"strategy.{s}.accuracy.pooled"],
                results[f"strategy.{s}.accuracy.video_mean"],
            )
            for s in strategies
        ]
        blocks.append(report.render_strategy_table(rows))
    pair_keys = {k for k in results if k.startswith("pair.trans_")}
    if pair_keys:
        pair_accs = {}
        for key in pair_keys:
            pair_accs[TransitionPair.from_name(key.split(".")[1])] = results[key]
        baseline_acc = results.get("strategy.baseline.accuracy.pooled", results.get("accuracy.pooled"))
        blocks.append(report.render_pair_table(baseline_acc, pair_accs))
    if "calibration.nll_before" in results:
        cal = calibration.CalibrationReport(
            nll_before=results["calibration.nll_before"],
            nll_after=results["calibration.nll_after"],
            ece_before=results["calibration.ece_before"],
            ece_after=results["calibration.ece_after"],
            fitted=calibration.Temperature(results["calibration.temperature"]),
        )
        blocks.append(report.render_calibration_table(cal))
    if not blocks:
        blocks.append("no renderable result families found\n")
    return "\n".join(blocks)


# ---------------------------------------------------------------- pipeline

@dataclass(frozen=True)
class RunConfig:
    """Fully resolved end-to-end pipeline configuration."""

    out_dir: Path
    seed: int = 42
    val_videos: int = 2
    test_videos: int = 3
    frames_mean: float = 1200.0
    dwell_min: int | None = None
    monotone: bool = True
    base_acc: float = 0.85
    pair_acc: tuple[float, ...] = DEFAULT_PAIR_ACCURACY
    overconfidence: float = 2.5
    jitter: int = 10
    buffer: int = 100
    threshold: float = 0.5
    bins: int = 15
    attention_smooth: int = 0
    format: tuple[str, ...] = ("text", "json", "svg")

    def echo_values(self) -> dict:
        values = {k: v for k, v in vars(self).items() if k != "out_dir"}
        return values


def run_pipeline(cfg: RunConfig) -> int:
    """simulate -> calibrate -> infer (both strategies) -> evaluate -> report.

    Writes every artifact under cfg.out_dir; identical config and seed yield
    byte-identical trees. Raises StageError naming the failing stage.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    dwell_mean = cfg.frames_mean / NUM_PHASES
    dwell_min = cfg.dwell_min if cfg.dwell_min is not None else max(1, round(dwell_mean / 4))
    workflow = WorkflowSpec(dwell_mean=dwell_mean, dwell_min=dwell_min, monotone=cfg.monotone)
    echo = cfg.echo_values()
    echo["resolved_dwell_mean"] = workflow.dwell_mean[0]
    echo["resolved_dwell_min"] = workflow.dwell_min[0]
    write_config_echo(out, echo)

    def noise(seed):
        return NoiseSpec(
            base_accuracy_target=cfg.base_acc,
            pairwise_accuracy_target=cfg.pair_acc,
            overconfidence=cfg.overconfidence,
            boundary_jitter=cfg.jitter,
            rng_seed=seed,
        )

    try:
        val_dir, test_dir = out / "val", out / "test"
        simulate.generate_dataset(
            val_dir, cfg.val_videos, workflow, noise(derive_video_seed(cfg.seed, 101)),
            id_prefix="val", smoothing_window=cfg.attention_smooth,
        )
        write_config_echo(val_dir, echo)
        simulate.generate_dataset(
            test_dir, cfg.test_videos, workflow, noise(derive_video_seed(cfg.seed, 202)),
            id_prefix="test", smoothing_window=cfg.attention_smooth,
        )
        write_config_echo(test_dir, echo)
    except Exception as exc:
        raise StageError("simulate", exc) from exc

    try:
        gts_val, base_val, _ = _load_dataset_dir(val_dir)
        gts, base_test, bank = _load_dataset_dir(test_dir)
        cal_dir = out / "calibration"
        cal_dir.mkdir(exist_ok=True)
        val_seqs = _labeled_split(base_val)
        test_seqs = _labeled_split(base_test)
        cal = calibration.calibrate_report(val_seqs, test_seqs, num_bins=cfg.bins)
        report.write_results_json(report.calibration_results(cal), cal_dir / "report.json")
        (cal_dir / "report.txt").write_text(report.render_calibration_table(cal), encoding="utf-8")
        report.write_reliability_csv(
            calibration.reliability_bins(test_seqs, temperature=1.0, num_bins=cfg.bins),
            cal_dir / "reliability_before.csv",
        )
        report.write_reliability_csv(
            calibration.reliability_bins(test_seqs, temperature=cal.fitted.value, num_bins=cfg.bins),
            cal_dir / "reliability_after.csv",
        )
        write_config_echo(cal_dir, echo)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("calibrate", exc) from exc

    try:
        inf_dir = out / "inference"
        inf_dir.mkdir(exist_ok=True)
        strategies: dict[str, dict[str, PhaseTimeline]] = {name: {} for name in STRATEGY_ORDER}
        traces: dict[str, dict[str, inference.InferenceTrace]] = {
            "transition": {}, "confidence_uncalibrated": {}, "confidence_calibrated": {}
        }
        cal_cfg = inference.InferenceConfig(cfg.buffer, cfg.threshold, cal.fitted.value)
        uncal_cfg = inference.InferenceConfig(cfg.buffer, cfg.threshold, 1.0)
        for vid in sorted(base_test):
            strategies["baseline"][vid] = inference.baseline_argmax(base_test[vid])
            timeline, trace = inference.transition_inference(bank, vid, cal_cfg)
            strategies["transition"][vid] = timeline
            traces["transition"][vid] = trace
            timeline, trace = inference.confidence_inference(base_test[vid], bank, uncal_cfg)
            strategies["confidence_uncalibrated"][vid] = timeline
            traces["confidence_uncalibrated"][vid] = trace
            timeline, trace = inference.confidence_inference(base_test[vid], bank, cal_cfg)
            strategies["confidence_calibrated"][vid] = timeline
            traces["confidence_calibrated"][vid] = trace
        for name, by_vid in strategies.items():
            save_timelines([by_vid[v] for v in sorted(by_vid)], inf_dir / f"{name}.csv")
        for name, by_vid in traces.items():
            inference.save_traces([by_vid[v] for v in sorted(by_vid)], inf_dir / f"{name}_trace.csv")
        write_config_echo(inf_dir, echo)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("infer", exc) from exc

    try:
        eval_dir = out / "evaluation"
        eval_dir.mkdir(exist_ok=True)
        results = dict(report.calibration_results(cal))
        table_rows = []
        for name in STRATEGY_ORDER:
            ev = metrics.evaluate_predictions(strategies[name], gts)
            results.update(report.eval_results(ev, prefix=f"strategy.{name}"))
            table_rows.append((STRATEGY_LABELS[name], ev.overall_accuracy, ev.video_mean_accuracy))
        for name, by_vid in traces.items():
            count = frames = 0
            for vid, trace in by_vid.items():
                cas = metrics.detect_cascades(trace, gts[vid])
                count += len(cas.runs)
                frames += cas.total_frames()
            results[f"strategy.{name}.cascade.count"] = count
            results[f"strategy.{name}.cascade.frames"] = frames
        for pair, acc in metrics.bank_restricted_accuracies(bank, gts).items():
            results[f"pair.{pair.name}.accuracy"] = acc
        if "json" in cfg.format:
            report.write_results_json(results, eval_dir / "results.json")
        if "text" in cfg.format:
            (eval_dir / "strategies.txt").write_text(
                report.render_strategy_table(table_rows), encoding="utf-8"
            )
            (eval_dir / "report.txt").write_text(render_report_text(results), encoding="utf-8")
        if "svg" in cfg.format:
            for name in ("transition", "confidence_calibrated"):
                for vid in sorted(strategies[name]):
                    report.write_ribbon_svg(
                        gts[vid], strategies[name][vid], eval_dir / f"ribbon_{name}_{vid}.svg"
                    )
        write_config_echo(eval_dir, echo)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("evaluate", exc) from exc

    print(render_report_text(results), end="")
    return 0


def cmd_pipeline(args) -> int:
    cfg = RunConfig(
        out_dir=Path(args.out),
        seed=args.seed,
        val_videos=args.val_videos,
        test_videos=args.test_videos,
        frames_mean=args.frames_mean,
        dwell_min=args.dwell_min,
        monotone=args.monotone,
        base_acc=args.base_acc,
        pair_acc=args.pair_acc,
        overconfidence=args.overconfidence,
        jitter=args.jitter,
        buffer=args.buffer,
        threshold=args.threshold,
        bins=args.bins,
        attention_smooth=args.attention_smooth,
        format=args.format,
    )
    return run_pipeline(cfg)


def cmd_selftest(args) -> int:
    return 0 if run_selftest(verbose=True) else 1


# ---------------------------------------------------------------- parser

def _add_simulation_flags(p: argparse.ArgumentParser, frames_default: float) -> None:
    p.add_argument("--frames-mean", type=float, default=frames_default,
                   help="mean video length in frames (split evenly over the 7 phases)")
    p.add_argument("--dwell-min", type=int, default=None,
                   help="minimum frames per phase (default: mean dwell / 4)")
    p.add_argument("--monotone", action=argparse.BooleanOptionalAction, default=True,
                   help="phases 1..7 strictly in order")
    p.add_argument("--base-acc", type=float, default=0.85, help="baseline argmax accuracy target")
    p.add_argument("--pair-acc", type=_pair_acc, default=DEFAULT_PAIR_ACCURACY,
                   help="six comma-separated per-pair accuracy targets")
    p.add_argument("--overconfidence", type=float, default=2.5,
                   help="true miscalibration factor multiplied into the logits")
    p.add_argument("--jitter", type=int, default=10,
                   help="frames around each phase change with concentrated errors")
    p.add_argument("--attention-smooth", type=int, default=0,
                   help="smooth logits through the attention kernel over this window (0 = off)")
    p.add_argument("--seed", type=int, default=42)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    # abbreviation is off so config-file precedence can detect explicit flags
    parser = argparse.ArgumentParser(
        prog="phasekit",
        description="Surgical phase inference toolkit: calibrated-confidence switching "
                    "between a 7-class baseline and six 2-class transition models.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    p = sub.add_parser("simulate", allow_abbrev=False, help="generate a synthetic dataset directory")
    p.add_argument("--videos", type=int, default=8)
    p.add_argument("--prefix", default="video", help="video id prefix")
    _add_simulation_flags(p, frames_default=1800.0)
    p.add_argument("--out", required=True, help="dataset directory to write")
    p.add_argument("--config", help="plain-text key = value config file")
    p.set_defaults(func=cmd_simulate)
    parsers["simulate"] = p

    p = sub.add_parser("calibrate", allow_abbrev=False, help="fit temperature on validation, report on test")
    p.add_argument("--val", required=True, help="validation dataset directory")
    p.add_argument("--test", required=True, help="test dataset directory")
    p.add_argument("--bins", type=int, default=15, help="ECE bin count")
    p.add_argument("--include-bank", action="store_true",
                   help="also fit per-pair temperatures for the transition bank")
    p.add_argument("--out", required=True, help="output directory or report .json path")
    p.add_argument("--config", help="plain-text key = value config file")
    p.set_defaults(func=cmd_calibrate)
    parsers["calibrate"] = p

    p = sub.add_parser("infer", allow_abbrev=False, help="run an inference strategy over logit files")
    p.add_argument("--strategy", choices=("transition", "confidence"), required=True)
    p.add_argument("--base", help="baseline K=7 logit file (confidence strategy)")
    p.add_argument("--bank", required=True, help="transition bank directory")
    p.add_argument("--buffer", type=int, default=100, help="majority buffer size")
    p.add_argument("--threshold", type=float, default=0.5, help="confidence threshold for accepting the baseline")
    p.add_argument("--temperature", default="1.0", help="softmax temperature, or 'auto' to fit on --val")
    p.add_argument("--val", help="labeled validation dataset directory (for auto/sweep)")
    p.add_argument("--sweep", action="store_true",
                   help="pick the threshold by accuracy over a 0.1..0.9 grid on --val")
    p.add_argument("--trace", help="write the per-frame decision trace here")
    p.add_argument("--out", required=True, help="predicted timeline file")
    p.add_argument("--config", help="plain-text key = value config file")
    p.set_defaults(func=cmd_infer)
    parsers["infer"] = p

    p = sub.add_parser("evaluate", allow_abbrev=False, help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="predicted timeline file")
    p.add_argument("--gt", required=True, help="ground-truth timeline file")
    p.add_argument("--trace", help="decision trace for cascade detection")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", type=_formats, default=("text", "json", "svg"))
    p.add_argument("--config", help="plain-text key = value config file")
    p.set_defaults(func=cmd_evaluate)
    parsers["evaluate"] = p

    p = sub.add_parser("report", allow_abbrev=False, help="re-render text tables from a results JSON")
    p.add_argument("--results", required=True, help="results.json from evaluate or calibrate")
    p.add_argument("--pred", help="predicted timelines (needed for svg)")
    p.add_argument("--gt", help="ground-truth timelines (needed for svg)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", type=_formats, default=("text",))
    p.add_argument("--config", help="plain-text key = value config file")
    p.set_defaults(func=cmd_report)
    parsers["report"] = p

    p = sub.add_parser("pipeline", allow_abbrev=False, help="run the full synthetic pipeline end to end")
    p.add_argument("--val-videos", type=int, default=2)
    p.add_argument("--test-videos", type=int, default=3)
    _add_simulation_flags(p, frames_default=1200.0)
    p.add_argument("--buffer", type=int, default=100)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=15)
    p.add_argument("--format", type=_formats, default=("text", "json", "svg"))
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--config", help="plain-text key = value config file")
    p.set_defaults(func=cmd_pipeline)
    parsers["pipeline"] = p

    p = sub.add_parser("selftest", help="run built-in numeric verification")
    p.set_defaults(func=cmd_selftest)
    parsers["selftest"] = p

    return parser, parsers


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, parsers = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            apply_config_file(args, argv, parsers[args.command])
        return args.func(args)
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
