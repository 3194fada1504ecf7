"""Command-line front end.

Subcommands: ``synth``, ``analyze``, ``features``, ``train``, ``evaluate``,
``report``, ``plot``.  Every command writes a ``manifest.json`` next to its
outputs recording the config snapshot, input digests, seed and output
digests.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .activity import RatioReport, analyze_session, ratio_table
from .config import CONFIG_ENV_VAR, deep_merge, dump_json, load_config
from .errors import InvalidSession, SameSessionSplit, SemgError
from .features import extract_session
from .session_io import (
    ANNOTATION_FILE,
    RECORDING_FILE,
    Label,
    Task,
    file_digest,
    read_session,
    validate_session,
    write_session,
)
from .signal_core import PROFILES, envelope_pipeline
from .synth import SynthScenario, generate, preset_scenarios

log = logging.getLogger("semgkit")


class UsageError(Exception):
    pass


def _fail(exc: Exception, code: int) -> int:
    diag = exc.diagnostic() if isinstance(exc, SemgError) else {"error": type(exc).__name__, "message": str(exc)}
    print("error: " + json.dumps(diag, sort_keys=True), file=sys.stderr)
    return code


def _config(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = deep_merge(cfg, {"seed": args.seed})
    return cfg


def _write_manifest(out: Path, cfg: dict, inputs: Sequence[Path], outputs: Sequence[Path], seed, command: str):
    dump_json(
        {
            "command": command,
            "tool_version": __version__,
            "seed": seed,
            "config": cfg,
            "inputs": {str(p): file_digest(p) for p in inputs},
            "outputs": {str(p.relative_to(out)): file_digest(p) for p in outputs},
        },
        out / "manifest.json",
    )


def _session_inputs(d: Path) -> list[Path]:
    return [p for p in (d / RECORDING_FILE, d / ANNOTATION_FILE) if p.exists()]


def _load_session(d: Path, args):
    if not (d / RECORDING_FILE).exists():
        raise UsageError(f"{d} is not a session directory (no {RECORDING_FILE})")
    session = read_session(d, args.profile)
    problems = validate_session(session)
    if problems:
        raise InvalidSession(problems)
    return session


# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    presets = preset_scenarios()
    src = args.scenario
    if src in presets:
        scenario = presets[src]
    elif src.endswith(".json") and Path(src).exists():
        scenario = SynthScenario.from_dict(json.loads(Path(src).read_text(encoding="utf-8")))
    else:
        raise UsageError(f"unknown scenario {src!r}; presets: {', '.join(sorted(presets))}")
    if args.seed is not None:
        scenario = scenario.replace(seed=args.seed)
    if args.profile:
        scenario = retarget(scenario, args.profile)
    out = Path(args.out)
    session, truth = generate(scenario)
    paths = write_session(session, out)
    dump_json(truth.to_dict(), out / "ground_truth.json")
    dump_json(scenario.to_dict(), out / "scenario.json")
    outputs = [*paths.values(), out / "ground_truth.json", out / "scenario.json"]
    _write_manifest(out, {"scenario": scenario.to_dict()}, [], outputs, scenario.seed, "synth")
    print(f"wrote {scenario.name} (seed {scenario.seed}) to {out}")
    return 0


def retarget(scenario: SynthScenario, profile_name: str) -> SynthScenario:
    """Same scenario on another device; channel gains repeat cyclically."""
    prof = PROFILES[profile_name]
    n = prof.channel_count
    gains = {lab: tuple(g[i % len(g)] for i in range(n)) for lab, g in scenario.gains.items()}
    return scenario.replace(profile=prof, gains=gains)


def cmd_analyze(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports, inputs = [], []
    for d in map(Path, args.sessions):
        session = _load_session(d, args)
        reports.append(analyze_session(session, cfg))
        inputs += _session_inputs(d)
    csv_text, text = ratio_table(reports)
    outputs = [out / "ratios.csv", out / "ratios.txt", out / "ratios.json"]
    outputs[0].write_text(csv_text, encoding="utf-8")
    outputs[1].write_text(text, encoding="utf-8")
    dump_json([r.to_dict() for r in reports], outputs[2])
    _write_manifest(out, cfg, inputs, outputs, cfg["seed"], "analyze")
    print(text, end="")
    return 0


def cmd_features(args) -> int:
    cfg = _config(args)
    d, out = Path(args.session), Path(args.out)
    session = _load_session(d, args)
    fm = extract_session(session, cfg, source=file_digest(d / RECORDING_FILE))
    out.mkdir(parents=True, exist_ok=True)
    fm.to_csv(out / "features.csv")
    _write_manifest(out, cfg, _session_inputs(d), [out / "features.csv"], cfg["seed"], "features")
    print(f"{len(fm)} windows x {len(fm.schema)} features -> {out / 'features.csv'}")
    return 0


def _session_features(d: Path, args, cfg):
    session = _load_session(d, args)
    return session, extract_session(session, cfg, source=file_digest(d / RECORDING_FILE))


def _model_kinds(name: str) -> list[str]:
    return ["lda", "rf", "mlp"] if name == "all" else [name]


def cmd_train(args) -> int:
    from .models import apply_class_mode, fit_model

    cfg = _config(args)
    d, out = Path(args.session), Path(args.out)
    _, fm = _session_features(d, args, cfg)
    fm = apply_class_mode(fm, cfg["models"]["class_mode"])
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for kind in _model_kinds(args.model):
        model = fit_model(kind, fm, cfg, cfg["seed"])
        path = out / f"model_{kind}.json"
        model.save(path)
        outputs.append(path)
        print(f"trained {kind} on {len(fm)} windows -> {path}")
    _write_manifest(out, cfg, _session_inputs(d), outputs, cfg["seed"], "train")
    return 0


def _same_session(a: Path, b: Path) -> bool:
    if a.resolve() == b.resolve():
        return True
    return file_digest(a / RECORDING_FILE) == file_digest(b / RECORDING_FILE)


def cmd_evaluate(args) -> int:
    from .models import TrainedModel, accuracy_table, apply_class_mode, evaluate, train_and_evaluate

    cfg = _config(args)
    train_dir, test_dir, out = Path(args.train), Path(args.test), Path(args.out)
    if _same_session(train_dir, test_dir):
        raise SameSessionSplit(f"train and test sessions are the same recording ({train_dir}, {test_dir})")
    train_session, train_fm = _session_features(train_dir, args, cfg)
    _, test_fm = _session_features(test_dir, args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    device = train_session.recording.profile.name
    subject = args.subject or train_session.subject_id
    results, evals, outputs = {}, {}, []
    if args.model_file:
        model = TrainedModel.load(args.model_file)
        report = evaluate(model, apply_class_mode(test_fm, cfg["models"]["class_mode"]))
        runs = [(model.kind.value, model, report)]
    else:
        runs = []
        for kind in _model_kinds(args.model):
            model, report = train_and_evaluate(train_fm, test_fm, kind, cfg, cfg["seed"])
            path = out / f"model_{kind}.json"
            model.save(path)
            outputs.append(path)
            runs.append((kind, model, report))
    for kind, _, report in runs:
        results[(subject, device, kind)] = report.accuracy
        evals[kind] = report.to_dict()
    dump_json({"subject_id": subject, "device": device, "results": evals}, out / "evaluation.json")
    csv_text, text = accuracy_table(results, devices=(device,))
    (out / "accuracy.csv").write_text(csv_text, encoding="utf-8")
    (out / "accuracy.txt").write_text(text, encoding="utf-8")
    outputs += [out / "evaluation.json", out / "accuracy.csv", out / "accuracy.txt"]
    _write_manifest(out, cfg, _session_inputs(train_dir) + _session_inputs(test_dir), outputs,
                    cfg["seed"], "evaluate")
    print(text, end="")
    return 0


def cmd_report(args) -> int:
    from .models import accuracy_table

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ratio_reports, acc = [], {}
    inputs = []
    for root in map(Path, args.runs):
        for p in sorted(root.rglob("ratios.json")):
            inputs.append(p)
            for d in json.loads(p.read_text(encoding="utf-8")):
                ratio_reports.append(RatioReport(
                    d["subject_id"], Task(d["task"]), {Label(k): v for k, v in d["aggregated"].items()},
                    {(Label(e["condition"]), e["channel"]): e["ratio"] for e in d["per_channel"]}, d["method"]))
        for p in sorted(root.rglob("evaluation.json")):
            inputs.append(p)
            d = json.loads(p.read_text(encoding="utf-8"))
            for kind, r in d["results"].items():
                acc[(d["subject_id"], d["device"], kind)] = r["accuracy"]
    if not ratio_reports and not acc:
        raise UsageError("no ratios.json or evaluation.json found under " + ", ".join(args.runs))
    outputs = []
    if ratio_reports:
        csv_text, text = ratio_table(ratio_reports)
        (out / "table_ratios.csv").write_text(csv_text, encoding="utf-8")
        (out / "table_ratios.txt").write_text(text, encoding="utf-8")
        outputs += [out / "table_ratios.csv", out / "table_ratios.txt"]
        print(text, end="")
    if acc:
        csv_text, text = accuracy_table(acc)
        (out / "table_accuracy.csv").write_text(csv_text, encoding="utf-8")
        (out / "table_accuracy.txt").write_text(text, encoding="utf-8")
        outputs += [out / "table_accuracy.csv", out / "table_accuracy.txt"]
        print(text, end="")
    _write_manifest(out, {}, inputs, outputs, None, "report")
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_envelopes

    cfg = _config(args)
    d = Path(args.session)
    session = _load_session(d, args)
    if session.recording.n_samples == 0:
        raise InvalidSession(["recording is empty"])
    env = envelope_pipeline(session.recording, cfg["filters"])
    out = Path(args.out)
    svg = out if out.suffix == ".svg" else out / "envelope.svg"
    svg.parent.mkdir(parents=True, exist_ok=True)
    csv_path = svg.with_suffix(".csv")
    plot_envelopes(env, session, svg, csv_path)
    _write_manifest(svg.parent, cfg, _session_inputs(d), [svg, csv_path], cfg["seed"], "plot")
    print(f"wrote {svg} and {csv_path}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config overlay (default: ${CONFIG_ENV_VAR} or built-in defaults)")
    common.add_argument("--seed", type=int, help="override the seed")
    common.add_argument("--out", required=True, help="output directory (plot: .svg path or directory)")
    common.add_argument("--profile", choices=sorted(PROFILES), help="device profile to assume for inputs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="semgkit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"semgkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic session")
    s.add_argument("--scenario", required=True, help="preset name or scenario .json file")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("analyze", parents=[common], help="rest/active amplitude ratios")
    s.add_argument("sessions", nargs="+")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("features", parents=[common], help="windowed feature matrix")
    s.add_argument("session")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("train", parents=[common], help="fit a classifier on one session")
    s.add_argument("session")
    s.add_argument("--model", choices=["lda", "rf", "mlp", "all"], default="all")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="fit on one session, score on another")
    s.add_argument("train")
    s.add_argument("test")
    s.add_argument("--model", choices=["lda", "rf", "mlp", "all"], default="all")
    s.add_argument("--model-file", help="score a saved model instead of refitting")
    s.add_argument("--subject", help="row label in the accuracy table")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("report", parents=[common], help="collect run outputs into summary tables")
    s.add_argument("runs", nargs="+")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("plot", parents=[common], help="envelope traces with phase bands")
    s.add_argument("session")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SemgError as exc:
        return _fail(exc, 1)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(exc, 1)


if __name__ == "__main__":
    sys.exit(main())
