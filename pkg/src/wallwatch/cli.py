"""Command-line interface.

    wallwatch simulate --scenario household --out runs/demo
    wallwatch analyze --input s0.wwcap --input s1.wwcap --input s2.wwcap \
        --config runs/demo/analysis_config.yaml --out runs/demo/analysis
    wallwatch score --report runs/demo/analysis/report.json \
        --truth runs/demo/truth.json

Exit codes: 0 success, 1 usage or configuration problem, 2 input parse
failure, 3 a scored metric fell below a declared floor.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import yaml

from wallwatch import __version__
from wallwatch.capture.ops import merge_sniffers
from wallwatch.capture.wwcap import parse_capture_file, write_capture_file
from wallwatch.errors import (
    CaptureFormatError,
    ConfigError,
    MergeError,
    ScenarioError,
    WallwatchError,
)
from wallwatch.locate import SnifferGeometry
from wallwatch.pipeline import ALL_STAGES, AnalysisConfig, run_analysis
from wallwatch.report import write_outputs
from wallwatch.simulate import generate, load_scenario_file
from wallwatch.simulate.household import BUILTIN_SCENARIOS
from wallwatch.simulate.scenario import scenario_to_yaml
from wallwatch.simulate.score import check_floors, score
from wallwatch.simulate.truth import GroundTruth

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_FLOORS = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="wallwatch", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate captures plus ground truth")
    sim.add_argument(
        "--scenario",
        required=True,
        help=f"builtin name ({', '.join(sorted(BUILTIN_SCENARIOS))}) or YAML path",
    )
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed-override", type=int, default=None)

    ana = sub.add_parser("analyze", help="run the inference pipeline")
    ana.add_argument(
        "--input", action="append", default=[], help="capture file (repeatable)"
    )
    ana.add_argument("--config", default=None, help="analysis config YAML")
    ana.add_argument("--out", required=True, help="output directory")
    ana.add_argument(
        "--stages", default=None, help=f"comma list of {','.join(ALL_STAGES)}"
    )

    sco = sub.add_parser("score", help="compare a report against ground truth")
    sco.add_argument("--report", required=True)
    sco.add_argument("--truth", required=True)
    sco.add_argument("--floors", default=None, help="YAML/JSON of metric floors")
    sco.add_argument("--out", default=None, help="metrics JSON path")
    return parser


def _load_config_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    return data


def _config_from_dict(data: dict, stages_arg) -> AnalysisConfig:
    cfg = AnalysisConfig()
    geometry = data.get("geometry")
    if geometry:
        sniffers = geometry.get("sniffers") if isinstance(geometry, dict) else geometry
        if not sniffers or len(sniffers) != 3:
            raise ConfigError("geometry.sniffers must list three [x, y] pairs")
        cfg.geometry = SnifferGeometry(tuple(tuple(map(float, p)) for p in sniffers))
    if data.get("oui_registry"):
        path = data["oui_registry"]
        if not Path(path).exists():
            raise ConfigError(f"oui_registry file not found: {path}")
        cfg.oui_registry_path = path
    if data.get("setup_patterns"):
        path = data["setup_patterns"]
        if not Path(path).exists():
            raise ConfigError(f"setup_patterns file not found: {path}")
        cfg.setup_patterns_path = path
    cfg.subjects = dict(data.get("subjects", {}))
    cfg.roles = dict(data.get("roles", {}))

    constants = data.get("constants", {})
    for key, value in constants.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown constant {key!r}")
        setattr(cfg, key, type(getattr(cfg, key))(value))

    stages = data.get("stages")
    if stages_arg is not None:
        stages = [s.strip() for s in stages_arg.split(",") if s.strip()]
    if stages:
        cfg.stages = tuple(stages)
    cfg.validate()
    return cfg


def cmd_simulate(args) -> int:
    try:
        if args.scenario in BUILTIN_SCENARIOS:
            sc = BUILTIN_SCENARIOS[args.scenario](args.seed_override or 42)
        else:
            sc = load_scenario_file(args.scenario)
            if args.seed_override is not None:
                sc = dataclasses.replace(sc, seed=args.seed_override)
    except FileNotFoundError:
        print(f"scenario not found: {args.scenario}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    captures, truth = generate(sc)
    for i, cap in enumerate(captures):
        n = write_capture_file(cap, out / f"capture_s{i}.wwcap")
        print(f"wrote capture_s{i}.wwcap ({n} records)")
    (out / "truth.json").write_text(truth.to_json() + "\n", encoding="utf-8")
    (out / "scenario.yaml").write_text(scenario_to_yaml(sc), encoding="utf-8")

    analysis_cfg = {
        "schema_version": 1,
        "geometry": {"sniffers": [list(p) for p in sc.sniffers]},
        "subjects": {
            alias: mac
            for alias, mac in sc.subject_map.items()
            if alias == "resident"
        },
        "stages": list(ALL_STAGES),
    }
    (out / "analysis_config.yaml").write_text(
        yaml.safe_dump(analysis_cfg, sort_keys=True), encoding="utf-8"
    )
    print(f"wrote truth.json, scenario.yaml, analysis_config.yaml in {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if not args.input:
        print("analyze needs at least one --input capture", file=sys.stderr)
        return EXIT_USAGE
    try:
        data = _load_config_file(args.config) if args.config else {}
        cfg = _config_from_dict(data, args.stages)
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    captures = []
    parse_reports = []
    for path in args.input:
        try:
            cap, report = parse_capture_file(path)
        except FileNotFoundError:
            print(f"input not found: {path}", file=sys.stderr)
            return EXIT_USAGE
        except CaptureFormatError as exc:
            print(f"parse error in {path}: {exc}", file=sys.stderr)
            return EXIT_PARSE
        parse_reports.append({"path": str(path), **report.to_dict()})
        captures.append(cap)

    merge_info = None
    if len(captures) == 1:
        capture = captures[0]
    else:
        try:
            capture, merge_report = merge_sniffers(captures, cfg.max_skew_us)
        except MergeError as exc:
            print(f"merge error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        merge_info = merge_report.to_dict()

    result = run_analysis(capture, cfg)
    result.parse_reports = parse_reports
    result.merge_report = merge_info
    written = write_outputs(result, args.out, capture)
    for stage, status in result.stages.items():
        print(f"stage {stage}: {status}")
    print(f"wrote {', '.join(written)} in {args.out}")
    failed = [s for s, status in result.stages.items() if status.startswith("error")]
    return EXIT_PARSE if failed else EXIT_OK


def cmd_score(args) -> int:
    try:
        with open(args.report, "r", encoding="utf-8") as fh:
            report = json.load(fh)
        with open(args.truth, "r", encoding="utf-8") as fh:
            truth = GroundTruth.from_json(fh.read())
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"cannot parse inputs: {exc}", file=sys.stderr)
        return EXIT_PARSE

    try:
        metrics = score(report, truth)
    except WallwatchError as exc:
        print(f"scoring failed: {exc}", file=sys.stderr)
        return EXIT_PARSE

    text = json.dumps(metrics, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)

    if args.floors:
        try:
            with open(args.floors, "r", encoding="utf-8") as fh:
                floors = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            print(f"cannot read floors: {exc}", file=sys.stderr)
            return EXIT_USAGE
        failures = check_floors(metrics, floors)
        if failures:
            for f in failures:
                print(f"floor failed: {f}", file=sys.stderr)
            return EXIT_FLOORS
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "score":
            return cmd_score(args)
    except WallwatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
