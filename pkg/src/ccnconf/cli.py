"""Command-line entry point.

Subcommands:

* ``run``      -- run one scenario (preset name or config file) and write
                  artifacts to the output directory.
* ``sweep``    -- run a preset family across participant counts and seeds,
                  emitting an aggregated quality table.
* ``validate`` -- check a scenario file without running it.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 strict-mode
assertion failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import scenario as scn
from . import trace
from .simulator import run_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_STRICT = 3


def _load_scenario(path_or_preset: str, seed: int | None) -> scn.ScenarioConfig:
    if os.path.exists(path_or_preset):
        cfg = scn.load(path_or_preset)
    else:
        try:
            cfg = scn.preset(path_or_preset, seed or 1)
        except KeyError:
            raise scn.ValidationError(
                [f"{path_or_preset!r} is neither a file nor a preset; "
                 f"presets: {', '.join(scn.preset_names())}"])
    if seed is not None:
        cfg.seed = seed
    return cfg


def _error_report(out_dir: str, message: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "error.json"), "w", encoding="utf-8") as fh:
        json.dump({"error": message}, fh, indent=2)
        fh.write("\n")


def cmd_run(args) -> int:
    try:
        cfg = _load_scenario(args.scenario, args.seed)
        if args.set:
            cfg = scn.apply_overrides(cfg, args.set)
        violations = scn.validate(cfg)
        if violations:
            raise scn.ValidationError(violations)
    except scn.ValidationError as exc:
        for v in exc.violations:
            print(f"validation: {v}", file=sys.stderr)
        if args.out:
            _error_report(args.out, "; ".join(exc.violations))
        return EXIT_VALIDATION
    try:
        result = run_scenario(cfg)
    except Exception as exc:  # runtime failure: only an error report remains
        print(f"runtime error: {exc}", file=sys.stderr)
        if args.out:
            _error_report(args.out, str(exc))
        return EXIT_RUNTIME
    formats = set(args.format.split(",")) if args.format else {"csv", "json"}
    if args.out:
        trace.export(result, args.out, formats)
    digest = result.digest()
    print(f"{cfg.name} seed={cfg.seed} digest={digest}")
    print(f"notification_overhead={result.summary['notification_overhead']}")
    for row in result.summary["per_stream"][:8]:
        print(f"  {row['consumer']}<-{row['producer']} {row['media']}: "
              f"quality {row['quality_pct']}% p95 {row['p95_latency_ms']} ms")
    if len(result.summary["per_stream"]) > 8:
        print(f"  ... {len(result.summary['per_stream'])} streams total")
    if args.strict and result.summary["assertions"]:
        for a in result.summary["assertions"]:
            print(f"assertion: {a}", file=sys.stderr)
        return EXIT_STRICT
    return EXIT_OK


def cmd_sweep(args) -> int:
    participants = [int(p) for p in args.participants.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    if not participants or not seeds:
        print("sweep needs participants and seeds", file=sys.stderr)
        return EXIT_VALIDATION
    table = []
    for n in participants:
        for seed in seeds:
            try:
                cfg = scn.preset(f"{args.preset}-{n}p", seed)
                if args.set:
                    cfg = scn.apply_overrides(cfg, args.set)
            except (KeyError, scn.ValidationError) as exc:
                print(f"validation: {exc}", file=sys.stderr)
                return EXIT_VALIDATION
            try:
                result = run_scenario(cfg)
            except Exception as exc:
                print(f"runtime error: {exc}", file=sys.stderr)
                return EXIT_RUNTIME
            audio = [s for s in result.summary["per_stream"] if s["media"] == "audio"]
            video = [s for s in result.summary["per_stream"] if s["media"] == "video"]
            row = {
                "participants": n,
                "seed": seed,
                "quality_audio_pct": _mean([s["quality_pct"] for s in audio]),
                "quality_video_pct": _mean([s["quality_pct"] for s in video]),
                "notification_overhead": result.summary["notification_overhead"],
            }
            table.append(row)
            print(f"{args.preset}-{n}p seed={seed}: audio "
                  f"{row['quality_audio_pct']}% video {row['quality_video_pct']}%")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sweep.json"), "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = _load_scenario(args.scenario, None)
    except scn.ValidationError as exc:
        for v in exc.violations:
            print(f"violation: {v}")
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    violations = scn.validate(cfg)
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def _mean(values: list[float]) -> float | None:
    return round(sum(values) / len(values), 4) if values else None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ccnconf",
        description="Named-data conferencing simulator and analysis tool")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--scenario", required=True,
                     help="preset name (e.g. baseline-15p) or config file path")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--set", action="append", default=[],
                     metavar="SECTION.KEY=VALUE", help="config override")
    run.add_argument("--strict", action="store_true",
                     help="exit 3 when any model assertion fails")
    run.add_argument("--format", default="csv,json",
                     help="artifact formats (csv,json)")
    run.set_defaults(fn=cmd_run)

    sweep = sub.add_parser("sweep", help="run a preset family")
    sweep.add_argument("--preset", default="baseline",
                       choices=["baseline", "fanin", "join-stagger"])
    sweep.add_argument("--participants", required=True,
                       help="comma-separated counts, e.g. 3,6,9,12,15")
    sweep.add_argument("--seeds", default="1")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--set", action="append", default=[],
                       metavar="SECTION.KEY=VALUE")
    sweep.set_defaults(fn=cmd_sweep)

    val = sub.add_parser("validate", help="validate a scenario without running")
    val.add_argument("scenario", help="preset name or config file path")
    val.set_defaults(fn=cmd_validate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
