"""Command-line entry point.

Exit codes: 0 success, 2 config, 3 io, 4 domain, 1 internal. On failure a
single machine-readable JSON object {"category", "message"} goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..editor import PRESETS, AncSchedule
from ..errors import FlowbenchError
from . import fileio
from .scenarios import builtin_scenarios, scenario_from_dict
from .studies import METHODS, SUITES, StudySpec, ablation_suite, run_study

_EXIT_CODES = {"config": 2, "io": 3, "domain": 4, "internal": 1}


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s.strip())


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", default="trajectory-jump", help="built-in scenario name")
    parser.add_argument("--scenario-file", help="JSON file defining a custom scenario")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named hyperparameter preset")
    parser.add_argument("--steps", type=int, help="integration steps N")
    parser.add_argument("--nmax", type=int, help="starting timestep index")
    parser.add_argument("--tau", type=float, help="SGA softmax temperature")
    parser.add_argument("--cfg-src", type=float, help="source guidance scale")
    parser.add_argument("--cfg-tar", type=float, help="target guidance scale")
    parser.add_argument("--similarity", choices=("cosine", "neg_mse"))
    parser.add_argument("--anc", choices=AncSchedule.KINDS, help="noise-correlation schedule")
    parser.add_argument("--config", help="JSON study config (flags override its fields)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--no-plots", action="store_true", help="skip SVG emission")


def _study_from_args(args: argparse.Namespace, method: str) -> StudySpec:
    data: dict = {}
    if args.config:
        data = fileio.load_json(args.config)
    data.setdefault("scenario", args.scenario)
    data["method"] = method
    if args.seeds is not None:
        data["seeds"] = list(_parse_seeds(args.seeds))
    data.setdefault("seeds", [0])
    config = data.get("config") or {}
    if args.preset:
        config = {**{k: v for k, v in PRESETS[args.preset].items()}, **config}
    for key, value in (
        ("steps", args.steps),
        ("n_max", args.nmax),
        ("tau", args.tau),
        ("cfg_src", getattr(args, "cfg_src", None)),
        ("cfg_tar", getattr(args, "cfg_tar", None)),
        ("similarity", args.similarity),
    ):
        if value is not None:
            config[key] = value
    if args.anc:
        config["anc"] = {"kind": args.anc}
    data["config"] = config
    if getattr(args, "t_start", None) is not None:
        data["sdedit_t_start"] = args.t_start
    if getattr(args, "cfg", None) is not None:
        data["sample_cfg"] = args.cfg
    if args.no_plots:
        data["plots"] = False
    return StudySpec.from_dict(data, out_dir=args.out)


def _load_custom_scenario(args: argparse.Namespace):
    if not getattr(args, "scenario_file", None):
        return None
    custom = scenario_from_dict(fileio.load_json(args.scenario_file))
    args.scenario = custom.name
    return custom


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="flowbench",
        description="Inversion-free editing experiments on analytic rectified flows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_scen = sub.add_parser("scenarios", help="list built-in scenarios")

    p_sample = sub.add_parser("sample", help="plain conditional generation")
    _add_config_flags(p_sample)
    p_sample.add_argument("--seeds", help="comma-separated seed list")
    p_sample.add_argument("--cfg", type=float, help="guidance scale for sampling")

    p_edit = sub.add_parser("edit", help="run an editing method over seeds")
    _add_config_flags(p_edit)
    p_edit.add_argument("--seeds", help="comma-separated seed list")
    p_edit.add_argument("--method", choices=[m for m in METHODS if m != "sample"],
                        default="dynaedit")
    p_edit.add_argument("--t-start", type=float, help="sdedit renoise level")
    p_edit.add_argument("--snapshot-stride", type=int, default=0)

    p_trace = sub.add_parser("trace", help="single-seed run with trace diagnostics")
    _add_config_flags(p_trace)
    p_trace.add_argument("--seed", type=int, default=0)
    p_trace.add_argument("--method", choices=list(METHODS), default="dynaedit")
    p_trace.add_argument("--t-start", type=float)

    p_abl = sub.add_parser("ablate", help="run a paired ablation suite")
    p_abl.add_argument("--suite", choices=list(SUITES), required=True)
    p_abl.add_argument("--seeds", type=int, default=24, help="number of paired seeds")
    p_abl.add_argument("--out", required=True)
    p_abl.add_argument("--no-plots", action="store_true")

    args = parser.parse_args(argv)
    try:
        if args.command == "scenarios":
            for s in builtin_scenarios():
                blocks = f" blocks={dict(s.blocks)}" if s.blocks else ""
                print(
                    f"{s.name:16s} T={s.frames:3d} d={s.frame_dim}  "
                    f"{s.source_label} -> {s.target_label}{blocks}"
                )
            return 0
        if args.command == "ablate":
            summary = ablation_suite(args.suite, args.out, args.seeds, not args.no_plots)
            print(json.dumps(summary, indent=2))
            return 0
        custom = _load_custom_scenario(args)
        if args.command == "sample":
            spec = _study_from_args(args, "sample")
        elif args.command == "edit":
            spec = _study_from_args(args, args.method)
            if args.snapshot_stride:
                spec = StudySpec(**{**spec.__dict__, "snapshot_stride": args.snapshot_stride})
        else:  # trace
            args.seeds = str(args.seed)
            spec = _study_from_args(args, args.method)
        manifest = run_study(spec, scenario=custom)
        print(json.dumps(manifest, indent=2))
        return 0
    except FlowbenchError as exc:
        print(json.dumps({"category": exc.category, "message": str(exc)}), file=sys.stderr)
        return _EXIT_CODES.get(exc.category, 1)
    except Exception as exc:  # keep the contract: nonzero + categorized stderr line
        print(json.dumps({"category": "internal", "message": f"{type(exc).__name__}: {exc}"}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
