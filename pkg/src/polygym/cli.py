"""Command line front end: explore, replay, check."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from .construction import InvalidActionError
from .evaluation import (
    MeasurementError,
    RewardConfig,
    RewardMode,
    check_legality,
)
from .explorer import (
    Heuristic,
    emit_stats,
    load_trace,
    replay_trace,
    run_explore,
)
from .scop import Scop, ValidationError, compute_memory_dependences, parse_scop

log = logging.getLogger("polygym")


def _load_scop(path: str) -> Scop:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"cannot read SCoP file: {e}") from None
    return parse_scop(text)


def _parse_bindings(pairs: list[str] | None) -> dict[str, int]:
    binding: dict[str, int] = {}
    for item in pairs or []:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ValidationError(f"--bind expects NAME=VALUE, got {item!r}")
        if name in binding:
            raise ValidationError(f"--bind repeats parameter {name!r}")
        try:
            binding[name] = int(value)
        except ValueError:
            raise ValidationError(f"--bind value for {name!r} must be an integer") from None
    return binding


def _parse_reward(source: str, penalty: str) -> RewardConfig:
    try:
        inv = Fraction(penalty)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"--invalid-penalty must be a rational, got {penalty!r}") from None
    if source == "proxy":
        return RewardConfig(RewardMode.PROXY_COST, inv)
    if source.startswith("external:"):
        path = source[len("external:") :]
        if not path:
            raise ValidationError("--reward external: needs a measurement file path")
        from .evaluation import import_measurement

        return RewardConfig(RewardMode.EXTERNAL_FILE, inv, import_measurement(path))
    raise ValidationError(f"--reward must be 'proxy' or 'external:FILE', got {source!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scop", required=True, help="SCoP description (JSON file)")
    p.add_argument("--bind", action="append", metavar="NAME=VALUE", help="fix a size parameter")
    p.add_argument("--coeff-max", type=int, default=3, help="largest per-slot coefficient")
    p.add_argument("--max-dims", type=int, default=None, help="cap on schedule dimensions")
    p.add_argument("--reward", default="proxy", help="'proxy' or 'external:FILE'")
    p.add_argument("--invalid-penalty", default="-1", help="reward for invalid episodes")
    p.add_argument("--legality-box", type=int, default=None, help="instance box half-width for the legality check")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polygym",
        description="Search the space of legal affine loop schedules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explore = sub.add_parser("explore", help="run seeded random-search episodes")
    _add_common(p_explore)
    p_explore.add_argument("--iters", type=int, required=True, help="number of episodes")
    p_explore.add_argument("--seed", type=int, default=0, help="run seed")
    p_explore.add_argument(
        "--heuristic",
        choices=[h.value for h in Heuristic],
        default=Heuristic.UNIFORM.value,
    )
    p_explore.add_argument("--timing", action="store_true", help="record real wall-clock times")
    p_explore.add_argument("--out", required=True, help="output directory for run artifacts")

    p_replay = sub.add_parser("replay", help="re-run a recorded action trace")
    _add_common(p_replay)
    p_replay.add_argument("--trace", required=True, help="JSON action list")
    p_replay.add_argument("--out", default=None, help="optional directory for schedule files")

    p_check = sub.add_parser("check", help="check a schedule against the dependences")
    p_check.add_argument("--scop", required=True, help="SCoP description (JSON file)")
    p_check.add_argument("--bind", action="append", metavar="NAME=VALUE")
    p_check.add_argument("--schedule", required=True, help="schedule JSON file")
    p_check.add_argument("--legality-box", type=int, default=None)
    return parser


def cmd_explore(args: argparse.Namespace) -> int:
    scop = _load_scop(args.scop)
    binding = _parse_bindings(args.bind)
    reward = _parse_reward(args.reward, args.invalid_penalty)
    heuristic = Heuristic(args.heuristic)
    log.info("exploring %s for %d episodes (seed %s)", args.scop, args.iters, args.seed)
    result = run_explore(
        scop,
        binding,
        iters=args.iters,
        seed=args.seed,
        heuristic=heuristic,
        coeff_max=args.coeff_max,
        max_dims=args.max_dims,
        reward=reward,
        legality_box=args.legality_box,
        timing=args.timing,
    )
    emit_stats(result, args.out)
    best = result.best_record
    counts = {}
    for r in result.records:
        counts[r.kind.value] = counts.get(r.kind.value, 0) + 1
    print(
        "episodes={} outcomes={} best={} reward={}".format(
            len(result.records),
            ",".join(f"{k}:{v}" for k, v in sorted(counts.items())),
            best.episode_id,
            best.reward,
        )
    )
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    scop = _load_scop(args.scop)
    binding = _parse_bindings(args.bind)
    reward = _parse_reward(args.reward, args.invalid_penalty)
    trace = load_trace(args.trace)
    outcome, session = replay_trace(
        scop,
        binding,
        trace,
        coeff_max=args.coeff_max,
        max_dims=args.max_dims,
        reward=reward,
        legality_box=args.legality_box,
    )
    legal = "none" if outcome.legal is None else ("true" if outcome.legal else "false")
    print(f"outcome={outcome.kind.value} legal={legal} reward={outcome.reward}")
    if args.out:
        from .evaluation import export_schedule, schedule_to_json

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "outcome": outcome.kind.value,
            "legal": outcome.legal,
            "reward": str(outcome.reward),
            "trace_len": len(trace),
        }
        (out / "outcome.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        if outcome.schedule is not None:
            (out / "schedule.txt").write_text(export_schedule(outcome.schedule, scop))
            (out / "schedule.json").write_text(
                json.dumps(schedule_to_json(outcome.schedule, scop), indent=2, sort_keys=True) + "\n"
            )
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    from .evaluation import schedule_from_json

    scop = _load_scop(args.scop)
    binding = _parse_bindings(args.bind)
    try:
        sched_data = json.loads(Path(args.schedule).read_text(encoding="utf-8"))
    except OSError as e:
        raise ValidationError(f"cannot read schedule file: {e}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"schedule file is not valid JSON: {e}") from None
    schedule = schedule_from_json(sched_data, scop)
    deps = scop.dependences if scop.dependences else compute_memory_dependences(scop)
    report = check_legality(
        schedule, scop, deps, binding, box=args.legality_box, symbolic=True
    )
    for v in report.verdicts:
        carried = "none" if v.carried_at is None else str(v.carried_at)
        print(
            "dep {}: legal={} carried_at={} dims={}".format(
                v.dependence_id,
                "true" if v.legal else "false",
                carried,
                ",".join(v.dim_status),
            )
        )
    print("schedule: {}".format("legal" if report.legal else "illegal"))
    return 0 if report.legal else 1


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("POLYGYM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = make_parser()
    args = parser.parse_args(argv)
    handlers = {"explore": cmd_explore, "replay": cmd_replay, "check": cmd_check}
    try:
        return handlers[args.command](args)
    except (ValidationError, MeasurementError, InvalidActionError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
