"""Episode driver: random search over schedule construction and exploration.

A session owns everything that is reusable across episodes of one SCoP
(dependences, coefficient layout, generator cache, baseline cost) and walks
each episode through the two decision phases, followed by materialization,
the legality check, and the reward.
"""

from __future__ import annotations

import csv
import enum
import json
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .construction import (
    ConstructionAction,
    ConstructionConfig,
    ConstructionState,
    InvalidActionError,
    cons_is_terminal,
    cons_reset,
    cons_step,
    cons_valid_actions,
    default_max_dims,
)
from .evaluation import (
    PROXY_MODEL_VERSION,
    EpisodeOutcome,
    LegalityReport,
    OutcomeKind,
    RewardConfig,
    RewardMode,
    Schedule,
    check_legality,
    compute_reward,
    export_schedule,
    identity_schedule,
    proxy_cost,
    schedule_from_points,
    schedule_to_json,
)
from .exploration import (
    ExplorationConfig,
    ExplorationState,
    expl_is_terminal,
    expl_reset,
    expl_step,
    make_slot_layout,
    materialize_point,
)
from .farkas import CoefficientLayout, ScheduleSpace, SpaceBuilder, make_layout
from .scop import Dependence, Scop, ValidationError, compute_memory_dependences, validate_binding

__all__ = [
    "Heuristic",
    "ScheduleSession",
    "EpisodeRecord",
    "RunResult",
    "choose_construction_action",
    "choose_coefficient",
    "run_explore",
    "replay_trace",
    "load_trace",
    "emit_stats",
]

PHASE_CONSTRUCT = "construct"
PHASE_EXPLORE = "explore"
PHASE_DONE = "done"

DEFAULT_STEP_LIMIT = 10_000


class Heuristic(enum.Enum):
    UNIFORM = "uniform"
    BIAS_SELECT_DEP = "bias_select_dep"
    BIAS_COEFF_0 = "bias_coeff_0"


SELECT_DEP_BIAS = 0.7
ZERO_COEFF_BIAS = 0.9


def choose_construction_action(
    valid: Sequence[ConstructionAction], heuristic: Heuristic, rng: random.Random
) -> ConstructionAction:
    if (
        heuristic is Heuristic.BIAS_SELECT_DEP
        and ConstructionAction.SELECT_DEP in valid
        and rng.random() < SELECT_DEP_BIAS
    ):
        return ConstructionAction.SELECT_DEP
    return valid[rng.randrange(len(valid))]


def choose_coefficient(coeff_max: int, heuristic: Heuristic, rng: random.Random) -> int:
    if heuristic is Heuristic.BIAS_COEFF_0 and rng.random() < ZERO_COEFF_BIAS:
        return 0
    return rng.randrange(coeff_max + 1)


class ScheduleSession:
    """Drives episodes over one SCoP: construct dims, pick coefficients, score.

    One session object runs any number of episodes; ``reset`` starts the next
    one.  Dependence analysis, the Farkas conversions, and the baseline cost
    are shared across episodes.
    """

    def __init__(
        self,
        scop: Scop,
        binding: Mapping[str, int],
        *,
        coeff_max: int = 3,
        max_dims: int | None = None,
        reward: RewardConfig | None = None,
        deps: Sequence[Dependence] | None = None,
        legality_box: int | None = None,
        symbolic_legality: bool = False,
        instance_cap: int | None = None,
    ):
        validate_binding(scop, binding)
        self.scop = scop
        self.binding = dict(binding)
        if deps is None:
            deps = scop.dependences if scop.dependences else compute_memory_dependences(scop)
        self.deps = tuple(deps)
        self.layout: CoefficientLayout = make_layout(scop)
        self.builder = SpaceBuilder(self.deps, self.layout)
        self.expl_cfg = ExplorationConfig(coeff_max)
        if max_dims is None:
            max_dims = default_max_dims(max(len(self.deps), 1))
        if self.deps:
            self.cons_cfg = ConstructionConfig(len(self.deps), max_dims)
        else:
            self.cons_cfg = None  # no placement decisions to make
        self.reward_cfg = reward if reward is not None else RewardConfig(RewardMode.PROXY_COST)
        self.legality_box = legality_box
        self.symbolic_legality = symbolic_legality
        self.instance_cap = instance_cap
        self._baseline: Fraction | None = None
        self.episode_index = 0
        self.phase = PHASE_DONE
        self._outcome: EpisodeOutcome | None = None
        self.cons_state: ConstructionState | None = None
        self.space: ScheduleSpace | None = None
        self.expl_state: ExplorationState | None = None
        self.trace: list[str | int] = []

    @property
    def coeff_max(self) -> int:
        return self.expl_cfg.coeff_max

    @property
    def episode_id(self) -> str:
        return f"ep{self.episode_index}"

    def baseline_cost(self) -> Fraction:
        if self._baseline is None:
            kwargs = {} if self.instance_cap is None else {"cap": self.instance_cap}
            self._baseline = proxy_cost(
                identity_schedule(self.scop), self.scop, self.binding, **kwargs
            )
        return self._baseline

    def reset(self) -> None:
        self.episode_index += 1
        self._outcome = None
        self.trace = []
        self.space = None
        self.expl_state = None
        if self.cons_cfg is not None:
            self.phase = PHASE_CONSTRUCT
            self.cons_state = cons_reset(self.cons_cfg)
        else:
            # Nothing constrains the schedule: a single free dimension is
            # enough, and every choice in it is legal.
            self.cons_state = None
            self._enter_explore(self.builder.build({}, 1))

    def valid_actions(self) -> list[ConstructionAction] | list[int]:
        if self.phase == PHASE_CONSTRUCT:
            return cons_valid_actions(self.cons_state, self.cons_cfg)
        if self.phase == PHASE_EXPLORE:
            return list(range(self.expl_cfg.coeff_max + 1))
        return []

    def apply(self, action: ConstructionAction | int) -> None:
        if self.phase == PHASE_CONSTRUCT:
            if not isinstance(action, ConstructionAction):
                raise InvalidActionError(
                    f"construction phase expects a structure action, got {action!r}"
                )
            self.cons_state = cons_step(self.cons_state, action, self.cons_cfg)
            self.trace.append(action.value)
            if cons_is_terminal(self.cons_state):
                space = self.builder.build(
                    self.cons_state.assignment(), self.cons_state.i_dim
                )
                self._enter_explore(space)
        elif self.phase == PHASE_EXPLORE:
            self.expl_state = expl_step(self.expl_state, action, self.expl_cfg)
            self.trace.append(action)
            if expl_is_terminal(self.expl_state):
                self._finish()
        else:
            raise InvalidActionError("episode is finished; call reset() first")

    def abandon(self) -> None:
        """End the episode early; an unfinished schedule earns nothing."""
        if self.phase == PHASE_DONE:
            raise InvalidActionError("episode is already finished")
        reward = compute_reward(
            OutcomeKind.INCOMPLETE, self.reward_cfg, episode_id=self.episode_id
        )
        self._outcome = EpisodeOutcome(OutcomeKind.INCOMPLETE, reward, None, None, None)
        self.phase = PHASE_DONE

    def outcome(self) -> EpisodeOutcome:
        if self._outcome is None:
            raise ValidationError("episode still in progress; no outcome yet")
        return self._outcome

    def _enter_explore(self, space: ScheduleSpace) -> None:
        if not space.is_valid:
            reward = compute_reward(
                OutcomeKind.INVALID,
                self.reward_cfg,
                legal=False,
                episode_id=self.episode_id,
            )
            self._outcome = EpisodeOutcome(OutcomeKind.INVALID, reward, None, None, None)
            self.phase = PHASE_DONE
            return
        self.space = space
        self.expl_state = expl_reset(space)
        self.phase = PHASE_EXPLORE
        if expl_is_terminal(self.expl_state):
            self._finish()

    def _finish(self) -> None:
        point = materialize_point(self.expl_state, self.space)
        if point is None:
            reward = compute_reward(
                OutcomeKind.INVALID,
                self.reward_cfg,
                legal=False,
                episode_id=self.episode_id,
            )
            self._outcome = EpisodeOutcome(OutcomeKind.INVALID, reward, None, None, None)
            self.phase = PHASE_DONE
            return
        schedule = schedule_from_points(point, self.layout)
        report = check_legality(
            schedule,
            self.scop,
            self.deps,
            self.binding,
            box=self.legality_box,
            symbolic=self.symbolic_legality,
        )
        candidate = baseline = None
        if report.legal and self.reward_cfg.mode is RewardMode.PROXY_COST:
            kwargs = {} if self.instance_cap is None else {"cap": self.instance_cap}
            candidate = proxy_cost(schedule, self.scop, self.binding, **kwargs)
            baseline = self.baseline_cost()
        reward = compute_reward(
            OutcomeKind.COMPLETE,
            self.reward_cfg,
            legal=report.legal,
            candidate_cost=candidate,
            baseline_cost=baseline,
            episode_id=self.episode_id,
        )
        self._outcome = EpisodeOutcome(
            OutcomeKind.COMPLETE, reward, schedule, report.legal, report
        )
        self.phase = PHASE_DONE


@dataclass(frozen=True)
class EpisodeRecord:
    episode_id: str
    kind: OutcomeKind
    reward: Fraction
    legal: bool | None
    trace: tuple[str | int, ...]
    wall_ms: float


@dataclass
class RunResult:
    scop: Scop
    records: list[EpisodeRecord]
    best_index: int | None  # 0-based into records
    best_schedule: Schedule | None
    best_report: LegalityReport | None
    config: dict

    @property
    def best_record(self) -> EpisodeRecord | None:
        return None if self.best_index is None else self.records[self.best_index]

    def best_so_far(self) -> list[Fraction]:
        out: list[Fraction] = []
        best: Fraction | None = None
        for r in self.records:
            best = r.reward if best is None else max(best, r.reward)
            out.append(best)
        return out


def _drive_episode(
    session: ScheduleSession,
    heuristic: Heuristic,
    rng_cons: random.Random,
    rng_expl: random.Random,
    step_limit: int,
) -> None:
    session.reset()
    steps = 0
    while session.phase != PHASE_DONE:
        steps += 1
        if steps > step_limit:
            session.abandon()
            return
        if session.phase == PHASE_CONSTRUCT:
            action = choose_construction_action(
                session.valid_actions(), heuristic, rng_cons
            )
            session.apply(action)
        else:
            session.apply(choose_coefficient(session.coeff_max, heuristic, rng_expl))


def run_explore(
    scop: Scop,
    binding: Mapping[str, int],
    *,
    iters: int,
    seed: int | str,
    heuristic: Heuristic = Heuristic.UNIFORM,
    coeff_max: int = 3,
    max_dims: int | None = None,
    reward: RewardConfig | None = None,
    deps: Sequence[Dependence] | None = None,
    legality_box: int | None = None,
    timing: bool = False,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> RunResult:
    """Run seeded random-search episodes and keep the best-rewarded schedule.

    Each episode draws from its own pair of generators, one per phase, seeded
    from (seed, episode index), so runs are reproducible regardless of how
    many actions earlier episodes consumed.
    """
    if iters < 1:
        raise ValidationError("iters must be at least 1")
    session = ScheduleSession(
        scop,
        binding,
        coeff_max=coeff_max,
        max_dims=max_dims,
        reward=reward,
        deps=deps,
        legality_box=legality_box,
    )
    records: list[EpisodeRecord] = []
    best_index: int | None = None
    best_schedule: Schedule | None = None
    best_report: LegalityReport | None = None
    for i in range(1, iters + 1):
        rng_cons = random.Random(f"{seed}/{i}/cons")
        rng_expl = random.Random(f"{seed}/{i}/expl")
        t0 = time.perf_counter() if timing else 0.0
        _drive_episode(session, heuristic, rng_cons, rng_expl, step_limit)
        wall_ms = (time.perf_counter() - t0) * 1000.0 if timing else 0.0
        out = session.outcome()
        records.append(
            EpisodeRecord(
                session.episode_id,
                out.kind,
                out.reward,
                out.legal,
                tuple(session.trace),
                wall_ms,
            )
        )
        if best_index is None or out.reward > records[best_index].reward:
            best_index = len(records) - 1
            best_schedule = out.schedule
            best_report = out.report
    mode = session.reward_cfg.mode
    config = {
        "iters": iters,
        "seed": str(seed),
        "heuristic": heuristic.value,
        "coeff_max": coeff_max,
        "max_dims": max_dims if max_dims is not None else default_max_dims(max(len(session.deps), 1)),
        "reward_mode": mode.value,
        "invalid_penalty": str(session.reward_cfg.invalid_penalty),
        "binding": dict(sorted(session.binding.items())),
        "num_dependences": len(session.deps),
        "timing": timing,
        "proxy_model_version": PROXY_MODEL_VERSION,
        "baseline_cost": str(session.baseline_cost()) if mode is RewardMode.PROXY_COST else None,
    }
    return RunResult(scop, records, best_index, best_schedule, best_report, config)


def load_trace(path: str | Path) -> list[str | int]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValidationError(f"trace file is not valid JSON: {e}") from None
    if not isinstance(data, list):
        raise ValidationError("a trace file holds a JSON list of actions")
    for tok in data:
        if isinstance(tok, bool) or not isinstance(tok, (str, int)):
            raise ValidationError(f"trace entries are action names or coefficients, got {tok!r}")
    return data


def replay_trace(
    scop: Scop,
    binding: Mapping[str, int],
    trace: Sequence[str | int],
    *,
    coeff_max: int = 3,
    max_dims: int | None = None,
    reward: RewardConfig | None = None,
    deps: Sequence[Dependence] | None = None,
    legality_box: int | None = None,
    symbolic_legality: bool = False,
) -> tuple[EpisodeOutcome, ScheduleSession]:
    """Re-run a recorded action list; a short trace leaves the episode unpaid."""
    session = ScheduleSession(
        scop,
        binding,
        coeff_max=coeff_max,
        max_dims=max_dims,
        reward=reward,
        deps=deps,
        legality_box=legality_box,
        symbolic_legality=symbolic_legality,
    )
    session.reset()
    names = {a.value: a for a in ConstructionAction}
    for tok in trace:
        if session.phase == PHASE_DONE:
            raise ValidationError("trace continues past the end of the episode")
        if session.phase == PHASE_CONSTRUCT:
            if not isinstance(tok, str) or tok not in names:
                raise ValidationError(
                    f"expected a structure action name during construction, got {tok!r}"
                )
            session.apply(names[tok])
        else:
            if isinstance(tok, bool) or not isinstance(tok, int):
                raise ValidationError(
                    f"expected an integer coefficient during exploration, got {tok!r}"
                )
            session.apply(tok)
    if session.phase != PHASE_DONE:
        session.abandon()
    return session.outcome(), session


def _format_ms(value: float, timing: bool) -> str:
    return f"{value:.3f}" if timing else "0"


def emit_stats(result: RunResult, out_dir: str | Path) -> None:
    """Write run artifacts: per-episode CSV, running best, summary, best schedule."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timing = bool(result.config.get("timing"))

    with open(out / "episodes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode_id", "outcome", "reward", "trace_len", "wall_ms"])
        for r in result.records:
            w.writerow(
                [r.episode_id, r.kind.value, str(r.reward), len(r.trace), _format_ms(r.wall_ms, timing)]
            )

    with open(out / "best_so_far.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode_id", "best_reward"])
        for r, best in zip(result.records, result.best_so_far()):
            w.writerow([r.episode_id, str(best)])

    counts: dict[str, int] = {}
    for r in result.records:
        counts[r.kind.value] = counts.get(r.kind.value, 0) + 1
    best = result.best_record
    summary = {
        "config": result.config,
        "episodes": len(result.records),
        "outcome_counts": dict(sorted(counts.items())),
        "best": None
        if best is None
        else {
            "episode_id": best.episode_id,
            "outcome": best.kind.value,
            "reward": str(best.reward),
            "trace_len": len(best.trace),
        },
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    if best is not None:
        (out / "best_trace.json").write_text(json.dumps(list(best.trace)) + "\n")
    if result.best_schedule is not None:
        (out / "best_schedule.txt").write_text(export_schedule(result.best_schedule, result.scop))
        (out / "best_schedule.json").write_text(
            json.dumps(schedule_to_json(result.best_schedule, result.scop), indent=2, sort_keys=True)
            + "\n"
        )
