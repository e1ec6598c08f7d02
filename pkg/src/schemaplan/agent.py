"""Closing the loop: gather experience, relearn schemas, act by planning.

The training loop alternates epsilon-greedy play with periodic relearning
from the accumulated deduplicated dataset, and stops early once an interval
passes with no new schemas and no prediction errors.  Evaluation replays the
same machinery with epsilon 0 and a frozen schema set; there are no policy
parameters anywhere, so behaviour is a pure function of the learned schemas
and the planner.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .catalog import Catalog, DEFAULT_CATALOG
from .env import ACTIONS, Action, FrameState, VariantSpec, reset, step
from .learner import SchemaSet, learn_schema_set
from .network import GroundedNetwork, boards_from_grid, ground
from .percept import DatasetAccumulator, frame_to_grid
from .planner import DEFAULT_WINDOW, Plan, plan


@dataclass
class AgentConfig:
    epsilon: float = 0.1
    relearn_interval: int = 2000
    total_frames: int = 100_000
    window: int = DEFAULT_WINDOW
    complexity: object = 0          # the objective's complexity weight (reported, not used to stop)
    attr_limit: int = 20
    reward_limit: int = 96
    search_budget: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.total_frames < 0 or self.relearn_interval <= 0 or self.window < 1:
            raise ValueError("budgets must be positive")


@dataclass
class TrainingLog:
    episodes: list[dict] = field(default_factory=list)   # index, frames, score
    relearns: list[dict] = field(default_factory=list)   # frames, schemas, interval errors
    total_frames: int = 0
    converged: bool = False

    def record_episode(self, index: int, frames: int, score: int) -> None:
        self.episodes.append({"episode": index, "frames": frames, "score": score})

    def record_relearn(self, frames: int, n_schemas: int, errors: int, seconds: float) -> None:
        self.relearns.append({"frames": frames, "schemas": n_schemas,
                              "errors": errors, "seconds": round(seconds, 3)})

    def to_lines(self) -> str:
        lines = [f"episode {e['episode']} frames {e['frames']} score {e['score']}"
                 for e in self.episodes]
        lines += [f"relearn frames {r['frames']} schemas {r['schemas']} errors {r['errors']}"
                  for r in self.relearns]
        lines.append(f"total_frames {self.total_frames} converged {int(self.converged)}")
        return "\n".join(lines) + "\n"


class PlannerAgent:
    """Receding-horizon controller over a fixed schema set.

    Plans with a positive goal are followed until the world diverges from
    the imagined trajectory or they run out; otherwise the agent replans
    every frame, seeding the negative-avoidance search with the tail of the
    previous plan so re-planning in a quiet world costs one rollout.
    """

    def __init__(self, schemas: SchemaSet, spec: VariantSpec,
                 window: int = DEFAULT_WINDOW, budget: int = 100_000):
        self.schemas = schemas
        self.network: GroundedNetwork | None = None
        if schemas is not None and schemas.n_schemas:
            self.network = ground(schemas, (spec.width, spec.height), window)
        self.budget = budget
        self._cached: tuple[Plan, int] | None = None

    def reset(self) -> None:
        self._cached = None

    def act(self, state: FrameState) -> Action:
        if self.network is None:
            return Action.NOOP
        grid = frame_to_grid(state, self.network.catalog)
        boards = boards_from_grid(grid)
        hint = None
        if self._cached is not None:
            cached_plan, k = self._cached
            on_track = (k < len(cached_plan.actions)
                        and cached_plan.trajectory[k] == boards)
            if on_track and cached_plan.feasible and _has_positive_goal(cached_plan):
                self._cached = (cached_plan, k + 1)
                return cached_plan.actions[k]
            if on_track:
                hint = cached_plan.actions[k:]
        new_plan = plan(self.network, grid, self.budget, hint=hint)
        self._cached = (new_plan, 1)
        return new_plan.actions[0]


def _has_positive_goal(p: Plan) -> bool:
    return any(c.var[0] == "reward" and c.var[1] == 1 and c.value == 1
               for c in p.clamps.clamps)


def act(state: FrameState, schemas: SchemaSet, epsilon: float,
        rng: np.random.Generator, window: int = DEFAULT_WINDOW,
        agent: PlannerAgent | None = None) -> Action:
    """Epsilon-greedy action: random with probability epsilon, else planned."""
    if epsilon > 0 and rng.random() < epsilon:
        return Action(int(rng.integers(0, len(ACTIONS))))
    if agent is None:
        agent = PlannerAgent(schemas, state.spec, window)
    return agent.act(state)


def run_training(spec: VariantSpec, config: AgentConfig) -> tuple[SchemaSet, TrainingLog]:
    """Epsilon-greedy experience gathering with periodic relearning.

    Stops at the frame budget, or earlier once a full interval produces no
    new schemas and no one-step prediction errors.
    """
    log = TrainingLog()
    accumulator = DatasetAccumulator()
    schemas = SchemaSet()
    fingerprints: dict = {}
    rng = np.random.default_rng(config.seed)
    if config.total_frames == 0:
        return schemas, log

    episode = 0
    state = reset(spec, _episode_seed(config.seed, episode))
    grid = frame_to_grid(state)
    agent = PlannerAgent(schemas, spec, config.window, config.search_budget)
    episode_frames = 0
    episode_score = 0
    interval_errors = 0
    frames = 0
    while frames < config.total_frames:
        if rng.random() < config.epsilon:
            action = Action(int(rng.integers(0, len(ACTIONS))))
        else:
            action = agent.act(state)
        nxt, reward, done = step(state, action)
        next_grid = frame_to_grid(nxt)
        accumulator.add_transition(grid, action, next_grid, nxt.last_reward_events)
        # Relaunches and target respawns are inherently unpredictable
        # (their training rows get contradiction-removed), so they do not
        # count against convergence.
        stochastic = (len(nxt.relaunch_queue) < len(state.relaunch_queue)
                      or (spec.random_target and nxt.last_destroyed))
        if agent.network is not None and not stochastic:
            predicted, rp, rm = __step_check(agent.network, grid, action)
            truth = boards_from_grid(next_grid)
            true_rp = any(s > 0 for _, s in nxt.last_reward_events)
            true_rm = any(s < 0 for _, s in nxt.last_reward_events)
            if predicted != truth or (rp, rm) != (true_rp, true_rm):
                interval_errors += 1
        frames += 1
        episode_frames += 1
        episode_score += reward
        state, grid = nxt, next_grid
        if done:
            log.record_episode(episode, episode_frames, episode_score)
            episode += 1
            state = reset(spec, _episode_seed(config.seed, episode))
            grid = frame_to_grid(state)
            agent.reset()
            episode_frames = 0
            episode_score = 0
        if frames % config.relearn_interval == 0 or frames == config.total_frames:
            started = time.perf_counter()
            before = schemas.n_schemas
            schemas = learn_schema_set(
                accumulator.finalize(), c=config.complexity,
                attr_limit=config.attr_limit, reward_limit=config.reward_limit,
                previous=schemas if schemas.n_schemas else None,
                fingerprints=fingerprints)
            log.record_relearn(frames, schemas.n_schemas, interval_errors,
                               time.perf_counter() - started)
            grew = schemas.n_schemas != before
            if not grew and interval_errors == 0 and frames > config.relearn_interval:
                log.converged = True
                break
            interval_errors = 0
            agent = PlannerAgent(schemas, spec, config.window, config.search_budget)
    if episode_frames:
        log.record_episode(episode, episode_frames, episode_score)
    log.total_frames = frames
    return schemas, log


def __step_check(network: GroundedNetwork, grid, action):
    from .network import step_model
    return step_model(network, boards_from_grid(grid), action)


def _episode_seed(master: int, episode: int) -> int:
    return master * 1_000_003 + episode


def run_episode(spec: VariantSpec, schemas: SchemaSet, frame_cap: int | None = None,
                seed: int = 0, window: int = DEFAULT_WINDOW,
                budget: int = 100_000, agent: PlannerAgent | None = None) -> int:
    """Greedy (epsilon 0) evaluation episode; returns the total score."""
    state = reset(spec, seed)
    if agent is None:
        agent = PlannerAgent(schemas, spec, window, budget)
    agent.reset()
    cap = spec.frame_cap if frame_cap is None else frame_cap
    score = 0
    frames = 0
    while not state.done and frames < cap:
        action = agent.act(state)
        state, reward, _ = step(state, action)
        score += reward
        frames += 1
    return score
