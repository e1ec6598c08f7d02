"""Command-line interface.

Subcommands:
  play            watch a variant in ASCII, driven by NOOP, random, or planner
  train           learn a schema set from scratch on one variant
  eval            evaluate a saved schema set, zero-shot, on one variant
  inspect-schemas pretty-print a schema file in offset notation
  run-experiment  full train-then-evaluate protocol with persisted artifacts
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
import time

import numpy as np

from . import env as env_mod
from .agent import AgentConfig, PlannerAgent, run_training
from .env import ACTIONS, Action, load_variant_config, render_ascii, reset, step, variant_spec
from .harness import (ExperimentConfig, evaluate_episode, half_negative_breakdown,
                      load_schemas, run_experiment, save_schemas, episode_seed)
from .learner import format_schema
from .network import ground
from .percept import frame_to_grid
from .planner import DEFAULT_WINDOW, plan


def _spec_from_args(args):
    if getattr(args, "config", None):
        return load_variant_config(args.config)
    return variant_spec(args.variant)


def _add_variant_args(parser):
    parser.add_argument("--variant", default="Mini",
                        help="built-in variant name (default: Mini)")
    parser.add_argument("--config", help="variant config file (overrides --variant)")
    parser.add_argument("--seed", type=int, default=0)


def _dump_plan(directory: str, frame: int, the_plan) -> None:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"plan_{frame:06d}.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("actions: " + " ".join(a.name for a in the_plan.actions) + "\n")
        fh.write(f"feasible: {the_plan.feasible}\n")
        clamps = ", ".join(f"{c.var}={c.value}" for c in the_plan.clamps.clamps)
        fh.write(f"clamps: {clamps or '(none)'}\n\n")
        for t, grid in enumerate(the_plan.grids):
            fh.write(f"imagined t={t}\n")
            fh.write(_grid_ascii(grid) + "\n\n")


def _grid_ascii(grid) -> str:
    cat = grid.catalog
    rows = []
    for y in range(grid.height):
        row = []
        for x in range(grid.width):
            bits = grid.bits[y, x]
            if any(bits[a] for a in cat.balls):
                row.append("o")
            elif bits[cat.wall]:
                row.append("#")
            elif any(bits[a] for a in cat.paddle_parts):
                row.append("=")
            elif any(bits[a] for a in cat.bricks):
                color = next(k for k in range(len(cat.bricks)) if bits[cat.brick(k)])
                row.append(str(color))
            elif bits[cat.pit]:
                row.append("_")
            else:
                row.append(" ")
        rows.append("".join(row))
    return "\n".join(rows)


def cmd_play(args) -> int:
    spec = _spec_from_args(args)
    state = reset(spec, args.seed)
    rng = np.random.default_rng(args.seed)
    agent = None
    if args.agent == "planner":
        if not args.schemas:
            print("--agent planner needs --schemas", file=sys.stderr)
            return 2
        agent = PlannerAgent(load_schemas(args.schemas), spec, args.window)
    delay = 1.0 / args.fps if args.fps > 0 else 0.0
    frames = args.frames if args.frames is not None else spec.frame_cap
    for frame in range(frames):
        if state.done:
            break
        if args.agent == "noop":
            action = Action.NOOP
        elif args.agent == "random":
            action = Action(int(rng.integers(0, len(ACTIONS))))
        else:
            action = agent.act(state)
        if args.dump_plan and agent is not None and agent._cached is not None:
            _dump_plan(args.dump_plan, frame, agent._cached[0])
        state, reward, _ = step(state, action)
        print(f"tick {state.tick} action {action.name} reward {reward:+d} score {state.score:+d}")
        print(render_ascii(state))
        if delay:
            time.sleep(delay)
    print(f"final score {state.score:+d} after {state.tick} frames")
    return 0


def cmd_train(args) -> int:
    spec = _spec_from_args(args)
    config = AgentConfig(epsilon=args.epsilon, total_frames=args.frames,
                         window=args.window, seed=args.seed,
                         relearn_interval=args.relearn_interval)
    schemas, log = run_training(spec, config)
    save_schemas(schemas, args.out)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            fh.write(log.to_lines())
    print(f"trained {log.total_frames} frames, converged={log.converged}, "
          f"{schemas.n_schemas} schemas -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    spec = _spec_from_args(args)
    schemas = load_schemas(args.schemas)
    agent = PlannerAgent(schemas, spec, args.window)
    scores = []
    positive = negative = 0
    for ep in range(args.episodes):
        seed = episode_seed(args.seed, 0, ep)
        score, pos, neg = evaluate_episode(spec, schemas, seed,
                                           frame_cap=args.frame_cap,
                                           window=args.window, agent=agent)
        scores.append(score)
        positive += pos
        negative += neg
        print(f"episode {ep} seed {seed} score {score:+d}")
    mean = statistics.fmean(scores)
    std = statistics.pstdev(scores) if len(scores) > 1 else 0.0
    print(f"mean {mean:+.2f} +/- {std:.2f} over {len(scores)} episodes")
    if negative or positive:
        total = positive + negative
        print(f"bricks destroyed: {positive} positive, {negative} negative "
              f"(positive fraction {positive / total:.3f})" if total else "")
    if args.dump_plan:
        state = reset(spec, episode_seed(args.seed, 0, 0))
        network = ground(schemas, (spec.width, spec.height), args.window)
        the_plan = plan(network, frame_to_grid(state))
        _dump_plan(args.dump_plan, 0, the_plan)
        print(f"first-frame plan dumped to {args.dump_plan}")
    return 0


def cmd_inspect(args) -> int:
    schemas = load_schemas(args.schemas)
    print(f"# {schemas.n_schemas} schemas, catalog {schemas.catalog.content_hash()}")
    for target in sorted(schemas.by_target, key=lambda t: (t[0], str(t[1]))):
        entries = schemas.by_target[target]
        if not entries:
            continue
        for schema in entries:
            print(format_schema(schema, schemas.catalog))
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig(
        train_variant=args.train_variant,
        eval_variants=tuple(args.eval_variants.split(",")) if args.eval_variants else (),
        episodes_per_variant=args.episodes,
        training_frames=args.frames,
        master_seed=args.seed,
        window=args.window,
        epsilon=args.epsilon,
        output_dir=args.out,
        schemas_path=args.schemas,
    )
    table = run_experiment(config)
    print(table.to_csv(), end="")
    for row in table.rows:
        fraction = half_negative_breakdown(row)
        if fraction is not None and row.negative_destroyed:
            print(f"{row.variant}: positive-brick fraction {fraction:.3f}")
    print(f"artifacts in {config.resolved_output_dir()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schemaplan",
                                     description="schema learning and planning on grid arcade worlds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("play", help="render episodes as ASCII frames")
    _add_variant_args(p)
    p.add_argument("--agent", choices=("noop", "random", "planner"), default="noop")
    p.add_argument("--schemas", help="schema file for --agent planner")
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--fps", type=float, default=10.0)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--dump-plan", help="directory for imagined-trajectory dumps")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("train", help="learn schemas from scratch")
    _add_variant_args(p)
    p.add_argument("--frames", type=int, default=100_000)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--relearn-interval", type=int, default=2000)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--out", default="schemas.txt")
    p.add_argument("--log", help="write the training log here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a schema file zero-shot")
    _add_variant_args(p)
    p.add_argument("--schemas", required=True)
    p.add_argument("--episodes", type=int, default=5)
    p.add_argument("--frame-cap", type=int, default=None)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--dump-plan", help="directory for imagined-trajectory dumps")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect-schemas", help="pretty-print a schema file")
    p.add_argument("--schemas", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("run-experiment", help="train then evaluate zero-shot")
    p.add_argument("--train-variant", default="Mini")
    p.add_argument("--eval-variants",
                   default="Mini,Standard,OffsetPaddle,MiddleWall,RandomTarget,Juggling")
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--frames", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--out", default="out")
    p.add_argument("--schemas", help="skip training and evaluate this schema file")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
