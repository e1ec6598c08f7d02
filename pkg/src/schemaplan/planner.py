"""Planning as inference over the grounded network.

A forward max-product sweep computes optimistic per-variable feasibility
(which values each attribute and reward variable can still take, layer by
layer).  Because the graph is loopy the sweep can over-approximate: it may
mark a reward feasible that no joint assignment achieves, but it never marks
an achievable value infeasible.  Goals are chosen from these max-marginals
(the soonest potentially feasible positive reward), negative rewards are
clamped off one by one while a joint witness still exists, and a backward
pass plus depth-first search over action assignments extracts a satisfying
configuration.  Every returned plan is re-verified against the exact model
rollout before the planner hands it back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .env import ACTIONS, Action
from .network import (GroundedNetwork, _shift, boards_from_grid, grid_from_boards,
                      simulate_forward, step_model)
from .percept import AttributeGrid

Boards = tuple[int, ...]

# Catch-to-brick round trips in the default geometries need about 18 steps,
# so anything shorter leaves the planner goal-blind between paddle contacts.
DEFAULT_WINDOW = 20

# Variable addresses: ("reward", sign, t) or ("attr", t, (x, y), attr)
Var = tuple


@dataclass(frozen=True)
class Clamp:
    var: Var
    value: int


@dataclass(frozen=True)
class ClampSet:
    clamps: tuple[Clamp, ...] = ()

    def __post_init__(self):
        seen: dict[Var, int] = {}
        for c in self.clamps:
            if seen.get(c.var, c.value) != c.value:
                raise ValueError(f"variable {c.var} clamped to both values")
            seen[c.var] = c.value

    def add(self, clamp: Clamp) -> "ClampSet":
        return ClampSet(self.clamps + (clamp,))

    def reward_requirements(self) -> dict[int, dict[int, int]]:
        """time -> sign -> required value."""
        out: dict[int, dict[int, int]] = {}
        for c in self.clamps:
            if c.var[0] == "reward":
                _, sign, t = c.var
                out.setdefault(t, {})[sign] = c.value
        return out

    def attr_requirements(self) -> dict[int, list[tuple[tuple[int, int], int, int]]]:
        out: dict[int, list] = {}
        for c in self.clamps:
            if c.var[0] == "attr":
                _, t, cell, attr = c.var
                out.setdefault(t, []).append((cell, attr, c.value))
        return out

    def horizon(self) -> int:
        return max((c.var[2] if c.var[0] == "reward" else c.var[1])
                   for c in self.clamps) if self.clamps else 0

    def __len__(self) -> int:
        return len(self.clamps)


class _Layer:
    """Optimistic value sets for one time layer, as can-be-1/can-be-0 bitboards."""

    __slots__ = ("can1", "can0")

    def __init__(self, can1: list[int], can0: list[int]):
        self.can1 = can1
        self.can0 = can0


@dataclass
class MaxMarginals:
    """Feasibility bits for every variable in the window.

    Index 0 is the observed layer (exactly one value per variable); rewards
    are indexed by the step on which they land, 1..T.
    """

    network: GroundedNetwork
    layers: list[_Layer]
    reward_can1: list[tuple[bool, bool]]   # (positive, negative) per step
    reward_can0: list[tuple[bool, bool]]
    feasible: bool = True

    def attr_feasible(self, t: int, cell: tuple[int, int], attr: int, value: int) -> bool:
        x, y = cell
        bit = 1 << (y * self.network.width + x)
        layer = self.layers[t]
        return bool((layer.can1[attr] if value else layer.can0[attr]) & bit)

    def reward_feasible(self, t: int, sign: int, value: int) -> bool:
        idx = 0 if sign > 0 else 1
        pair = self.reward_can1[t - 1] if value else self.reward_can0[t - 1]
        return pair[idx]

    def positive_reward_times(self) -> list[int]:
        return [t + 1 for t, pair in enumerate(self.reward_can1) if pair[0]]

    def negative_reward_times(self) -> list[int]:
        return [t + 1 for t, pair in enumerate(self.reward_can1) if pair[1]]


def _close_derived(layer: _Layer, net: GroundedNetwork) -> None:
    cat = net.catalog
    full = net._full_mask
    can1, can0 = layer.can1, layer.can0
    u1 = 0
    i0 = full
    for a in net._solid_members:
        u1 |= can1[a]
        i0 &= can0[a]
    can1[cat.solid] = u1
    can0[cat.solid] = i0
    e0, e1 = net._edge_members
    can1[cat.edge] = can1[e0] | can1[e1]
    can0[cat.edge] = can0[e0] & can0[e1]
    f1 = 0
    f0 = full
    for a in net._flat_members:
        f1 |= can1[a]
        f0 &= can0[a]
    can1[cat.flat] = f1
    can0[cat.flat] = f0
    can1[cat.clear] = i0
    can0[cat.clear] = u1


def _advance_layer(net: GroundedNetwork, layer: _Layer):
    """One optimistic sweep step; returns (next layer, reward canfire/mustfire)."""
    full = net._full_mask
    m = net.catalog.m
    lcan1, lcan0 = layer.can1, layer.can0
    must1 = [lcan1[a] & ~lcan0[a] for a in range(m)]
    arrival_can = [0] * m
    arrival_must = [0] * m
    blocker_can = [0] * m
    blocker_must = [0] * m
    reward_can = [False, False]
    reward_must = [False, False]
    for action, anchor, shifts, kind, arg, consumes in net._ops:
        canfire = anchor
        for off, attr in shifts:
            b = lcan1[attr]
            canfire &= (b >> off) if off >= 0 else (b << -off)
            if not canfire:
                break
        if not canfire:
            continue
        if action is None:
            mustfire = anchor
            for off, attr in shifts:
                b = must1[attr]
                mustfire &= (b >> off) if off >= 0 else (b << -off)
                if not mustfire:
                    break
        else:
            mustfire = 0  # another action can always be chosen
        if kind == "attr":
            arrival_can[arg] |= canfire
            arrival_must[arg] |= mustfire
        elif kind == "reward":
            idx = 0 if arg > 0 else 1
            reward_can[idx] = True
            if mustfire:
                reward_must[idx] = True
        for off, attr in consumes:
            blocker_can[attr] |= ((canfire << off) if off >= 0 else (canfire >> -off)) & full
            if mustfire:
                blocker_must[attr] |= ((mustfire << off) if off >= 0 else (mustfire >> -off)) & full
    nxt = _Layer([0] * m, [0] * m)
    ncan1, ncan0 = nxt.can1, nxt.can0
    for a in net._object_attrs:
        ncan1[a] = arrival_can[a] | (lcan1[a] & ~blocker_must[a] & full)
        ncan0[a] = ~arrival_must[a] & (lcan0[a] | blocker_can[a]) & full
    _close_derived(nxt, net)
    return nxt, reward_can, reward_must


def feasibility_forward_pass(network: GroundedNetwork, observed: AttributeGrid | Boards,
                             clamps: ClampSet = ClampSet(),
                             horizon: int | None = None) -> MaxMarginals:
    """Layer-by-layer optimistic max-product sweep from the observed state."""
    boards = observed if isinstance(observed, tuple) else boards_from_grid(observed)
    full = network._full_mask
    layer0 = _Layer(list(boards), [~b & full for b in boards])
    horizon = network.window if horizon is None else horizon
    layers = [layer0]
    reward_can1 = []
    reward_can0 = []
    layer = layer0
    for _ in range(horizon):
        layer, rcan, rmust = _advance_layer(network, layer)
        layers.append(layer)
        reward_can1.append((rcan[0], rcan[1]))
        reward_can0.append((not rmust[0], not rmust[1]))
    out = MaxMarginals(network, layers, reward_can1, reward_can0)
    for clamp in clamps.clamps:
        if clamp.var[0] == "reward":
            _, sign, t = clamp.var
            ok = t <= horizon and out.reward_feasible(t, sign, clamp.value)
        else:
            _, t, cell, attr = clamp.var
            ok = t <= horizon and out.attr_feasible(t, cell, attr, clamp.value)
        if not ok:
            out.feasible = False
    return out


def select_goal(marginals: MaxMarginals) -> ClampSet:
    """Clamp the soonest potentially feasible positive reward to 1."""
    times = marginals.positive_reward_times()
    if not times:
        return ClampSet()
    return ClampSet((Clamp(("reward", 1, times[0]), 1),))


def _forced_actions(network: GroundedNetwork, marginals: MaxMarginals,
                    clamps: ClampSet) -> dict[int, int] | None:
    """Backward pass: propagate required-1 variables through sole justifications.

    Returns forced actions per timestep, or None when the requirements are
    contradictory (two different actions forced at the same step).
    """
    cat = network.catalog
    full = network._full_mask
    required: dict[int, list[tuple[str, object]]] = {}
    for c in clamps.clamps:
        if c.value != 1:
            continue
        if c.var[0] == "reward":
            _, sign, t = c.var
            required.setdefault(t, []).append(("reward", sign))
        else:
            _, t, cell, attr = c.var
            required.setdefault(t, []).append(("attr", (cell, attr)))
    forced: dict[int, int] = {}
    for t in sorted(required, reverse=True):
        if t <= 0:
            continue
        layer = marginals.layers[t - 1]
        for kind, arg in required[t]:
            candidates = []
            if kind == "reward":
                sign = arg
                for comp in network.compiled:
                    if comp.schema.target != ("reward", sign):
                        continue
                    canfire = comp.anchor_mask
                    for off, attr in comp.shifts:
                        canfire &= _shift(layer.can1[attr], off, full)
                        if not canfire:
                            break
                    if canfire:
                        candidates.append((comp, canfire))
            else:
                (x, y), attr = arg
                bit = 1 << (y * network.width + x)
                for comp in network.compiled:
                    if comp.schema.target != ("attr", attr):
                        continue
                    canfire = comp.anchor_mask & bit
                    for off, a in comp.shifts:
                        canfire &= _shift(layer.can1[a], off, full)
                        if not canfire:
                            break
                    if canfire:
                        candidates.append((comp, canfire))
                if layer.can1[attr] & bit:
                    candidates.append((None, bit))  # self-transition justification
            if len(candidates) != 1:
                continue
            comp, anchors = candidates[0]
            if comp is None:
                required.setdefault(t - 1, []).append(("attr", arg))
                continue
            if comp.action is not None:
                if forced.get(t - 1, comp.action) != comp.action:
                    return None
                forced[t - 1] = comp.action
            if anchors.bit_count() == 1 and comp.schema.target[0] == "attr":
                idx = anchors.bit_length() - 1
                ax, ay = idx % network.width, idx // network.width
                for dx, dy, a in comp.schema.literals:
                    if a not in cat.derived:
                        required.setdefault(t - 1, []).append(
                            ("attr", ((ax + dx, ay + dy), a)))
    return forced


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n

    def spend(self) -> bool:
        self.left -= 1
        return self.left >= 0


def backtrack(network: GroundedNetwork, observed: AttributeGrid | Boards,
              clamps: ClampSet, budget: int = 100_000,
              prune: bool = True) -> tuple[Action, ...] | None:
    """Backward-pass-guided depth-first search for a satisfying action sequence.

    Returns a full-window action tuple, or None when the clamps cannot be
    jointly satisfied (or the node budget runs out).
    """
    boards = observed if isinstance(observed, tuple) else boards_from_grid(observed)
    horizon = max(clamps.horizon(), 0)
    if horizon == 0:
        return tuple(Action.NOOP for _ in range(network.window)) if _check_static(network, boards, clamps) else None
    if horizon > network.window:
        return None
    marginals = feasibility_forward_pass(network, boards, horizon=horizon)
    reward_req = clamps.reward_requirements()
    attr_req = clamps.attr_requirements()
    if not _attrs_satisfied(network, boards, attr_req.get(0, ())):
        return None
    forced = _forced_actions(network, marginals, clamps)
    if forced is None:
        return None
    budget_box = _Budget(budget)
    failed: set[tuple[int, Boards]] = set()

    order = (Action.NOOP, Action.LEFT, Action.RIGHT)

    def dfs(t: int, state: Boards):
        if t == horizon:
            return []
        key = (t, state)
        if key in failed:
            return None
        if not budget_box.spend():
            return None
        if prune and not _clamps_attainable(network, state, t, horizon, reward_req, attr_req):
            failed.add(key)
            return None
        actions = (Action(forced[t]),) if t in forced else order
        for action in actions:
            child, rp, rm = step_model(network, state, action)
            need = reward_req.get(t + 1)
            if need is not None:
                if need.get(1) is not None and rp != bool(need[1]):
                    continue
                if need.get(-1) is not None and rm != bool(need[-1]):
                    continue
            if not _attrs_satisfied(network, child, attr_req.get(t + 1, ())):
                continue
            rest = dfs(t + 1, child)
            if rest is not None:
                return [action] + rest
        failed.add(key)
        return None

    result = dfs(0, boards)
    if result is None:
        return None
    result += [Action.NOOP] * (network.window - len(result))
    return tuple(result)


def _attrs_satisfied(network: GroundedNetwork, boards: Boards, reqs) -> bool:
    for (x, y), attr, value in reqs:
        bit = (boards[attr] >> (y * network.width + x)) & 1
        if bit != value:
            return False
    return True


def _check_static(network: GroundedNetwork, boards: Boards, clamps: ClampSet) -> bool:
    return _attrs_satisfied(network, boards, clamps.attr_requirements().get(0, ()))


def _clamps_attainable(network: GroundedNetwork, boards: Boards, t: int, horizon: int,
                       reward_req, attr_req) -> bool:
    """Optimistic check that every remaining clamp is still reachable from here."""
    remaining = horizon - t
    if remaining <= 0:
        return True
    marg = feasibility_forward_pass(network, boards, horizon=remaining)
    for tt, need in reward_req.items():
        if tt <= t:
            continue
        for sign, value in need.items():
            if not marg.reward_feasible(tt - t, sign, value):
                return False
    for tt, reqs in attr_req.items():
        if tt <= t:
            continue
        for cell, attr, value in reqs:
            if not marg.attr_feasible(tt - t, cell, attr, value):
                return False
    return True


@dataclass
class Plan:
    actions: tuple[Action, ...]
    clamps: ClampSet
    trajectory: tuple[Boards, ...]        # imagined boards, observed state first
    rewards: list[tuple[bool, bool]]
    feasible: bool
    network: GroundedNetwork | None = None

    @property
    def first_action(self) -> Action:
        return self.actions[0] if self.actions else Action.NOOP

    @property
    def grids(self) -> list[AttributeGrid]:
        """The imagined trajectory as attribute grids (for inspection/dumps)."""
        net = self.network
        return [grid_from_boards(b, net.width, net.height, net.catalog)
                for b in self.trajectory]


class PlanVerificationError(RuntimeError):
    """A found configuration failed the mandatory forward-simulation self-check."""


def _verify(network: GroundedNetwork, boards: Boards, actions, clamps: ClampSet):
    trajectory = [boards]
    rewards = []
    state = boards
    for action in actions:
        state, rp, rm = step_model(network, state, action)
        trajectory.append(state)
        rewards.append((rp, rm))
    for c in clamps.clamps:
        if c.var[0] == "reward":
            _, sign, t = c.var
            got = rewards[t - 1][0 if sign > 0 else 1]
        else:
            _, t, (x, y), attr = c.var
            got = bool((trajectory[t][attr] >> (y * network.width + x)) & 1)
        if got != bool(c.value):
            raise PlanVerificationError(f"clamp {c.var}={c.value} not satisfied by the found plan")
    return tuple(trajectory), rewards


def _rollout_rewards(network: GroundedNetwork, boards: Boards, actions) -> list[tuple[bool, bool]]:
    out = []
    state = boards
    for action in actions:
        state, rp, rm = step_model(network, state, action)
        out.append((rp, rm))
    return out


def avoid_negatives(network: GroundedNetwork, observed: AttributeGrid,
                    clamps: ClampSet, budget: int = 100_000) -> ClampSet:
    """Clamp off negative rewards, soonest first, while a joint witness exists."""
    clamps, _ = _avoid_negatives_with_actions(network, observed, clamps, budget)
    return clamps


def _avoid_negatives_with_actions(network: GroundedNetwork, observed: AttributeGrid | Boards,
                                  clamps: ClampSet, budget: int,
                                  witness=None, marginals: MaxMarginals | None = None,
                                  probe_hint=None):
    """Tentatively clamp each avoidable negative reward, keeping jointly satisfiable ones.

    A clamp the current witness rollout already satisfies is kept without a
    new search; only clamps the witness violates trigger a fresh backtrack.
    """
    boards = observed if isinstance(observed, tuple) else boards_from_grid(observed)
    if marginals is None:
        marginals = feasibility_forward_pass(network, boards)
    actions = witness
    if witness is not None:
        probe = witness
    elif probe_hint is not None:
        probe = probe_hint
    else:
        probe = tuple(Action.NOOP for _ in range(network.window))
    neg_fired = [rm for _, rm in _rollout_rewards(network, boards, probe)]
    for t in marginals.negative_reward_times():
        if not marginals.reward_feasible(t, -1, 0):
            continue  # not even optimistically avoidable
        trial = clamps.add(Clamp(("reward", -1, t), 0))
        if not neg_fired[t - 1]:
            clamps = trial
            if actions is None:
                actions = probe
            continue
        found = backtrack(network, boards, trial, budget)
        if found is not None:
            clamps = trial
            actions = found
            probe = found
            neg_fired = [rm for _, rm in _rollout_rewards(network, boards, probe)]
    return clamps, actions


def plan(network: GroundedNetwork, observed: AttributeGrid,
         budget: int = 100_000, hint=None) -> Plan:
    """Full planning pipeline: feasibility, goal choice, negative avoidance, search.

    `hint` is an optional action sequence (typically the tail of the previous
    plan) used as the starting witness for negative avoidance, which makes
    per-frame replanning cheap when the world is going as expected.
    """
    boards = boards_from_grid(observed)
    marginals = feasibility_forward_pass(network, boards)
    actions = None
    clamps = ClampSet()
    for t in marginals.positive_reward_times():
        trial = ClampSet((Clamp(("reward", 1, t), 1),))
        found = backtrack(network, boards, trial, budget)
        if found is not None:
            clamps = trial
            actions = found
            break
    probe_hint = None
    if hint is not None:
        probe_hint = tuple(hint)[:network.window]
        probe_hint += tuple(Action.NOOP for _ in range(network.window - len(probe_hint)))
    clamps, actions = _avoid_negatives_with_actions(
        network, boards, clamps, budget, witness=actions, marginals=marginals,
        probe_hint=probe_hint)
    if actions is None or not clamps.clamps:
        noop = tuple(Action.NOOP for _ in range(network.window))
        trajectory, rewards = _verify(network, boards, noop, ClampSet())
        return Plan(noop, ClampSet(), trajectory, rewards, feasible=False, network=network)
    trajectory, rewards = _verify(network, boards, actions, clamps)
    return Plan(actions, clamps, trajectory, rewards, feasible=True, network=network)
