"""Grounding schemas into a time-unrolled factor graph and simulating it.

An ungrounded schema is instantiated at every anchor cell where all its
precondition offsets stay in bounds, for every transition layer of the
planning window.  Attribute variables at t+1 are the OR of their predicting
grounded schemas and a self-transition; the self-transition of a movable
attribute is blocked by any same-family movement schema that consumes the
bit, and by learned deactivation schemas.  Walls and the pit row have no
predictors or blockers, so they persist unconditionally through the same
formula.

Internally grids are held as per-attribute bitboards (one Python integer per
attribute, bit ``y * W + x``); every schema compiles to a set of board shifts
plus an anchor mask, which makes one model step a few hundred integer ops.
The per-cell operations ``schema_fires`` and ``attribute_next`` implement the
same semantics directly and serve as the reference the vectorized path is
tested against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import Catalog, DEFAULT_CATALOG
from .env import Action
from .learner import SchemaSet, UngroundedSchema
from .percept import AttributeGrid, Target, derive_layers

Cell = tuple[int, int]


@dataclass(frozen=True)
class GroundedSchema:
    """One schema instance bound to an anchor cell and transition layer."""

    time: int
    anchor: Cell
    target: Target
    preconditions: tuple[tuple[Cell, int], ...]  # ((x, y), attr) at `time`
    action: int | None = None


@dataclass(frozen=True)
class SelfTransition:
    time: int
    cell: Cell
    attribute: int
    blockers: tuple[GroundedSchema, ...] = ()


@dataclass
class _CompiledSchema:
    schema: UngroundedSchema
    index: int
    anchor_mask: int
    shifts: tuple[tuple[int, int], ...]   # (flat_offset, attr) per literal
    action: int | None
    consumes: tuple[tuple[int, int], ...]  # (flat_offset, attr) blocked when fired


class GroundedNetwork:
    """Immutable grounding of a schema set over a grid and planning window."""

    def __init__(self, schema_set: SchemaSet, width: int, height: int, window: int):
        if window < 1:
            raise ValueError("planning window must be at least 1")
        self.schema_set = schema_set
        self.catalog = schema_set.catalog
        self.width = width
        self.height = height
        self.window = window
        self._full_mask = (1 << (width * height)) - 1
        self._families = self._family_table()
        self.compiled: list[_CompiledSchema] = []
        for i, schema in enumerate(schema_set.all_schemas()):
            self.compiled.append(self._compile(schema, i))
        self.self_transition_attrs = tuple(self.catalog.movable) + tuple(self.catalog.bricks)
        # Flat per-schema tuples and cached catalog tables for the hot loops.
        self._object_attrs = tuple(self.catalog.object_attrs)
        self._ops = tuple(
            (c.action, c.anchor_mask, c.shifts,
             c.schema.target[0], c.schema.target[1], c.consumes)
            for c in self.compiled)
        cat = self.catalog
        parts = list(cat.paddle_parts)
        self._solid_members = (cat.wall, *parts, *cat.bricks)
        self._edge_members = (parts[0], parts[-1])
        self._flat_members = (cat.wall, *parts[1:-1], *cat.bricks)

    # -- construction -------------------------------------------------------
    def _family_table(self) -> dict[int, frozenset[int]]:
        cat = self.catalog
        table: dict[int, frozenset[int]] = {}
        paddle = frozenset(cat.paddle_parts)
        balls = frozenset(cat.balls)
        for a in paddle:
            table[a] = paddle
        for a in balls:
            table[a] = balls
        return table

    def _anchor_mask(self, schema: UngroundedSchema) -> int:
        w, h = self.width, self.height
        x_lo, y_lo, x_hi, y_hi = 0, 0, w - 1, h - 1
        for dx, dy, _ in schema.literals:
            x_lo = max(x_lo, -dx)
            x_hi = min(x_hi, w - 1 - dx)
            y_lo = max(y_lo, -dy)
            y_hi = min(y_hi, h - 1 - dy)
        if x_lo > x_hi or y_lo > y_hi:
            return 0
        row = 0
        for x in range(x_lo, x_hi + 1):
            row |= 1 << x
        mask = 0
        for y in range(y_lo, y_hi + 1):
            mask |= row << (y * w)
        return mask

    def _compile(self, schema: UngroundedSchema, index: int) -> _CompiledSchema:
        w = self.width
        shifts = tuple((dy * w + dx, attr) for dx, dy, attr in schema.literals)
        consumes: tuple[tuple[int, int], ...] = ()
        kind, arg = schema.target
        if kind == "attr" and arg in self._families:
            family = self._families[arg]
            consumes = tuple((off, attr) for off, attr in shifts if attr in family)
        elif kind == "off":
            consumes = ((0, arg),)
        return _CompiledSchema(schema=schema, index=index,
                               anchor_mask=self._anchor_mask(schema),
                               shifts=shifts, action=schema.action,
                               consumes=consumes)

    # -- counting and inspection ---------------------------------------------
    def anchors(self, schema: UngroundedSchema) -> list[Cell]:
        mask = self._anchor_mask(schema)
        w = self.width
        out = []
        i = 0
        while mask:
            if mask & 1:
                out.append((i % w, i // w))
            mask >>= 1
            i += 1
        return out

    def grounded_instances(self, schema: UngroundedSchema, time: int):
        for anchor in self.anchors(schema):
            x, y = anchor
            pre = tuple(((x + dx, y + dy), attr) for dx, dy, attr in schema.literals)
            yield GroundedSchema(time=time, anchor=anchor, target=schema.target,
                                 preconditions=pre, action=schema.action)

    def self_transition(self, cell: Cell, attr: int, time: int) -> SelfTransition:
        """The persistence variable for one (cell, attribute), with its blockers."""
        blockers = []
        for comp in self.compiled:
            if not any(a == attr for _, a in comp.consumes):
                continue
            kind = comp.schema.target[0]
            for gs in self.grounded_instances(comp.schema, time):
                if kind == "off":
                    if gs.anchor == cell:
                        blockers.append(gs)
                elif (cell, attr) in gs.preconditions:
                    blockers.append(gs)
        return SelfTransition(time=time, cell=cell, attribute=attr,
                              blockers=tuple(blockers))

    def counts(self) -> dict[str, int]:
        w, h, t = self.width, self.height, self.window
        cells = w * h
        cat = self.catalog
        n_obj = len(cat.object_attrs)
        grounded = sum(_popcount(c.anchor_mask) for c in self.compiled) * t
        n_self = cells * len(self.self_transition_attrs) * t
        return {
            "attribute_variables": cells * n_obj * (t + 1),
            "action_variables": cat.n_actions * t,
            "reward_variables": 2 * t,
            "grounded_schemas": grounded,
            "self_transitions": n_self,
            "and_factors": grounded + n_self,
            "or_factors": cells * n_obj * t,
        }

    def stats_report(self) -> str:
        lines = [f"grid {self.width}x{self.height} window {self.window} "
                 f"ungrounded {len(self.compiled)}"]
        for key, value in sorted(self.counts().items()):
            lines.append(f"{key} {value}")
        return "\n".join(lines) + "\n"


def _popcount(v: int) -> int:
    return v.bit_count()


def ground(schema_set: SchemaSet, grid_dims: tuple[int, int], window: int) -> GroundedNetwork:
    """Instantiate all schemas over a (width, height) grid for `window` transitions."""
    width, height = grid_dims
    return GroundedNetwork(schema_set, width, height, window)


# --- Reference per-variable semantics ----------------------------------------

def schema_fires(gs: GroundedSchema, grid: AttributeGrid, action: Action | int | None = None) -> bool:
    """1 iff every precondition bit (and the action literal, if any) is 1."""
    if gs.action is not None and (action is None or int(action) != gs.action):
        return False
    for (x, y), attr in gs.preconditions:
        if not grid.bits[y, x, attr]:
            return False
    return True


def attribute_next(network: GroundedNetwork, cell: Cell, attr: int,
                   grid: AttributeGrid, action: Action | int) -> bool:
    """Next value of one (cell, attribute) variable under the factor semantics."""
    if attr in network.catalog.derived:
        raise ValueError("derived attributes are recomputed, not predicted")
    x, y = cell
    arrived = False
    blocked = False
    for comp in network.compiled:
        kind, arg = comp.schema.target
        relevant_arrival = kind == "attr" and arg == attr
        relevant_block = any(a == attr for _, a in comp.consumes)
        if not (relevant_arrival or relevant_block):
            continue
        for gs in network.grounded_instances(comp.schema, 0):
            if relevant_arrival and gs.anchor == cell and schema_fires(gs, grid, action):
                arrived = True
            if relevant_block and schema_fires(gs, grid, action):
                if kind == "off" and gs.anchor == cell:
                    blocked = True
                elif kind == "attr" and ((x, y), attr) in gs.preconditions:
                    blocked = True
    return arrived or (bool(grid.bits[y, x, attr]) and not blocked)


# --- Bitboard engine -----------------------------------------------------------

def boards_from_grid(grid: AttributeGrid) -> tuple[int, ...]:
    h, w, m = grid.bits.shape
    packed = np.packbits(grid.bits.reshape(h * w, m), axis=0, bitorder="little")
    return tuple(int.from_bytes(packed[:, a].tobytes(), "little") for a in range(m))


def grid_from_boards(boards: tuple[int, ...], width: int, height: int,
                     catalog: Catalog = DEFAULT_CATALOG) -> AttributeGrid:
    cells = width * height
    nbytes = (cells + 7) // 8
    cols = []
    for board in boards:
        raw = np.frombuffer(board.to_bytes(nbytes, "little"), dtype=np.uint8)
        cols.append(np.unpackbits(raw, bitorder="little")[:cells])
    bits = np.stack(cols, axis=1).astype(bool).reshape(height, width, len(boards))
    return AttributeGrid(bits, catalog)


def _shift(board: int, off: int, full_mask: int) -> int:
    if off >= 0:
        return board >> off
    return (board << -off) & full_mask


def _fired_board(comp: _CompiledSchema, boards: tuple[int, ...],
                 action: int | None, full_mask: int) -> int:
    if comp.action is not None and comp.action != action:
        return 0
    fired = comp.anchor_mask
    for off, attr in comp.shifts:
        if not fired:
            return 0
        fired &= _shift(boards[attr], off, full_mask)
    return fired


def _rederive_fast(boards: list[int], network: "GroundedNetwork") -> None:
    cat = network.catalog
    solid = 0
    for a in network._solid_members:
        solid |= boards[a]
    edge = boards[network._edge_members[0]] | boards[network._edge_members[1]]
    full = network._full_mask
    boards[cat.solid] = solid
    boards[cat.edge] = edge
    boards[cat.flat] = solid & ~edge & full
    boards[cat.clear] = ~solid & full


def step_model(network: GroundedNetwork, boards: tuple[int, ...],
               action: Action | int) -> tuple[tuple[int, ...], bool, bool]:
    """One exact model transition: (next boards, positive reward, negative reward)."""
    act = int(action)
    full = network._full_mask
    m = network.catalog.m
    arrival = [0] * m
    blocked = [0] * m
    r_pos = False
    r_neg = False
    for schema_action, anchor, shifts, kind, arg, consumes in network._ops:
        if schema_action is not None and schema_action != act:
            continue
        fired = anchor
        for off, attr in shifts:
            b = boards[attr]
            fired &= (b >> off) if off >= 0 else (b << -off)
            if not fired:
                break
        if not fired:
            continue
        if kind == "attr":
            arrival[arg] |= fired
        elif kind == "reward":
            if arg > 0:
                r_pos = True
            else:
                r_neg = True
        for off, attr in consumes:
            blocked[attr] |= ((fired << off) if off >= 0 else (fired >> -off)) & full
    nxt = [0] * m
    for a in network._object_attrs:
        nxt[a] = arrival[a] | (boards[a] & ~blocked[a] & full)
    _rederive_fast(nxt, network)
    return tuple(nxt), r_pos, r_neg


def simulate_forward(network: GroundedNetwork, grid0: AttributeGrid, actions):
    """Deterministic rollout under the learned model.

    Returns (grids, rewards): len(actions) + 1 grids and one
    (positive, negative) reward pair per step.
    """
    if len(actions) > network.window:
        raise ValueError("action sequence longer than the grounded window")
    boards = boards_from_grid(grid0)
    grids = [grid0]
    rewards: list[tuple[bool, bool]] = []
    for action in actions:
        boards, rp, rm = step_model(network, boards, action)
        grids.append(grid_from_boards(boards, network.width, network.height, network.catalog))
        rewards.append((rp, rm))
    return grids, rewards
