"""Deterministic grid-cell arcade environments (a family of Breakout variants).

Geometry conventions
--------------------
Cells are addressed as ``(x, y)`` with ``x`` the column (0 at the left) and
``y`` the row (0 at the top).  The top row and both side columns are wall
cells.  The interior cells of the bottom row form the *pit*: a ball that ends
a frame on a pit cell is removed on the next frame with a -1 reward.  The
paddle occupies ``paddle_width`` consecutive cells of a fixed row near the
bottom and moves one cell per LEFT/RIGHT action, clipped at the walls.

Balls move one cell per axis per frame with velocity components in
``{-1, +1}``.  Collisions are resolved against the frame-start snapshot:
a blocked horizontal neighbour flips ``dx``, a blocked vertical neighbour
flips ``dy`` (and also ``dx`` when the struck cell is an outer paddle part),
and a blocked diagonal with both sides free flips both.  Bricks struck by any
of these checks are destroyed.  Balls never collide with each other.

Everything is a pure function of ``(spec, seed, actions)``; replays are
bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Iterable, Mapping

Cell = tuple[int, int]
Velocity = tuple[int, int]

PADDLE_WIDTH = 2  # any wider and paddle moves at walls depend on cells outside a radius-2 neighbourhood


class Action(IntEnum):
    LEFT = 0
    RIGHT = 1
    NOOP = 2


ACTIONS = (Action.LEFT, Action.RIGHT, Action.NOOP)


class VariantId(Enum):
    STANDARD = "Standard"
    MINI = "Mini"
    MIDDLE_WALL = "MiddleWall"
    OFFSET_PADDLE = "OffsetPaddle"
    RANDOM_TARGET = "RandomTarget"
    JUGGLING = "Juggling"
    HALF_NEGATIVE = "HalfNegative"
    RANDOM_NEGATIVE = "RandomNegative"
    CUSTOM = "Custom"


class ConfigError(ValueError):
    """Raised for geometrically or semantically invalid variant specs."""


class UsageError(RuntimeError):
    """Raised when the environment API is driven incorrectly (e.g. stepping a done state)."""


@dataclass(frozen=True)
class BallSpawn:
    cell: Cell
    velocity: Velocity


@dataclass(frozen=True)
class VariantSpec:
    """Static description of one environment variant."""

    variant_id: VariantId
    width: int
    height: int
    paddle_width: int = PADDLE_WIDTH
    paddle_row: int | None = None  # default: height - 2 (directly above the pit row)
    brick_layout: tuple[tuple[Cell, int], ...] = ()
    positive_colors: frozenset[int] = frozenset({0, 1, 2})
    negative_colors: frozenset[int] = frozenset()
    ball_spawns: tuple[BallSpawn, ...] = ()
    spawn_jitter: int = 0  # max |dx| applied to spawn columns from the reset seed
    frame_cap: int = 2500
    extra_walls: tuple[Cell, ...] = ()
    bordered: bool = True
    relaunch_frames: int | None = 10  # lost balls reappear above the paddle after this delay
    lives: int | None = 3  # total ball lives per episode; None = unlimited relaunches
    random_target: bool = False  # RandomTarget: linked brick group that respawns
    target_group_size: int = 3
    randomize_brick_colors: bool = False  # RandomNegative: colors redrawn per reset

    def resolved_paddle_row(self) -> int:
        return self.height - 2 if self.paddle_row is None else self.paddle_row

    def wall_cells(self) -> frozenset[Cell]:
        cells = set(self.extra_walls)
        if self.bordered:
            for x in range(self.width):
                cells.add((x, 0))
            for y in range(self.height):
                cells.add((0, y))
                cells.add((self.width - 1, y))
        return frozenset(cells)

    def pit_cells(self) -> frozenset[Cell]:
        if not self.bordered:
            return frozenset()
        return frozenset((x, self.height - 1) for x in range(1, self.width - 1))

    def paddle_cells(self, paddle_left: int) -> tuple[Cell, ...]:
        row = self.resolved_paddle_row()
        return tuple((paddle_left + i, row) for i in range(self.paddle_width))

    def paddle_min_left(self) -> int:
        return 1 if self.bordered else 0

    def paddle_max_left(self) -> int:
        margin = 1 if self.bordered else 0
        return self.width - margin - self.paddle_width

    def initial_paddle_left(self) -> int:
        return (self.width - self.paddle_width) // 2

    def validate(self) -> None:
        if self.width < 4 or self.height < 3:
            raise ConfigError(f"grid {self.width}x{self.height} is too small")
        if not 1 <= self.paddle_width <= self.width - 2:
            raise ConfigError(f"paddle width {self.paddle_width} does not fit")
        row = self.resolved_paddle_row()
        if not 0 < row < self.height - 1:
            raise ConfigError(f"paddle row {row} outside the interior")
        walls = self.wall_cells()
        pit = self.pit_cells()
        paddle = set(self.paddle_cells(self.initial_paddle_left()))
        bricks = {cell for cell, _ in self.brick_layout}
        if len(bricks) != len(self.brick_layout):
            raise ConfigError("duplicate brick cells in layout")
        spawn_cells = set()
        for spawn in self.ball_spawns:
            x, y = spawn.cell
            for dx in range(-self.spawn_jitter, self.spawn_jitter + 1):
                spawn_cells.add((x + dx, y))
            if spawn.velocity[0] not in (-1, 1) or spawn.velocity[1] not in (-1, 1):
                raise ConfigError(f"spawn velocity {spawn.velocity} must be diagonal")
        groups = [("bricks", bricks), ("paddle", paddle), ("spawns", spawn_cells)]
        for name, cells in groups:
            for cell in cells:
                if not (0 <= cell[0] < self.width and 0 <= cell[1] < self.height):
                    raise ConfigError(f"{name} cell {cell} out of bounds")
                if cell in walls:
                    raise ConfigError(f"{name} cell {cell} overlaps a wall")
                if cell in pit:
                    raise ConfigError(f"{name} cell {cell} overlaps the pit row")
        for (na, a), (nb, b) in ((groups[0], groups[1]), (groups[0], groups[2]), (groups[1], groups[2])):
            overlap = a & b
            if overlap:
                raise ConfigError(f"{na} and {nb} overlap at {sorted(overlap)}")
        if self.positive_colors & self.negative_colors:
            raise ConfigError("positive and negative color sets intersect")
        if self.variant_id in (VariantId.HALF_NEGATIVE, VariantId.RANDOM_NEGATIVE):
            if len(self.positive_colors) != 6 or len(self.negative_colors) != 2:
                raise ConfigError("half/random negative variants need 6 positive and 2 negative colors")
        for _, color in self.brick_layout:
            if color not in self.positive_colors and color not in self.negative_colors:
                raise ConfigError(f"brick color {color} has no reward sign")


@dataclass(frozen=True)
class Ball:
    cell: Cell
    velocity: Velocity


@dataclass(frozen=True)
class FrameState:
    """One frame of a running episode. Treated as immutable; `step` returns a new state."""

    spec: VariantSpec
    tick: int
    paddle_left: int
    balls: tuple[Ball, ...]
    bricks: tuple[tuple[Cell, int], ...]  # sorted by cell for canonical equality
    rng_seed: int
    rng_calls: int
    score: int
    done: bool = False
    spare_lives: int | None = None  # relaunches left; None = unlimited
    relaunch_queue: tuple[int, ...] = ()  # ticks at which lost balls reappear
    last_destroyed: tuple[tuple[Cell, int], ...] = ()  # bricks removed by the step that produced this state
    last_lost_balls: int = 0
    last_reward_events: tuple[tuple[Cell, int], ...] = ()  # (cell, +1/-1) per reward of the producing step

    def brick_map(self) -> dict[Cell, int]:
        return dict(self.bricks)

    def paddle_cells(self) -> tuple[Cell, ...]:
        return self.spec.paddle_cells(self.paddle_left)


def _mix64(a: int, b: int) -> int:
    """SplitMix64-style mixer; platform-stable replacement for seeded hashing."""
    z = (a * 0x9E3779B97F4A7C15 + b * 0xBF58476D1CE4E5B9 + 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def _draw(seed: int, calls: int, n: int) -> int:
    """Deterministic draw from [0, n) for the given rng state."""
    return _mix64(seed, calls) % n


def _jittered_spawns(spec: VariantSpec, seed: int) -> tuple[Ball, ...]:
    balls = []
    lo = 1 if spec.bordered else 0
    hi = spec.width - 2 if spec.bordered else spec.width - 1
    for i, spawn in enumerate(spec.ball_spawns):
        x, y = spawn.cell
        dx, dy = spawn.velocity
        if spec.spawn_jitter:
            span = 2 * spec.spawn_jitter + 1
            x = x - spec.spawn_jitter + _draw(seed, 2 * i, span)
            x = min(max(x, lo), hi)
            if _draw(seed, 2 * i + 1, 2):
                dx = -dx
        balls.append(Ball((x, y), (dx, dy)))
    return tuple(balls)


def _random_layout(spec: VariantSpec, seed: int) -> tuple[tuple[Cell, int], ...]:
    """Redraw brick colors: each slot negative with probability 1/3, else positive."""
    positives = sorted(spec.positive_colors)
    negatives = sorted(spec.negative_colors)
    layout = []
    for i, (cell, _) in enumerate(spec.brick_layout):
        if _draw(seed, 1000 + 2 * i, 3) == 0:
            color = negatives[_draw(seed, 1001 + 2 * i, len(negatives))]
        else:
            color = positives[_draw(seed, 1001 + 2 * i, len(positives))]
        layout.append((cell, color))
    return tuple(sorted(layout))


def _place_target_group(spec: VariantSpec, seed: int, calls: int,
                        forbidden: frozenset[Cell]) -> tuple[tuple[Cell, int], int]:
    """Pick a random in-bounds anchor for the linked brick group, avoiding `forbidden`."""
    size = spec.target_group_size
    row_lo, row_hi = 2, max(3, spec.height - 6)
    col_lo, col_hi = 1, spec.width - 1 - size
    attempts = 0
    while True:
        x = col_lo + _draw(seed, calls + 2 * attempts, col_hi - col_lo + 1)
        y = row_lo + _draw(seed, calls + 2 * attempts + 1, row_hi - row_lo + 1)
        cells = tuple((x + i, y) for i in range(size))
        attempts += 1
        if all(c not in forbidden for c in cells):
            return cells, calls + 2 * attempts
        if attempts > 10_000:
            raise ConfigError("no room to place the target brick group")


def reset(spec: VariantSpec, seed: int) -> FrameState:
    """Deterministic initial frame for (spec, seed)."""
    spec.validate()
    bricks = spec.brick_layout
    if spec.randomize_brick_colors:
        bricks = _random_layout(spec, seed)
    rng_calls = 0
    if spec.random_target:
        color = sorted(spec.positive_colors)[0]
        forbidden = spec.wall_cells() | spec.pit_cells() | set(spec.paddle_cells(spec.initial_paddle_left()))
        cells, rng_calls = _place_target_group(spec, seed, rng_calls, frozenset(forbidden))
        bricks = tuple((c, color) for c in cells)
    spare = None if spec.lives is None else max(0, spec.lives - len(spec.ball_spawns))
    return FrameState(
        spec=spec,
        tick=0,
        paddle_left=spec.initial_paddle_left(),
        balls=_jittered_spawns(spec, seed),
        bricks=tuple(sorted(bricks)),
        rng_seed=seed,
        rng_calls=rng_calls,
        score=0,
        spare_lives=spare,
    )


def _step_ball(ball: Ball, solid: frozenset[Cell], deflect: Mapping[Cell, int],
               bricks: Mapping[Cell, int]) -> tuple[Ball, list[Cell]]:
    """Advance one ball against the frame-start snapshot; returns struck brick cells.

    `deflect` maps paddle cells to an outgoing horizontal direction: balls
    bouncing up off the paddle leave toward the side of the struck part,
    which is what gives the player aiming control.
    """
    (x, y), (dx, dy) = ball.cell, ball.velocity
    struck = []
    h_cell, v_cell, d_cell = (x + dx, y), (x, y + dy), (x + dx, y + dy)
    hx, vx = h_cell in solid, v_cell in solid
    ndx, ndy = dx, dy
    if hx:
        ndx = -dx
        if h_cell in bricks:
            struck.append(h_cell)
    if vx:
        ndy = -dy
        if v_cell in bricks:
            struck.append(v_cell)
        if not hx and v_cell in deflect:
            ndx = deflect[v_cell]
    if not hx and not vx and d_cell in solid:
        ndx, ndy = -dx, -dy
        if d_cell in bricks:
            struck.append(d_cell)
    target = (x + ndx, y + ndy)
    if target in solid:
        return Ball((x, y), (ndx, ndy)), struck  # pocketed: reflect in place
    return Ball(target, (ndx, ndy)), struck


def step(state: FrameState, action: Action) -> tuple[FrameState, int, bool]:
    """Advance one frame. Raises UsageError when called on a finished episode."""
    if state.done:
        raise UsageError("step() called on a finished episode")
    spec = state.spec
    walls = spec.wall_cells()
    pit = spec.pit_cells()
    bricks = state.brick_map()
    paddle = spec.paddle_cells(state.paddle_left)
    mid = (spec.paddle_width - 1) / 2
    deflect = {cell: (-1 if i < mid else 1) for i, cell in enumerate(paddle) if i != mid}
    solid = frozenset(walls | set(bricks) | set(paddle))

    reward = 0
    rng_calls = state.rng_calls
    relaunch_queue = list(state.relaunch_queue)

    # Balls resting on the pit row vanish before anything moves.
    survivors = []
    lost = 0
    spare = state.spare_lives
    events: list[tuple[Cell, int]] = []
    for ball in state.balls:
        if ball.cell in pit:
            reward -= 1
            lost += 1
            events.append((ball.cell, -1))
            if spec.relaunch_frames is not None and (spare is None or spare > 0):
                relaunch_queue.append(state.tick + spec.relaunch_frames)
                if spare is not None:
                    spare -= 1
        else:
            survivors.append(ball)

    destroyed: dict[Cell, int] = {}
    moved = []
    for ball in survivors:
        new_ball, struck = _step_ball(ball, solid, deflect, bricks)
        moved.append(new_ball)
        for cell in struck:
            destroyed.setdefault(cell, bricks[cell])

    if spec.random_target and destroyed:
        # Hitting any group brick takes the whole group down.
        for cell, color in state.bricks:
            destroyed.setdefault(cell, color)

    for cell, color in destroyed.items():
        sign = 1 if color in spec.positive_colors else -1
        reward += sign
        events.append((cell, sign))

    remaining = {cell: color for cell, color in state.bricks if cell not in destroyed}

    if spec.random_target and destroyed:
        color = sorted(spec.positive_colors)[0]
        forbidden = set(walls) | set(pit) | set(paddle) | {b.cell for b in moved}
        cells, rng_calls = _place_target_group(spec, state.rng_seed, rng_calls, frozenset(forbidden))
        for c in cells:
            remaining[c] = color

    # Paddle clipping uses the frame-start snapshot, like ball collisions.
    min_left, max_left = spec.paddle_min_left(), spec.paddle_max_left()
    row = spec.resolved_paddle_row()
    blockers = walls | set(bricks)
    paddle_left = state.paddle_left
    if action == Action.LEFT:
        dest = (paddle_left - 1, row)
        if paddle_left - 1 >= min_left and dest not in blockers:
            paddle_left -= 1
    elif action == Action.RIGHT:
        dest = (paddle_left + spec.paddle_width, row)
        if paddle_left + 1 <= max_left and dest not in blockers:
            paddle_left += 1

    tick = state.tick + 1
    due = [t for t in relaunch_queue if t <= tick]
    relaunch_queue = [t for t in relaunch_queue if t > tick]
    for _ in due:
        x = paddle_left + spec.paddle_width // 2
        y = max(1, spec.resolved_paddle_row() - 3)
        moved.append(Ball((x, y), (1, -1)))

    balls_out = (not moved) and (not relaunch_queue)
    had_bricks = bool(spec.brick_layout) or spec.random_target
    cleared = had_bricks and not remaining and not spec.random_target
    done = tick >= spec.frame_cap or cleared or (balls_out and bool(spec.ball_spawns))

    new_state = FrameState(
        spec=spec,
        tick=tick,
        paddle_left=paddle_left,
        balls=tuple(moved),
        bricks=tuple(sorted(remaining.items())),
        rng_seed=state.rng_seed,
        rng_calls=rng_calls,
        score=state.score + reward,
        done=done,
        spare_lives=spare,
        relaunch_queue=tuple(relaunch_queue),
        last_destroyed=tuple(sorted(destroyed.items())),
        last_lost_balls=lost,
        last_reward_events=tuple(sorted(events)),
    )
    return new_state, reward, done


BACKGROUND = " "
GLYPHS = {"wall": "#", "pit": "_", "paddle": "=", "ball": "o"}


def render_ascii(state: FrameState) -> str:
    """One character per cell; balls drawn last so overlaps show the ball."""
    spec = state.spec
    rows = [[BACKGROUND] * spec.width for _ in range(spec.height)]
    for x, y in spec.pit_cells():
        rows[y][x] = GLYPHS["pit"]
    for x, y in spec.wall_cells():
        rows[y][x] = GLYPHS["wall"]
    for (x, y), color in state.bricks:
        rows[y][x] = str(color)
    for x, y in state.paddle_cells():
        rows[y][x] = GLYPHS["paddle"]
    for ball in state.balls:
        x, y = ball.cell
        rows[y][x] = GLYPHS["ball"]
    return "\n".join("".join(r) for r in rows)


# --- Variant builders -------------------------------------------------------

def _brick_rows(width: int, columns: int, rows: int, top: int,
                colors: Iterable[int]) -> tuple[tuple[Cell, int], ...]:
    left = (width - columns) // 2
    layout = []
    color_list = list(colors)
    for r in range(rows):
        for c in range(columns):
            layout.append(((left + c, top + r), color_list[r % len(color_list)]))
    return tuple(layout)


def mini_spec() -> VariantSpec:
    w, h = 24, 18
    return VariantSpec(
        variant_id=VariantId.MINI,
        width=w, height=h,
        brick_layout=_brick_rows(w, 8, 3, 3, (0, 1, 2)),
        ball_spawns=(BallSpawn((w // 2, 9), (1, 1)),),
        spawn_jitter=9,
    )


def standard_spec() -> VariantSpec:
    w, h = 32, 24
    return VariantSpec(
        variant_id=VariantId.STANDARD,
        width=w, height=h,
        brick_layout=_brick_rows(w, 10, 3, 5, (0, 1, 2)),
        ball_spawns=(BallSpawn((w // 2, 12), (1, 1)),),
        spawn_jitter=13,
    )


def middle_wall_spec() -> VariantSpec:
    base = mini_spec()
    wall_y = 10
    walls = tuple((x, wall_y) for x in range(8, 16))
    return replace(base, variant_id=VariantId.MIDDLE_WALL, extra_walls=walls)


def offset_paddle_spec() -> VariantSpec:
    base = mini_spec()
    return replace(base, variant_id=VariantId.OFFSET_PADDLE, paddle_row=base.height - 3)


def random_target_spec() -> VariantSpec:
    base = mini_spec()
    return replace(base, variant_id=VariantId.RANDOM_TARGET,
                   brick_layout=(), random_target=True)


def juggling_spec() -> VariantSpec:
    # Side posts narrow the arena so one paddle can keep three phased balls
    # alive: without them, conflicting far-apart descents force losses no
    # policy can prevent.
    base = mini_spec()
    posts = tuple((x, y) for x in (6, 17) for y in range(1, base.height - 1))
    return replace(
        base,
        variant_id=VariantId.JUGGLING,
        brick_layout=(),
        extra_walls=posts,
        ball_spawns=(
            BallSpawn((10, 8), (1, 1)),
            BallSpawn((12, 4), (1, -1)),
            BallSpawn((13, 12), (-1, -1)),
        ),
        spawn_jitter=1,
        lives=None,
    )


def half_negative_spec() -> VariantSpec:
    base = mini_spec()
    w = base.width
    left = (w - 8) // 2
    layout = []
    positives = (0, 1, 2, 3, 4, 5)
    negatives = (6, 7)
    for r in range(3):
        for c in range(8):
            cell = (left + c, 3 + r)
            if c < 4:
                layout.append((cell, positives[(r * 4 + c) % 6]))
            else:
                layout.append((cell, negatives[(r + c) % 2]))
    return replace(base, variant_id=VariantId.HALF_NEGATIVE,
                   brick_layout=tuple(layout),
                   positive_colors=frozenset(positives),
                   negative_colors=frozenset(negatives),
                   frame_cap=1000)


def random_negative_spec() -> VariantSpec:
    base = half_negative_spec()
    return replace(base, variant_id=VariantId.RANDOM_NEGATIVE,
                   randomize_brick_colors=True, frame_cap=2500)


_BUILDERS = {
    VariantId.STANDARD: standard_spec,
    VariantId.MINI: mini_spec,
    VariantId.MIDDLE_WALL: middle_wall_spec,
    VariantId.OFFSET_PADDLE: offset_paddle_spec,
    VariantId.RANDOM_TARGET: random_target_spec,
    VariantId.JUGGLING: juggling_spec,
    VariantId.HALF_NEGATIVE: half_negative_spec,
    VariantId.RANDOM_NEGATIVE: random_negative_spec,
}


def variant_spec(name: str | VariantId) -> VariantSpec:
    if isinstance(name, str):
        try:
            name = VariantId(name)
        except ValueError:
            raise ConfigError(f"unknown variant {name!r}") from None
    return _BUILDERS[name]()


# --- Textual config files ---------------------------------------------------
#
# Key-value format, one `key = value` per line, '#' comments.  Either start
# from a named variant and override scalars, or describe a custom grid:
#
#   variant = Mini           # optional base
#   frame_cap = 500          # scalar overrides
#   paddle_row = 15
#   width = 12               # custom grids (no `variant` line)
#   height = 10
#   brick = 4,2,1            # x,y,color        (repeatable)
#   ball = 6,5,1,1           # x,y,dx,dy        (repeatable)
#   wall = 5,4               # extra wall cells (repeatable)
#   positive_colors = 0,1,2
#   negative_colors = 6,7
#   spawn_jitter = 3

_SCALAR_KEYS = {
    "width": int, "height": int, "paddle_width": int, "paddle_row": int,
    "frame_cap": int, "spawn_jitter": int, "relaunch_frames": int,
    "target_group_size": int, "lives": int,
    "bordered": None, "random_target": None, "randomize_brick_colors": None,
}


def _parse_bool(value: str) -> bool:
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def load_variant_config(path: str) -> VariantSpec:
    scalars: dict[str, object] = {}
    bricks: list[tuple[Cell, int]] = []
    balls: list[BallSpawn] = []
    walls: list[Cell] = []
    colors: dict[str, frozenset[int]] = {}
    base: VariantSpec | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "variant":
                base = variant_spec(value)
            elif key == "brick":
                x, y, color = (int(v) for v in value.split(","))
                bricks.append(((x, y), color))
            elif key == "ball":
                x, y, dx, dy = (int(v) for v in value.split(","))
                balls.append(BallSpawn((x, y), (dx, dy)))
            elif key == "wall":
                x, y = (int(v) for v in value.split(","))
                walls.append((x, y))
            elif key in ("positive_colors", "negative_colors"):
                colors[key] = frozenset(int(v) for v in value.split(",") if v.strip())
            elif key in _SCALAR_KEYS:
                caster = _SCALAR_KEYS[key]
                scalars[key] = _parse_bool(value) if caster is None else caster(value)
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    if base is None:
        if "width" not in scalars or "height" not in scalars:
            raise ConfigError(f"{path}: custom configs need width and height")
        base = VariantSpec(variant_id=VariantId.CUSTOM,
                           width=int(scalars.pop("width")),
                           height=int(scalars.pop("height")))
    else:
        scalars.pop("width", None)
        scalars.pop("height", None)
    overrides: dict[str, object] = dict(scalars)
    if bricks:
        overrides["brick_layout"] = tuple(bricks)
    if balls:
        overrides["ball_spawns"] = tuple(balls)
    if walls:
        overrides["extra_walls"] = tuple(walls)
    overrides.update(colors)
    spec = replace(base, **overrides)
    spec.validate()
    return spec
