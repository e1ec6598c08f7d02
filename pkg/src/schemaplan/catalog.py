"""The shared cell-attribute vocabulary and training-matrix column layout.

Every grid cell carries M binary attributes.  Physical object attributes
(wall, paddle parts, brick colors, pit marker, direction-tagged ball bits)
describe what occupies the cell; derived attributes (solid, flat, edge,
clear) are fixed boolean functions of the object attributes and exist so
that movement rules are expressible as conjunctions of *present* bits.

Ball bits carry the velocity: ``ball_ne`` means "a ball here moving right
and up".  Wall, paddle and brick attributes are mutually exclusive per
cell; ball bits may stack with each other and (transiently) with paddle
cells, since balls pass through everything that does not bounce them.

Training-matrix columns are versioned and offset-major: for each
neighbourhood offset (row-major over the (2r+1)^2 Chebyshev window,
self included) all M attribute bits, then one one-hot action bit per
action.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .env import ACTIONS

COLUMN_LAYOUT_VERSION = 1

N_PADDLE_PARTS = 2
N_BRICK_COLORS = 8

# (dx, dy) for the four diagonal velocities, fixed order.
BALL_DIRECTIONS: tuple[tuple[int, int], ...] = ((-1, -1), (1, -1), (-1, 1), (1, 1))
_DIRECTION_NAMES = {(-1, -1): "nw", (1, -1): "ne", (-1, 1): "sw", (1, 1): "se"}


def _build_names() -> tuple[str, ...]:
    names = ["wall"]
    names += [f"paddle{i}" for i in range(N_PADDLE_PARTS)]
    names += [f"brick{k}" for k in range(N_BRICK_COLORS)]
    names.append("pit")
    names += [f"ball_{_DIRECTION_NAMES[d]}" for d in BALL_DIRECTIONS]
    names += ["solid", "flat", "edge", "clear"]
    return tuple(names)


@dataclass(frozen=True)
class Catalog:
    """Attribute name table plus the derived-column layout for a given radius."""

    radius: int = 2
    names: tuple[str, ...] = _build_names()

    @property
    def m(self) -> int:
        return len(self.names)

    @property
    def window(self) -> int:
        return 2 * self.radius + 1

    @property
    def n_offsets(self) -> int:
        return self.window * self.window

    @property
    def n_actions(self) -> int:
        return len(ACTIONS)

    @property
    def n_columns(self) -> int:
        return self.n_offsets * self.m + self.n_actions

    # -- attribute indices ----------------------------------------------
    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def wall(self) -> int:
        return 0

    def paddle(self, part: int) -> int:
        return 1 + part

    @property
    def paddle_parts(self) -> range:
        return range(1, 1 + N_PADDLE_PARTS)

    def brick(self, color: int) -> int:
        return 1 + N_PADDLE_PARTS + color

    @property
    def bricks(self) -> range:
        start = 1 + N_PADDLE_PARTS
        return range(start, start + N_BRICK_COLORS)

    @property
    def pit(self) -> int:
        return 1 + N_PADDLE_PARTS + N_BRICK_COLORS

    def ball(self, direction: tuple[int, int]) -> int:
        return self.pit + 1 + BALL_DIRECTIONS.index(direction)

    @property
    def balls(self) -> range:
        return range(self.pit + 1, self.pit + 1 + len(BALL_DIRECTIONS))

    def ball_direction(self, attr: int) -> tuple[int, int]:
        return BALL_DIRECTIONS[attr - (self.pit + 1)]

    @property
    def solid(self) -> int:
        return self.m - 4

    @property
    def flat(self) -> int:
        return self.m - 3

    @property
    def edge(self) -> int:
        return self.m - 2

    @property
    def clear(self) -> int:
        return self.m - 1

    @property
    def derived(self) -> tuple[int, ...]:
        return (self.solid, self.flat, self.edge, self.clear)

    @property
    def object_attrs(self) -> tuple[int, ...]:
        return tuple(a for a in range(self.m) if a not in self.derived)

    @property
    def movable(self) -> tuple[int, ...]:
        """Attributes with consuming self-transition semantics (they move around)."""
        return tuple(self.paddle_parts) + tuple(self.balls)

    @property
    def deactivatable(self) -> tuple[int, ...]:
        """Attributes with learned deactivation targets.

        Movable attributes are included even though consumption blocking
        usually covers their departures: learned movement schemas may pick
        preconditions equivalent in the data but anchored on a different
        family member, and the learned OFF schemas close that gap.
        """
        return tuple(self.paddle_parts) + tuple(self.balls) + tuple(self.bricks)

    # -- column layout ----------------------------------------------------
    def offsets(self) -> tuple[tuple[int, int], ...]:
        r = self.radius
        return tuple((dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1))

    def offset_index(self, dx: int, dy: int) -> int:
        r = self.radius
        if not (-r <= dx <= r and -r <= dy <= r):
            raise ValueError(f"offset ({dx}, {dy}) outside radius {r}")
        return (dy + r) * self.window + (dx + r)

    def column(self, dx: int, dy: int, attr: int) -> int:
        return self.offset_index(dx, dy) * self.m + attr

    def action_column(self, action: int) -> int:
        return self.n_offsets * self.m + int(action)

    def decode_column(self, col: int):
        """Return ('lit', dx, dy, attr) or ('action', a) for a column index."""
        body = self.n_offsets * self.m
        if col >= body:
            return ("action", col - body)
        o, attr = divmod(col, self.m)
        r = self.radius
        dy, dx = divmod(o, self.window)
        return ("lit", dx - r, dy - r, attr)

    def content_hash(self) -> str:
        payload = "|".join(self.names) + f"|r={self.radius}|v={COLUMN_LAYOUT_VERSION}"
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


DEFAULT_CATALOG = Catalog()
