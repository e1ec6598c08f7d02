"""Frames to entity-attribute grids, and grids to supervised training data.

A frame becomes an ``AttributeGrid``: a boolean tensor ``[H, W, M]`` holding
the catalog attributes of every cell.  Transitions become rows of a
``TrainingMatrix``: one row per (frame, cell), holding the radius-r
neighbourhood bits of the cell plus one-hot action bits, labelled with each
attribute's value at that cell one frame later.  Rows are deduplicated with
multiplicities, and rows whose label disagrees across duplicates (stochastic
events such as respawns) are marked contradictory and excluded per target.

Besides the raw per-attribute labels, each row carries deactivation labels
("attribute was on here and switched off") for balls and bricks, and
cell-anchored reward labels fed from environment reward events.  These extra
tracks drive the deactivation and reward schema targets.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .catalog import Catalog, DEFAULT_CATALOG, COLUMN_LAYOUT_VERSION
from .env import ACTIONS, Action, Ball, FrameState, UsageError, VariantSpec

Target = tuple[str, int]  # ("attr", j) | ("off", j) | ("reward", +1 / -1)


def targets_for(catalog: Catalog) -> tuple[Target, ...]:
    """All label tracks carried by a TrainingMatrix, in column order."""
    out: list[Target] = [("attr", j) for j in range(catalog.m)]
    out += [("off", j) for j in catalog.deactivatable]
    out += [("reward", 1), ("reward", -1)]
    return tuple(out)


@dataclass
class AttributeGrid:
    """Binary attribute tensor for one frame."""

    bits: np.ndarray  # bool [H, W, M]
    catalog: Catalog = DEFAULT_CATALOG

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def __eq__(self, other) -> bool:
        return (isinstance(other, AttributeGrid)
                and self.bits.shape == other.bits.shape
                and bool(np.array_equal(self.bits, other.bits)))


def derive_layers(bits: np.ndarray, catalog: Catalog) -> None:
    """Recompute solid/flat/edge/clear in place from the object layers."""
    cat = catalog
    paddle = bits[:, :, list(cat.paddle_parts)].any(axis=2)
    brick = bits[:, :, list(cat.bricks)].any(axis=2)
    solid = bits[:, :, cat.wall] | paddle | brick
    edge = bits[:, :, cat.paddle(0)] | bits[:, :, cat.paddle(cat.paddle_parts.stop - cat.paddle_parts.start - 1)]
    bits[:, :, cat.solid] = solid
    bits[:, :, cat.edge] = edge
    bits[:, :, cat.flat] = solid & ~edge
    bits[:, :, cat.clear] = ~solid


_static_cache: dict[int, tuple[VariantSpec, np.ndarray]] = {}


def _static_layers(spec: VariantSpec, catalog: Catalog) -> np.ndarray:
    key = id(spec)
    hit = _static_cache.get(key)
    if hit is not None and hit[0] is spec:
        return hit[1]
    bits = np.zeros((spec.height, spec.width, catalog.m), dtype=bool)
    for x, y in spec.wall_cells():
        bits[y, x, catalog.wall] = True
    for x, y in spec.pit_cells():
        bits[y, x, catalog.pit] = True
    _static_cache[key] = (spec, bits)
    return bits


def frame_to_grid(state: FrameState, catalog: Catalog = DEFAULT_CATALOG) -> AttributeGrid:
    """Lossless conversion of the symbolic frame into attribute bits."""
    spec = state.spec
    bits = _static_layers(spec, catalog).copy()
    for part, (x, y) in enumerate(state.paddle_cells()):
        bits[y, x, catalog.paddle(part)] = True
    for (x, y), color in state.bricks:
        bits[y, x, catalog.brick(color)] = True
    for ball in state.balls:
        x, y = ball.cell
        bits[y, x, catalog.ball(ball.velocity)] = True
    derive_layers(bits, catalog)
    return AttributeGrid(bits, catalog)


def grid_to_frame(grid: AttributeGrid, spec: VariantSpec, tick: int = 0,
                  score: int = 0, rng_seed: int = 0, rng_calls: int = 0) -> FrameState:
    """Rebuild the symbolic frame a grid encodes (inverse of frame_to_grid)."""
    cat = grid.catalog
    part0 = np.argwhere(grid.bits[:, :, cat.paddle(0)])
    if len(part0) != 1:
        raise UsageError("grid does not contain exactly one paddle")
    paddle_left = int(part0[0][1])
    balls = []
    for attr in cat.balls:
        for y, x in np.argwhere(grid.bits[:, :, attr]):
            balls.append(Ball((int(x), int(y)), cat.ball_direction(attr)))
    bricks = []
    for color in range(len(cat.bricks)):
        for y, x in np.argwhere(grid.bits[:, :, cat.brick(color)]):
            bricks.append(((int(x), int(y)), color))
    return FrameState(
        spec=spec, tick=tick, paddle_left=paddle_left,
        balls=tuple(sorted(balls, key=lambda b: (b.cell, b.velocity))),
        bricks=tuple(sorted(bricks)),
        rng_seed=rng_seed, rng_calls=rng_calls, score=score,
    )


def check_exclusivity(grid: AttributeGrid) -> bool:
    """Wall, paddle parts and brick colors never co-occur on one cell."""
    cat = grid.catalog
    hard = [cat.wall, *cat.paddle_parts, *cat.bricks, cat.pit]
    return bool((grid.bits[:, :, hard].sum(axis=2) <= 1).all())


# --- Neighbourhood extraction ------------------------------------------------

def _padded(grid: AttributeGrid) -> np.ndarray:
    r = grid.catalog.radius
    return np.pad(grid.bits, ((r, r), (r, r), (0, 0)))


def frame_rows(grid: AttributeGrid, action: Action) -> np.ndarray:
    """Rows for every cell of one frame, cell-major (y * W + x). Shape [H*W, D']."""
    cat = grid.catalog
    h, w = grid.height, grid.width
    padded = _padded(grid)
    rows = np.zeros((h * w, cat.n_columns), dtype=bool)
    for o, (dx, dy) in enumerate(cat.offsets()):
        r = cat.radius
        block = padded[r + dy:r + dy + h, r + dx:r + dx + w, :]
        rows[:, o * cat.m:(o + 1) * cat.m] = block.reshape(h * w, cat.m)
    rows[:, cat.action_column(action)] = True
    return rows


def neighborhood_vector(grid: AttributeGrid, cell: tuple[int, int],
                        action: Action) -> np.ndarray:
    """Offset-major neighbourhood bits of one cell plus one-hot action bits."""
    x, y = cell
    if not (0 <= x < grid.width and 0 <= y < grid.height):
        raise UsageError(f"cell {cell} out of bounds")
    cat = grid.catalog
    vec = np.zeros(cat.n_columns, dtype=bool)
    for o, (dx, dy) in enumerate(cat.offsets()):
        nx, ny = x + dx, y + dy
        if 0 <= nx < grid.width and 0 <= ny < grid.height:
            vec[o * cat.m:(o + 1) * cat.m] = grid.bits[ny, nx, :]
    vec[cat.action_column(action)] = True
    return vec


# --- Dataset accumulation -----------------------------------------------------

def _transition_labels(grid_t: AttributeGrid, grid_t1: AttributeGrid,
                       reward_events) -> np.ndarray:
    """Label matrix [H*W, n_targets] for one transition."""
    cat = grid_t.catalog
    h, w = grid_t.height, grid_t.width
    now = grid_t.bits.reshape(h * w, cat.m)
    nxt = grid_t1.bits.reshape(h * w, cat.m)
    cols = [nxt]
    off = now[:, list(cat.deactivatable)] & ~nxt[:, list(cat.deactivatable)]
    cols.append(off)
    rew = np.zeros((h * w, 2), dtype=bool)
    for (x, y), sign in reward_events or ():
        rew[y * w + x, 0 if sign > 0 else 1] = True
    cols.append(rew)
    return np.concatenate(cols, axis=1)


class _RowStats:
    __slots__ = ("first_index", "count", "label_counts")

    def __init__(self, first_index: int):
        self.first_index = first_index
        self.count = 0
        self.label_counts: dict[bytes, int] = {}


class DatasetAccumulator:
    """Streaming deduplicated (X, y) collector over transitions."""

    def __init__(self, catalog: Catalog = DEFAULT_CATALOG):
        self.catalog = catalog
        self.targets = targets_for(catalog)
        self._rows: dict[bytes, _RowStats] = {}
        self._shape: tuple[int, int] | None = None
        self.transitions = 0

    def add_transition(self, grid_t: AttributeGrid, action: Action,
                       grid_t1: AttributeGrid, reward_events=None) -> None:
        if grid_t.bits.shape != grid_t1.bits.shape:
            raise UsageError("consecutive grids must share dimensions")
        if self._shape is None:
            self._shape = grid_t.bits.shape[:2]
        elif grid_t.bits.shape[:2] != self._shape:
            raise UsageError("all transitions in one dataset must share grid dimensions")
        rows = frame_rows(grid_t, action)
        labels = _transition_labels(grid_t, grid_t1, reward_events)
        packed_rows = np.packbits(rows, axis=1)
        packed_labels = np.packbits(labels, axis=1)
        row_w, lab_w = packed_rows.shape[1], packed_labels.shape[1]
        row_buf, lab_buf = packed_rows.tobytes(), packed_labels.tobytes()
        stats = self._rows
        for i in range(rows.shape[0]):
            key = row_buf[i * row_w:(i + 1) * row_w]
            entry = stats.get(key)
            if entry is None:
                entry = stats[key] = _RowStats(len(stats))
            entry.count += 1
            lab = lab_buf[i * lab_w:(i + 1) * lab_w]
            entry.label_counts[lab] = entry.label_counts.get(lab, 0) + 1
        self.transitions += 1

    def finalize(self) -> "TrainingMatrix":
        cat = self.catalog
        n_rows = len(self._rows)
        n_targets = len(self.targets)
        x = np.zeros((n_rows, cat.n_columns), dtype=bool)
        counts = np.zeros(n_rows, dtype=np.int64)
        first_seen = np.zeros(n_rows, dtype=np.int64)
        y = np.zeros((n_rows, n_targets), dtype=bool)
        valid = np.ones((n_rows, n_targets), dtype=bool)
        items = sorted(self._rows.items(), key=lambda kv: kv[1].first_index)
        for i, (key, entry) in enumerate(items):
            bits = np.unpackbits(np.frombuffer(key, dtype=np.uint8))[:cat.n_columns]
            x[i] = bits.astype(bool)
            counts[i] = entry.count
            first_seen[i] = entry.first_index
            ones = np.zeros(n_targets, dtype=np.int64)
            zeros = np.zeros(n_targets, dtype=np.int64)
            for lab_key, c in entry.label_counts.items():
                lab = np.unpackbits(np.frombuffer(lab_key, dtype=np.uint8))[:n_targets].astype(bool)
                ones += lab * c
                zeros += (~lab) * c
            y[i] = ones > 0
            valid[i] = ~((ones > 0) & (zeros > 0))
        return TrainingMatrix(x=x, y=y, valid=valid, counts=counts,
                              first_seen=first_seen, targets=self.targets,
                              catalog=cat)


@dataclass
class TrainingMatrix:
    """Deduplicated design matrix with per-target labels and validity masks.

    ``y[:, t]`` is only meaningful where ``valid[:, t]``; invalid entries are
    rows whose duplicates disagreed on that target's label (removed entirely
    from that target's view).  ``counts`` are pre-dedup multiplicities and
    ``first_seen`` the insertion order, which together drive seed selection.
    """

    x: np.ndarray          # bool [D, D']
    y: np.ndarray          # bool [D, n_targets]
    valid: np.ndarray      # bool [D, n_targets]
    counts: np.ndarray     # int64 [D]
    first_seen: np.ndarray  # int64 [D]
    targets: tuple[Target, ...]
    catalog: Catalog = DEFAULT_CATALOG

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    @property
    def n_columns(self) -> int:
        return self.x.shape[1]

    def target_index(self, target: Target) -> int:
        return self.targets.index(target)

    def target_view(self, target: Target) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(X, y, counts) restricted to rows valid for this target."""
        t = self.target_index(target)
        mask = self.valid[:, t]
        return self.x[mask], self.y[mask, t], self.counts[mask]

    def row_set(self) -> set[tuple[bytes, bytes, bytes]]:
        """Order-independent content fingerprint (X row, labels, validity)."""
        out = set()
        for i in range(self.n_rows):
            out.add((np.packbits(self.x[i]).tobytes(),
                     np.packbits(self.y[i] & self.valid[i]).tobytes(),
                     np.packbits(self.valid[i]).tobytes()))
        return out


def build_dataset(trajectory) -> TrainingMatrix:
    """Build the deduplicated (X, y) matrix from transition triples.

    Each element is ``(grid_t, action, grid_t1)`` or
    ``(grid_t, action, grid_t1, reward_events)`` with reward events given as
    ``[((x, y), sign), ...]``.
    """
    if not trajectory:
        return DatasetAccumulator().finalize()
    first = trajectory[0][0]
    acc = DatasetAccumulator(first.catalog)
    for item in trajectory:
        acc.add_transition(*item)
    return acc.finalize()


# --- Serialization ------------------------------------------------------------

_MAGIC = b"SPTM"
_FORMAT_VERSION = 1


def _target_token(target: Target) -> str:
    kind, arg = target
    if kind == "reward":
        return "reward:+" if arg > 0 else "reward:-"
    return f"{kind}:{arg}"


def _parse_target(token: str) -> Target:
    kind, arg = token.split(":")
    if kind == "reward":
        return ("reward", 1 if arg == "+" else -1)
    return (kind, int(arg))


def save_matrix(matrix: TrainingMatrix, path: str) -> None:
    """Compact binary layout: header, target table, bit-packed rows and labels."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIQI", _FORMAT_VERSION, matrix.catalog.radius,
                             matrix.n_columns, matrix.n_rows, len(matrix.targets)))
        fh.write(matrix.catalog.content_hash().encode("ascii"))
        table = ",".join(_target_token(t) for t in matrix.targets).encode("ascii")
        fh.write(struct.pack("<I", len(table)))
        fh.write(table)
        fh.write(np.packbits(matrix.x, axis=1).tobytes())
        fh.write(np.packbits(matrix.y, axis=1).tobytes())
        fh.write(np.packbits(matrix.valid, axis=1).tobytes())
        fh.write(matrix.counts.astype("<i8").tobytes())
        fh.write(matrix.first_seen.astype("<i8").tobytes())


def load_matrix(path: str, catalog: Catalog = DEFAULT_CATALOG) -> TrainingMatrix:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise UsageError(f"{path}: not a training-matrix file")
        version, radius, n_cols, n_rows, n_targets = struct.unpack("<IIIQI", fh.read(24))
        if version != _FORMAT_VERSION:
            raise UsageError(f"{path}: unsupported format version {version}")
        cat = catalog if catalog.radius == radius else Catalog(radius=radius)
        stored_hash = fh.read(16).decode("ascii")
        if stored_hash != cat.content_hash():
            raise UsageError(f"{path}: catalog hash mismatch")
        if n_cols != cat.n_columns:
            raise UsageError(f"{path}: column count {n_cols} does not match the catalog")
        (table_len,) = struct.unpack("<I", fh.read(4))
        targets = tuple(_parse_target(tok) for tok in fh.read(table_len).decode("ascii").split(",")) \
            if table_len else ()

        def read_bits(rows: int, cols: int) -> np.ndarray:
            width = (cols + 7) // 8
            raw = np.frombuffer(fh.read(rows * width), dtype=np.uint8).reshape(rows, width)
            return np.unpackbits(raw, axis=1)[:, :cols].astype(bool)

        x = read_bits(n_rows, n_cols)
        y = read_bits(n_rows, n_targets)
        valid = read_bits(n_rows, n_targets)
        counts = np.frombuffer(fh.read(8 * n_rows), dtype="<i8").astype(np.int64)
        first_seen = np.frombuffer(fh.read(8 * n_rows), dtype="<i8").astype(np.int64)
    return TrainingMatrix(x=x, y=y, valid=valid, counts=counts, first_seen=first_seen,
                          targets=targets, catalog=cat)


def matrix_to_csv(matrix: TrainingMatrix) -> str:
    """Debug-friendly CSV: one row per distinct pattern, labels blank when contradictory."""
    cat = matrix.catalog
    header = ["count", "first_seen"]
    for o, (dx, dy) in enumerate(cat.offsets()):
        header += [f"({dx};{dy}){name}" for name in cat.names]
    header += [f"action_{a.name}" for a in ACTIONS]
    header += ["y " + _target_token(t) for t in matrix.targets]
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for i in range(matrix.n_rows):
        cells = [str(int(matrix.counts[i])), str(int(matrix.first_seen[i]))]
        cells += [str(int(v)) for v in matrix.x[i]]
        for t in range(len(matrix.targets)):
            cells.append(str(int(matrix.y[i, t])) if matrix.valid[i, t] else "")
        out.write(",".join(cells) + "\n")
    return out.getvalue()
