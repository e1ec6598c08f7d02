"""Hand-written ground-truth rule set for the grid physics.

Used as a fixture: it lets network/planner tests run against exact dynamics
without training, and serves as an oracle the learner's output is compared to
(by behaviour, not by syntactic equality).
"""

from __future__ import annotations

from schemaplan.catalog import BALL_DIRECTIONS, DEFAULT_CATALOG, Catalog
from schemaplan.env import Action
from schemaplan.learner import SchemaSet, UngroundedSchema


def _lit(dx, dy, attr):
    return (dx, dy, attr)


def ball_arrival_schemas(cat: Catalog):
    """All movement/bounce/stuck rules, keyed by arriving direction."""
    out = []
    parts = list(cat.paddle_parts)
    for dxp, dyp in BALL_DIRECTIONS:
        target = ("attr", cat.ball((dxp, dyp)))
        # the paddle part whose strike deflects a ball toward dxp
        deflector = parts[0] if dxp < 0 else parts[-1]

        def mk(lits):
            out.append(UngroundedSchema(target, tuple(sorted(lits)), None))

        # free flight
        mk([_lit(-dxp, -dyp, cat.ball((dxp, dyp))),
            _lit(0, -dyp, cat.clear), _lit(-dxp, 0, cat.clear), _lit(0, 0, cat.clear)])
        # horizontal bounce (dx flipped by a solid side cell)
        mk([_lit(-dxp, -dyp, cat.ball((-dxp, dyp))),
            _lit(-2 * dxp, -dyp, cat.solid), _lit(-dxp, 0, cat.clear), _lit(0, 0, cat.clear)])
        # vertical bounce off a flat surface (dy flipped)
        mk([_lit(-dxp, -dyp, cat.ball((dxp, -dyp))),
            _lit(-dxp, -2 * dyp, cat.flat), _lit(0, -dyp, cat.clear), _lit(0, 0, cat.clear)])
        # vertical bounce off a deflecting paddle part (dy flipped, dx set by struck side)
        for pre_dx in (-1, 1):
            mk([_lit(-dxp, -dyp, cat.ball((pre_dx, -dyp))),
                _lit(-dxp, -2 * dyp, deflector),
                _lit(pre_dx - dxp, -dyp, cat.clear), _lit(0, 0, cat.clear)])
        # corner pocket: both side cells solid (full reversal)
        mk([_lit(-dxp, -dyp, cat.ball((-dxp, -dyp))),
            _lit(-2 * dxp, -dyp, cat.solid), _lit(-dxp, -2 * dyp, cat.solid), _lit(0, 0, cat.clear)])
        # diagonal block with both sides free (full reversal)
        mk([_lit(-dxp, -dyp, cat.ball((-dxp, -dyp))),
            _lit(-2 * dxp, -dyp, cat.clear), _lit(-dxp, -2 * dyp, cat.clear),
            _lit(-2 * dxp, -2 * dyp, cat.solid), _lit(0, 0, cat.clear)])
        # stuck variants: the reflected target cell is itself blocked, ball stays.
        mk([_lit(0, 0, cat.ball((-dxp, dyp))),
            _lit(-dxp, 0, cat.solid), _lit(0, dyp, cat.clear), _lit(dxp, dyp, cat.solid)])
        mk([_lit(0, 0, cat.ball((dxp, -dyp))),
            _lit(0, -dyp, cat.flat), _lit(dxp, 0, cat.clear), _lit(dxp, dyp, cat.solid)])
        for pre_dx in (-1, 1):
            mk([_lit(0, 0, cat.ball((pre_dx, -dyp))),
                _lit(0, -dyp, deflector), _lit(pre_dx, 0, cat.clear), _lit(dxp, dyp, cat.solid)])
        mk([_lit(0, 0, cat.ball((-dxp, -dyp))),
            _lit(-dxp, 0, cat.solid), _lit(0, -dyp, cat.solid), _lit(dxp, dyp, cat.solid)])
        mk([_lit(0, 0, cat.ball((-dxp, -dyp))),
            _lit(-dxp, 0, cat.clear), _lit(0, -dyp, cat.clear),
            _lit(-dxp, -dyp, cat.solid), _lit(dxp, dyp, cat.solid)])
    return out


def paddle_schemas(cat: Catalog):
    out = []
    n_parts = len(list(cat.paddle_parts))
    for q in range(n_parts):
        target = ("attr", cat.paddle(q))
        out.append(UngroundedSchema(
            target, tuple(sorted([_lit(1, 0, cat.paddle(q)), _lit(-q, 0, cat.clear)])),
            Action.LEFT.value))
        out.append(UngroundedSchema(
            target, tuple(sorted([_lit(-1, 0, cat.paddle(q)),
                                  _lit(n_parts - 1 - q, 0, cat.clear)])),
            Action.RIGHT.value))
    return out


def _hit_geometries(cat: Catalog):
    """(ball literal(s), extra clears) for every way a ball strikes the anchor cell."""
    geoms = []
    for dx, dy in BALL_DIRECTIONS:
        geoms.append(([_lit(-dx, 0, cat.ball((dx, dy)))], []))                     # side hit
        geoms.append(([_lit(0, -dy, cat.ball((dx, dy)))], []))                     # vertical hit
        geoms.append(([_lit(-dx, -dy, cat.ball((dx, dy)))],
                      [_lit(0, -dy, cat.clear), _lit(-dx, 0, cat.clear)]))         # diagonal hit
    return geoms


def brick_off_schemas(cat: Catalog, colors=range(8)):
    out = []
    for color in colors:
        target = ("off", cat.brick(color))
        for ball_lits, clears in _hit_geometries(cat):
            lits = [_lit(0, 0, cat.brick(color))] + ball_lits + clears
            out.append(UngroundedSchema(target, tuple(sorted(lits)), None))
    return out


def ball_off_schemas(cat: Catalog):
    out = []
    for d in BALL_DIRECTIONS:
        out.append(UngroundedSchema(("off", cat.ball(d)),
                                    tuple(sorted([_lit(0, 0, cat.ball(d)), _lit(0, 0, cat.pit)])),
                                    None))
    return out


def reward_schemas(cat: Catalog, positive_colors, negative_colors):
    out = []
    for sign, colors in ((1, positive_colors), (-1, negative_colors)):
        for color in sorted(colors):
            for ball_lits, clears in _hit_geometries(cat):
                lits = [_lit(0, 0, cat.brick(color))] + ball_lits + clears
                out.append(UngroundedSchema(("reward", sign), tuple(sorted(lits)), None))
    for d in BALL_DIRECTIONS:
        out.append(UngroundedSchema(("reward", -1),
                                    tuple(sorted([_lit(0, 0, cat.ball(d)), _lit(0, 0, cat.pit)])),
                                    None))
    return out


def canonical_schema_set(positive_colors=(0, 1, 2), negative_colors=(),
                         catalog: Catalog = DEFAULT_CATALOG) -> SchemaSet:
    """The complete hand-derived rule set for the environment physics."""
    schemas = (ball_arrival_schemas(catalog) + paddle_schemas(catalog)
               + brick_off_schemas(catalog)
               + ball_off_schemas(catalog)
               + reward_schemas(catalog, positive_colors, negative_colors))
    out = SchemaSet(catalog=catalog, params={"source": "canonical"})
    for schema in schemas:
        out.by_target.setdefault(schema.target, ())
        out.by_target[schema.target] = out.by_target[schema.target] + (schema,)
    return out
