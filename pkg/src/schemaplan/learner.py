"""Greedy schema learning over binary training rows.

A schema is a conjunction of neighbourhood bits (plus optionally an action
bit) predicting one target track.  Prediction for a set of schemas is the OR
of their firings; a schema fires on a row when every selected column is 1.

Learning greedily adds schemas with perfect precision (no firing on a
label-0 row) and fresh recall.  Each candidate is found by a three-step
relaxation anchored on a seed row:

1.  cluster LP  - over the seed row's support, minimise the number of
    uncovered positives kept out while forcing every negative row to violate
    at least one chosen precondition;
2.  simplify LP - minimise the total precondition mass subject to the same
    negative constraints plus equalities pinning every newly solved row;
3.  binarize    - exact branch-and-bound over the surviving support.

Restricting the variables to the seed row's support makes the "solved set"
equality constraints structural: any column the seed lacks is forced to
zero, so both LPs stay small and exactly faithful.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .catalog import Catalog, DEFAULT_CATALOG
from .env import ACTIONS, Action
from .lp import LPProblem, minimize_binary_cover, solve_lp
from .percept import Target, TrainingMatrix, targets_for

SCHEMA_FORMAT_VERSION = 1


class SchemaFormatError(ValueError):
    """Raised when a schema file cannot be parsed or belongs to another catalog."""


@dataclass(frozen=True)
class UngroundedSchema:
    """Translation-invariant conjunction: neighbourhood literals -> target."""

    target: Target
    literals: tuple[tuple[int, int, int], ...]  # (dx, dy, attr), sorted
    action: int | None = None

    def columns(self, catalog: Catalog) -> tuple[int, ...]:
        cols = [catalog.column(dx, dy, attr) for dx, dy, attr in self.literals]
        if self.action is not None:
            cols.append(catalog.action_column(self.action))
        return tuple(cols)

    @property
    def n_bits(self) -> int:
        return len(self.literals) + (self.action is not None)

    def fires_on(self, row: np.ndarray, catalog: Catalog) -> bool:
        return bool(row[list(self.columns(catalog))].all())


def schema_from_columns(target: Target, cols, catalog: Catalog) -> UngroundedSchema:
    literals = []
    action = None
    for col in cols:
        kind, *rest = catalog.decode_column(int(col))
        if kind == "action":
            if action is not None:
                raise ValueError("schema selects two action bits")
            action = rest[0]
        else:
            literals.append(tuple(rest))
    return UngroundedSchema(target, tuple(sorted(literals)), action)


def predict(schemas, x: np.ndarray, catalog: Catalog = DEFAULT_CATALOG) -> np.ndarray:
    """OR of schema firings per row; empty schema list predicts all zeros."""
    out = np.zeros(x.shape[0], dtype=bool)
    for schema in schemas:
        cols = list(schema.columns(catalog))
        out |= x[:, cols].all(axis=1)
    return out


@dataclass
class SchemaSet:
    """Per-target schema lists plus the metadata they were learned under."""

    catalog: Catalog = DEFAULT_CATALOG
    by_target: dict[Target, tuple[UngroundedSchema, ...]] = field(default_factory=dict)
    params: dict[str, object] = field(default_factory=dict)

    def schemas(self, target: Target) -> tuple[UngroundedSchema, ...]:
        return self.by_target.get(target, ())

    def all_schemas(self) -> tuple[UngroundedSchema, ...]:
        out = []
        for target in sorted(self.by_target, key=_target_sort_key):
            out.extend(self.by_target[target])
        return tuple(out)

    @property
    def n_schemas(self) -> int:
        return sum(len(v) for v in self.by_target.values())

    def content_hash(self) -> str:
        return hashlib.sha256(to_text(self).encode()).hexdigest()


def evaluate_fw(schema_set: SchemaSet, x: np.ndarray) -> dict[Target, np.ndarray]:
    """Predictions y = f_W(X) for every target in the set."""
    if x.shape[1] != schema_set.catalog.n_columns:
        raise ValueError("matrix column layout does not match the schema catalog")
    return {target: predict(schemas, x, schema_set.catalog)
            for target, schemas in schema_set.by_target.items()}


def objective(schemas, x: np.ndarray, y: np.ndarray, c,
              catalog: Catalog = DEFAULT_CATALOG) -> Fraction:
    """Prediction-error rate plus complexity penalty, in exact rationals."""
    d = len(y)
    pred = predict(schemas, x, catalog) if d else np.zeros(0, dtype=bool)
    errors = int(np.count_nonzero(pred != y))
    bits = sum(s.n_bits for s in schemas)
    value = Fraction(c) * bits
    if d:
        value += Fraction(errors, d)
    return value


# --- LP steps -----------------------------------------------------------------

@dataclass
class ClusterResult:
    status: str                 # "ok" | "infeasible" | "no_positive"
    w: np.ndarray | None = None  # dense [D'] relaxed weights
    seed: int | None = None
    support: np.ndarray | None = None


def _zero_sets(x_neg: np.ndarray, support: np.ndarray):
    """Distinct minimal zero-patterns of the negatives over the support columns."""
    missing = ~x_neg[:, support]
    if missing.shape[0]:
        missing = np.unique(missing, axis=0)
    if missing.shape[0] and not missing.any(axis=1).all():
        return None  # some negative row matches the seed everywhere: no precise schema exists
    patterns = [tuple(np.flatnonzero(row)) for row in missing]
    patterns.sort(key=lambda p: (len(p), p))
    minimal: list[tuple[int, ...]] = []
    for pat in patterns:
        s = set(pat)
        if not any(set(t) <= s for t in minimal):
            minimal.append(pat)
    return minimal


def pick_seed(y: np.ndarray, residual: np.ndarray, counts: np.ndarray | None) -> int | None:
    """Most-duplicated uncovered positive row; ties go to the lowest row index."""
    candidates = np.flatnonzero(residual & y)
    if len(candidates) == 0:
        return None
    if counts is None:
        return int(candidates[0])
    return int(candidates[np.argmax(counts[candidates])])


def find_cluster_lp(x: np.ndarray, y: np.ndarray, residual: np.ndarray,
                    counts: np.ndarray | None = None, seed: int | None = None,
                    backend: str = "float", x_neg: np.ndarray | None = None) -> ClusterResult:
    """Step 1: relaxed schema covering a cluster of positives around a seed row."""
    if seed is None:
        seed = pick_seed(y, residual, counts)
        if seed is None:
            return ClusterResult("no_positive")
    if x_neg is None:
        x_neg = x[~y]
    support = np.flatnonzero(x[seed])
    zero_sets = _zero_sets(x_neg, support)
    if zero_sets is None:
        return ClusterResult("infeasible", seed=seed)
    pos = x[residual & y]
    # Column cost: how many uncovered positives lack that precondition.
    cost = (~pos[:, support]).sum(axis=0)
    k = len(support)
    rows = []
    for pat in zero_sets:
        coeffs = [0] * k
        for j in pat:
            coeffs[j] = 1
        rows.append((coeffs, 1))
    problem = LPProblem(c=list(cost.astype(float)), ge_rows=rows)
    result = solve_lp(problem, backend)
    if result.status != "optimal":
        return ClusterResult("infeasible", seed=seed)
    w = np.zeros(x.shape[1], dtype=float)
    w[support] = [float(v) for v in result.x]
    return ClusterResult("ok", w=w, seed=seed, support=support)


def solved_rows(w: np.ndarray, x: np.ndarray, y: np.ndarray,
                residual: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Positives among the residual fully consistent with w: (1 - x).w == 0."""
    supp = np.flatnonzero(w > tol)
    mask = residual & y & x[:, supp].all(axis=1)
    return mask


def _support_weights(x: np.ndarray, y: np.ndarray, columns: np.ndarray,
                     catalog: Catalog = DEFAULT_CATALOG) -> list[float]:
    """Near-unit costs preferring widely shared, anchor-proximal preconditions.

    The bias across any solution sums to < 1, so minimal precondition count
    still strictly dominates; among equally sparse schemas the tie goes to
    bits shared by more positive rows and closer to the anchor cell, which
    generalize far better off the training set.
    """
    k = max(len(columns), 1)
    pos = x[y]
    frac = pos[:, columns].mean(axis=0) if len(pos) else np.zeros(len(columns))
    weights = []
    r = max(catalog.radius, 1)
    for col, f in zip(columns, frac):
        kind, *rest = catalog.decode_column(int(col))
        dist = 0 if kind == "action" else max(abs(rest[0]), abs(rest[1]))
        weights.append(1.0 - (0.6 * float(f) + 0.3 * (1.0 - dist / r)) / k)
    return weights


def simplify_lp(w: np.ndarray, x: np.ndarray, y: np.ndarray,
                solved: np.ndarray, backend: str = "float",
                catalog: Catalog = DEFAULT_CATALOG,
                x_neg: np.ndarray | None = None) -> np.ndarray | None:
    """Step 2: sparsest weights keeping the same precision and the solved rows."""
    if not solved.any():
        return None
    if x_neg is None:
        x_neg = x[~y]
    allowed = np.flatnonzero(x[solved].all(axis=0))
    zero_sets = _zero_sets(x_neg, allowed)
    if zero_sets is None:
        return None
    rows = []
    k = len(allowed)
    for pat in zero_sets:
        coeffs = [0] * k
        for j in pat:
            coeffs[j] = 1
        rows.append((coeffs, 1))
    problem = LPProblem(c=_support_weights(x, y, allowed, catalog), ge_rows=rows)
    result = solve_lp(problem, backend)
    if result.status != "optimal":
        return None
    out = np.zeros(x.shape[1], dtype=float)
    out[allowed] = [float(v) for v in result.x]
    return out


def binarize(w: np.ndarray, x: np.ndarray, y: np.ndarray,
             solved: np.ndarray, tol: float = 1e-7,
             catalog: Catalog = DEFAULT_CATALOG,
             x_neg: np.ndarray | None = None) -> np.ndarray | None:
    """Step 3: exact binary solution over the nonzero support; None = discard."""
    support = np.flatnonzero(w > tol)
    values = w[support]
    if len(support) and np.all((values > 1 - tol) | (values < tol)):
        out = np.zeros_like(w)
        out[support] = 1.0
        return out  # already binary: returned untouched
    if x_neg is None:
        x_neg = x[~y]
    missing = ~x_neg[:, support]
    if missing.shape[0]:
        missing = np.unique(missing, axis=0)
    patterns = {tuple(np.flatnonzero(row)) for row in missing}
    if any(not p for p in patterns):
        return None
    chosen = minimize_binary_cover(len(support), patterns,
                                   weights=_support_weights(x, y, support, catalog))
    if chosen is None:
        return None
    out = np.zeros_like(w)
    out[support[chosen]] = 1.0
    return out


# --- Greedy loop ----------------------------------------------------------------

def learn_schemas(x: np.ndarray, y: np.ndarray, c=0, limit: int = 20,
                  counts: np.ndarray | None = None, target: Target = ("attr", 0),
                  catalog: Catalog = DEFAULT_CATALOG,
                  backend: str = "float") -> list[UngroundedSchema]:
    """Greedily add perfect-precision schemas until positives are covered,
    the limit is reached, or no candidate improves the objective."""
    if x.shape[0] != len(y):
        raise ValueError("X and y disagree on the number of rows")
    schemas: list[UngroundedSchema] = []
    covered = np.zeros(len(y), dtype=bool)
    banned = np.zeros(len(y), dtype=bool)
    current_objective = objective(schemas, x, y, c, catalog)
    x_neg = x[~y]
    while len(schemas) < limit:
        residual = ~covered & ~banned
        step1 = find_cluster_lp(x, y, residual, counts=counts, backend=backend, x_neg=x_neg)
        if step1.status == "no_positive":
            break
        seed = step1.seed
        if step1.status == "infeasible":
            banned[seed] = True
            continue
        solved = solved_rows(step1.w, x, y, residual)
        w2 = simplify_lp(step1.w, x, y, solved, backend=backend, catalog=catalog, x_neg=x_neg)
        wb = binarize(w2, x, y, solved, catalog=catalog, x_neg=x_neg) if w2 is not None else None
        if wb is None:
            wb = binarize(step1.w, x, y, solved, catalog=catalog, x_neg=x_neg)
        if wb is None:
            seed_w = np.zeros(x.shape[1], dtype=float)
            seed_w[np.flatnonzero(x[seed])] = 1.0
            wb = binarize(seed_w, x, y, solved, catalog=catalog, x_neg=x_neg)
        if wb is None:
            banned[seed] = True
            continue
        cols = np.flatnonzero(wb)
        fires = x[:, cols].all(axis=1)
        if fires[~y].any() or not (fires & residual & y).any():
            banned[seed] = True  # admission failed: imprecise or no fresh recall
            continue
        schema = schema_from_columns(target, cols, catalog)
        if schema in schemas:
            banned[seed] = True
            continue
        candidate_objective = objective(schemas + [schema], x, y, c, catalog)
        if candidate_objective >= current_objective:
            banned[seed] = True
            continue
        schemas.append(schema)
        current_objective = candidate_objective
        covered |= fires
    return schemas


# --- Whole-catalog learning -------------------------------------------------------

DEFAULT_ATTR_LIMIT = 20
DEFAULT_REWARD_LIMIT = 96


def _target_sort_key(target: Target):
    kind, arg = target
    order = {"attr": 0, "off": 1, "reward": 2}
    return (order[kind], arg if kind != "reward" else -arg)


def target_training_view(matrix: TrainingMatrix, target: Target):
    """(X, y, counts) for one target with rows the learner should see.

    For attribute targets, rows where the attribute is already on at the
    anchor cell and stays on are dropped: persistence belongs to the
    self-transition machinery, and such rows are generally not expressible
    as conjunctions of present bits.
    """
    x, y, counts = matrix.target_view(target)
    kind, arg = target
    if kind == "attr":
        center = matrix.catalog.column(0, 0, arg)
        keep = ~(x[:, center] & y)
        return x[keep], y[keep], counts[keep]
    return x, y, counts


def learnable_targets(catalog: Catalog) -> tuple[Target, ...]:
    out: list[Target] = [("attr", j) for j in catalog.object_attrs]
    out += [("off", j) for j in catalog.deactivatable]
    out += [("reward", 1), ("reward", -1)]
    return tuple(out)


def learn_schema_set(matrix: TrainingMatrix, c=0,
                     attr_limit: int = DEFAULT_ATTR_LIMIT,
                     reward_limit: int = DEFAULT_REWARD_LIMIT,
                     backend: str = "float",
                     previous: SchemaSet | None = None,
                     fingerprints: dict[Target, str] | None = None) -> SchemaSet:
    """Learn every target of the catalog from one training matrix.

    When `previous` and `fingerprints` are given, targets whose (rows, labels)
    fingerprint is unchanged reuse the previously learned list: counts only
    bias seed order and never invalidate admitted schemas.
    """
    catalog = matrix.catalog
    out = SchemaSet(catalog=catalog,
                    params={"C": str(c), "attr_limit": attr_limit,
                            "reward_limit": reward_limit, "radius": catalog.radius})
    for target in learnable_targets(catalog):
        x, y, counts = target_training_view(matrix, target)
        limit = reward_limit if target[0] == "reward" else attr_limit
        fp = None
        if fingerprints is not None:
            digest = hashlib.sha256()
            digest.update(np.packbits(x).tobytes())
            digest.update(np.packbits(y).tobytes())
            fp = digest.hexdigest()
        if (previous is not None and fp is not None
                and fingerprints.get(target) == fp and target in previous.by_target):
            out.by_target[target] = previous.by_target[target]
        else:
            if y.any():
                schemas = learn_schemas(x, y, c=c, limit=limit, counts=counts,
                                        target=target, catalog=catalog, backend=backend)
            else:
                schemas = []
            out.by_target[target] = tuple(schemas)
        if fingerprints is not None and fp is not None:
            fingerprints[target] = fp
    return out


# --- Text serialization ------------------------------------------------------------

def _target_token(target: Target, catalog: Catalog) -> str:
    kind, arg = target
    if kind == "reward":
        return "reward:+" if arg > 0 else "reward:-"
    return f"{kind}:{catalog.names[arg]}"


def _parse_target_token(token: str, catalog: Catalog) -> Target:
    kind, _, arg = token.partition(":")
    if kind == "reward":
        return ("reward", 1 if arg == "+" else -1)
    if kind in ("attr", "off") and arg in catalog.names:
        return (kind, catalog.names.index(arg))
    raise SchemaFormatError(f"bad target token {token!r}")


def to_text(schema_set: SchemaSet) -> str:
    cat = schema_set.catalog
    lines = [f"# schemaplan-schemas v{SCHEMA_FORMAT_VERSION}",
             f"# catalog={cat.content_hash()} radius={cat.radius} m={cat.m}"]
    params = " ".join(f"{k}={schema_set.params[k]}" for k in sorted(schema_set.params))
    lines.append(f"# params {params}".rstrip())
    for target in sorted(schema_set.by_target, key=_target_sort_key):
        token = _target_token(target, cat)
        for schema in schema_set.by_target[target]:
            parts = [token, "<-"]
            for dx, dy, attr in schema.literals:
                parts += ["offset", str(dx), str(dy), cat.names[attr]]
            if schema.action is not None:
                parts += ["action", Action(schema.action).name]
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def from_text(text: str, catalog: Catalog = DEFAULT_CATALOG) -> SchemaSet:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# schemaplan-schemas v"):
        raise SchemaFormatError("missing schema-file header")
    version = lines[0].rsplit("v", 1)[-1]
    if version != str(SCHEMA_FORMAT_VERSION):
        raise SchemaFormatError(f"unsupported schema format version {version!r}")
    params: dict[str, object] = {}
    out = SchemaSet(catalog=catalog)
    for line in lines[1:]:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# catalog="):
                stored = line.split("=", 1)[1].split()[0]
                if stored != catalog.content_hash():
                    raise SchemaFormatError("schema file belongs to a different catalog/layout")
            elif line.startswith("# params"):
                for token in line[len("# params"):].split():
                    key, _, value = token.partition("=")
                    params[key] = value
            continue
        head, _, body = line.partition("<-")
        target = _parse_target_token(head.strip(), catalog)
        tokens = body.split()
        literals = []
        action = None
        i = 0
        while i < len(tokens):
            if tokens[i] == "offset":
                dx, dy = int(tokens[i + 1]), int(tokens[i + 2])
                name = tokens[i + 3]
                if name not in catalog.names:
                    raise SchemaFormatError(f"unknown attribute {name!r}")
                literals.append((dx, dy, catalog.names.index(name)))
                i += 4
            elif tokens[i] == "action":
                action = Action[tokens[i + 1]].value
                i += 2
            else:
                raise SchemaFormatError(f"unexpected token {tokens[i]!r}")
        schema = UngroundedSchema(target, tuple(sorted(literals)), action)
        out.by_target.setdefault(target, ())
        out.by_target[target] = out.by_target[target] + (schema,)
    out.params = params
    return out


def format_schema(schema: UngroundedSchema, catalog: Catalog = DEFAULT_CATALOG) -> str:
    """Human-readable one-liner in offset notation."""
    kind, arg = schema.target
    if kind == "reward":
        head = "reward+" if arg > 0 else "reward-"
    else:
        head = catalog.names[arg] + (" off" if kind == "off" else "")
    body = " & ".join(f"{catalog.names[attr]}@({dx},{dy})" for dx, dy, attr in schema.literals)
    if schema.action is not None:
        body += f" & action={Action(schema.action).name}" if body else f"action={Action(schema.action).name}"
    return f"{head} <= {body or 'TRUE'}"
