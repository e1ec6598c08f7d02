"""Small dense linear-programming kit used by the rule learner.

Two interchangeable backends solve the same problems: a numpy float simplex
(fast, default) and an exact rational simplex over ``fractions.Fraction``
(tolerance-free, used as the reference oracle and available as an opt-in
backend).  Both are two-phase primal simplex with Bland's rule, which is all
these instances need: after support projection the learner's programs are
small covering LPs with 0/1 coefficients.

``minimize_binary_cover`` is an exact branch-and-bound for the binary version
(minimum hitting set), used by the schema binarization step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

_EPS = 1e-9


@dataclass
class LPProblem:
    """min c.x  s.t.  ge_rows: a.x >= b,  eq_rows: a.x == b,  0 <= x <= upper."""

    c: list
    ge_rows: list = field(default_factory=list)   # (coeffs, bound)
    eq_rows: list = field(default_factory=list)   # (coeffs, bound)
    upper: list | None = None                     # None entries mean unbounded above

    @property
    def n_vars(self) -> int:
        return len(self.c)

    def validate(self) -> None:
        n = self.n_vars
        for coeffs, _ in list(self.ge_rows) + list(self.eq_rows):
            if len(coeffs) != n:
                raise ValueError("constraint row references invalid columns")
        if self.upper is not None and len(self.upper) != n:
            raise ValueError("upper bound vector has wrong length")


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list | None = None
    value: object = None


def _rows_with_uppers(problem: LPProblem):
    """Expand box uppers into <= rows; returns (ge, le, eq) coefficient rows."""
    ge = [(list(c), b) for c, b in problem.ge_rows]
    eq = [(list(c), b) for c, b in problem.eq_rows]
    le = []
    if problem.upper is not None:
        for i, u in enumerate(problem.upper):
            if u is not None:
                row = [0] * problem.n_vars
                row[i] = 1
                le.append((row, u))
    return ge, le, eq


def solve_lp_float(problem: LPProblem) -> LPResult:
    problem.validate()
    n = problem.n_vars
    ge, le, eq = _rows_with_uppers(problem)

    rows = []
    kinds = []
    for coeffs, b in ge:
        rows.append((coeffs, b))
        kinds.append(">=")
    for coeffs, b in le:
        rows.append((coeffs, b))
        kinds.append("<=")
    for coeffs, b in eq:
        rows.append((coeffs, b))
        kinds.append("==")

    m = len(rows)
    if m == 0:
        return LPResult("optimal", [0.0] * n, 0.0)

    # Normalize rhs >= 0, then add one slack/surplus per inequality and one
    # artificial per row that lacks an identity column.
    a = np.zeros((m, n), dtype=float)
    b = np.zeros(m, dtype=float)
    for i, ((coeffs, bound), kind) in enumerate(zip(rows, kinds)):
        sign = 1.0
        if bound < 0:
            sign = -1.0
            kind = {">=": "<=", "<=": ">=", "==": "=="}[kind]
            kinds[i] = kind
        a[i] = np.asarray(coeffs, dtype=float) * sign
        b[i] = float(bound) * sign

    n_slack = sum(1 for k in kinds if k in (">=", "<="))
    cols = n + n_slack + m  # artificials for every row keeps the bookkeeping simple
    tableau = np.zeros((m, cols + 1), dtype=float)
    tableau[:, :n] = a
    tableau[:, -1] = b
    basis = [0] * m
    si = 0
    for i, kind in enumerate(kinds):
        if kind == ">=":
            tableau[i, n + si] = -1.0
            si += 1
        elif kind == "<=":
            tableau[i, n + si] = 1.0
            si += 1
        art = n + n_slack + i
        tableau[i, art] = 1.0
        basis[i] = art

    def pivot(t: np.ndarray, basis: list[int], row: int, col: int) -> None:
        t[row] /= t[row, col]
        for r in range(t.shape[0]):
            if r != row and abs(t[r, col]) > 0:
                t[r] -= t[r, col] * t[row]
        basis[row] = col

    def run_simplex(t: np.ndarray, basis: list[int], cost: np.ndarray, allowed: int) -> str:
        # Bland's rule on reduced costs z_j = c_j - c_B . t[:, j].
        while True:
            cb = np.array([cost[bc] for bc in basis])
            reduced = cost[:allowed] - cb @ t[:, :allowed]
            entering = -1
            for j in range(allowed):
                if reduced[j] < -_EPS:
                    entering = j
                    break
            if entering < 0:
                return "optimal"
            ratios = []
            for r in range(t.shape[0]):
                if t[r, entering] > _EPS:
                    ratios.append((t[r, -1] / t[r, entering], basis[r], r))
            if not ratios:
                return "unbounded"
            ratios.sort(key=lambda item: (item[0], item[1]))
            pivot(t, basis, ratios[0][2], entering)

    # Phase 1
    cost1 = np.zeros(cols)
    cost1[n + n_slack:] = 1.0
    status = run_simplex(tableau, basis, cost1, cols)
    if status != "optimal":
        return LPResult("infeasible")
    cb = np.array([cost1[bc] for bc in basis])
    if cb @ tableau[:, -1] > 1e-7:
        return LPResult("infeasible")
    # Drive remaining artificials out of the basis where possible.
    for r in range(m):
        if basis[r] >= n + n_slack:
            for j in range(n + n_slack):
                if abs(tableau[r, j]) > _EPS:
                    pivot(tableau, basis, r, j)
                    break

    # Phase 2 over the original columns only.
    cost2 = np.zeros(cols)
    cost2[:n] = np.asarray([float(v) for v in problem.c])
    status = run_simplex(tableau, basis, cost2, n + n_slack)
    if status != "optimal":
        return LPResult(status)
    x = [0.0] * n
    for r, bc in enumerate(basis):
        if bc < n:
            x[bc] = float(tableau[r, -1])
    value = float(np.dot(cost2[:n], x))
    return LPResult("optimal", x, value)


def solve_lp_exact(problem: LPProblem) -> LPResult:
    """Same algorithm over exact rationals; no tolerances anywhere."""
    problem.validate()
    n = problem.n_vars
    ge, le, eq = _rows_with_uppers(problem)
    rows: list[tuple[list[Fraction], Fraction, str]] = []
    for coeffs, bound in ge:
        rows.append(([Fraction(v) for v in coeffs], Fraction(bound), ">="))
    for coeffs, bound in le:
        rows.append(([Fraction(v) for v in coeffs], Fraction(bound), "<="))
    for coeffs, bound in eq:
        rows.append(([Fraction(v) for v in coeffs], Fraction(bound), "=="))
    m = len(rows)
    if m == 0:
        return LPResult("optimal", [Fraction(0)] * n, Fraction(0))

    norm = []
    for coeffs, bound, kind in rows:
        if bound < 0:
            coeffs = [-v for v in coeffs]
            bound = -bound
            kind = {">=": "<=", "<=": ">=", "==": "=="}[kind]
        norm.append((coeffs, bound, kind))

    n_slack = sum(1 for _, _, k in norm if k != "==")
    cols = n + n_slack + m
    zero = Fraction(0)
    tableau = [[zero] * (cols + 1) for _ in range(m)]
    basis = [0] * m
    si = 0
    for i, (coeffs, bound, kind) in enumerate(norm):
        for j, v in enumerate(coeffs):
            tableau[i][j] = v
        tableau[i][-1] = bound
        if kind == ">=":
            tableau[i][n + si] = Fraction(-1)
            si += 1
        elif kind == "<=":
            tableau[i][n + si] = Fraction(1)
            si += 1
        art = n + n_slack + i
        tableau[i][art] = Fraction(1)
        basis[i] = art

    def pivot(row: int, col: int) -> None:
        inv = Fraction(1) / tableau[row][col]
        tableau[row] = [v * inv for v in tableau[row]]
        prow = tableau[row]
        for r in range(m):
            if r != row and tableau[r][col] != 0:
                f = tableau[r][col]
                tableau[r] = [v - f * p for v, p in zip(tableau[r], prow)]
        basis[row] = col

    def run_simplex(cost: list[Fraction], allowed: int) -> str:
        while True:
            entering = -1
            for j in range(allowed):
                red = cost[j]
                for r in range(m):
                    cb = cost[basis[r]]
                    if cb != 0:
                        red -= cb * tableau[r][j]
                if red < 0:
                    entering = j
                    break
            if entering < 0:
                return "optimal"
            best = None
            for r in range(m):
                if tableau[r][entering] > 0:
                    ratio = tableau[r][-1] / tableau[r][entering]
                    key = (ratio, basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return "unbounded"
            pivot(best[1], entering)

    cost1 = [zero] * cols
    for j in range(n + n_slack, cols):
        cost1[j] = Fraction(1)
    if run_simplex(cost1, cols) != "optimal":
        return LPResult("infeasible")
    total = sum(cost1[basis[r]] * tableau[r][-1] for r in range(m))
    if total != 0:
        return LPResult("infeasible")
    for r in range(m):
        if basis[r] >= n + n_slack:
            for j in range(n + n_slack):
                if tableau[r][j] != 0:
                    pivot(r, j)
                    break

    cost2 = [zero] * cols
    for j in range(n):
        cost2[j] = Fraction(problem.c[j])
    status = run_simplex(cost2, n + n_slack)
    if status != "optimal":
        return LPResult(status)
    x = [zero] * n
    for r, bc in enumerate(basis):
        if bc < n:
            x[bc] = tableau[r][-1]
    value = sum(c * v for c, v in zip(cost2[:n], x))
    return LPResult("optimal", x, value)


def solve_lp(problem: LPProblem, backend: str = "float") -> LPResult:
    if backend == "float":
        return solve_lp_float(problem)
    if backend == "exact":
        return solve_lp_exact(problem)
    raise ValueError(f"unknown LP backend {backend!r}")


# --- Binary covering ------------------------------------------------------------

def minimize_binary_cover(n_vars: int, constraint_sets, weights=None):
    """Exact minimum-weight hitting set over binary variables.

    Finds z in {0,1}^n minimizing sum(weights[i] * z[i]) such that every
    constraint set contains at least one chosen index.  Returns the sorted
    list of chosen indices, or None when some constraint set is empty
    (no feasible binary assignment).
    """
    if weights is None:
        weights = [1] * n_vars
    sets = [tuple(sorted(set(s))) for s in constraint_sets]
    if any(not s for s in sets):
        return None
    sets = sorted(set(sets), key=lambda s: (len(s), s))
    # Drop dominated supersets: hitting a subset hits the superset too.
    minimal: list[tuple[int, ...]] = []
    for s in sets:
        ss = set(s)
        if not any(set(t) <= ss for t in minimal):
            minimal.append(s)
    sets = minimal

    best_choice: list[int] | None = None
    best_cost = float("inf")

    # Greedy incumbent for the initial bound.
    unhit = list(sets)
    greedy: set[int] = set()
    while unhit:
        counts: dict[int, int] = {}
        for s in unhit:
            for i in s:
                counts[i] = counts.get(i, 0) + 1
        pick = min(counts, key=lambda i: (-counts[i] / max(weights[i], 1e-12), i))
        greedy.add(pick)
        unhit = [s for s in unhit if pick not in s]
    best_choice = sorted(greedy)
    best_cost = sum(weights[i] for i in greedy)

    def lower_bound(unhit_sets) -> float:
        # Disjoint unhit sets each need one distinct pick of at least min weight.
        bound = 0.0
        used: set[int] = set()
        for s in unhit_sets:
            if not used.intersection(s):
                bound += min(weights[i] for i in s)
                used.update(s)
        return bound

    def dfs(chosen: set[int], cost: float, unhit_sets) -> None:
        nonlocal best_choice, best_cost
        if not unhit_sets:
            if cost < best_cost or (cost == best_cost and sorted(chosen) < best_choice):
                best_cost = cost
                best_choice = sorted(chosen)
            return
        if cost + lower_bound(unhit_sets) >= best_cost:
            return
        target = min(unhit_sets, key=lambda s: (len(s), s))
        for i in target:
            if weights[i] + cost >= best_cost:
                continue
            rest = [s for s in unhit_sets if i not in s]
            dfs(chosen | {i}, cost + weights[i], rest)

    dfs(set(), 0.0, sets)
    return best_choice
