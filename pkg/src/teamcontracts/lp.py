"""A small dense linear-program representation and a two-phase simplex solver.

The solver is deliberately plain: a dense tableau, a deterministic pivot
rule (steepest reduced cost switching to Bland's smallest-index rule if the
objective stalls, so cycling is impossible), row equilibration for scaling,
and a refactorization pass at claimed optimality that rebuilds the tableau
from pristine data and resumes pivoting if the refreshed reduced costs
disagree.  Problem sizes in this package are desk scale, so simplicity and
reproducibility win over speed.

Variables carry individual bounds (default 0 <= x < +inf, -inf allowed);
constraints are rows (coeffs, relation, rhs) with relation one of
"<=", "=", ">=".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_RELATIONS = ("<=", "=", ">=")
_PIVOT_TOL = 1e-9
_STABLE_PIVOT = 1e-6
_STALL_LIMIT = 60
_ENTER_TRIES = 8
_REFACTOR_EVERY = 40
_MAX_REFACTOR_ROUNDS = 6

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class PivotLimitError(RuntimeError):
    """Simplex exceeded its cycling guard."""

    def __init__(self, pivots: int):
        super().__init__(f"simplex pivot limit exceeded after {pivots} pivots")
        self.pivots = pivots


class LPModel:
    """maximize/minimize c.x subject to row constraints and variable bounds."""

    def __init__(self, n_vars: int, sense: str = "max"):
        if sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
        self.n_vars = n_vars
        self.sense = sense
        self.objective = np.zeros(n_vars)
        self.lower = np.zeros(n_vars)
        self.upper = np.full(n_vars, np.inf)
        self.rows: list[tuple[np.ndarray, str, float]] = []

    def add_constraint(self, coeffs, relation: str, rhs: float) -> None:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_vars,):
            raise ValueError(
                f"constraint has {coeffs.shape} coefficients, expected ({self.n_vars},)"
            )
        if relation == "==":
            relation = "="
        if relation not in _RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        self.rows.append((coeffs, relation, float(rhs)))

    def set_bounds(self, var: int, lower: float = 0.0, upper: float = np.inf) -> None:
        if lower > upper:
            raise ValueError(f"variable {var}: lower bound {lower} exceeds upper {upper}")
        self.lower[var] = lower
        self.upper[var] = upper


@dataclass(frozen=True)
class LPSolution:
    status: str
    x: np.ndarray | None
    objective: float | None


class _Simplex:
    """Tableau state for one standard-form LP: min cost.y, A y = b, y >= 0."""

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: np.ndarray, budget: int):
        self.a = a  # pristine equality system, never mutated
        self.b = b
        self.tableau = np.hstack([a, b[:, None]])
        self.basis = basis.copy()
        self.budget = budget
        self.used = 0
        self._prepare_basis()

    def _prepare_basis(self) -> None:
        self.in_basis = np.zeros(self.a.shape[1] + 1, dtype=bool)
        self.in_basis[self.basis] = True

    def _obj_row(self, cost: np.ndarray) -> np.ndarray:
        row = np.append(cost, 0.0)
        weights = cost[self.basis]
        nz = np.nonzero(weights)[0]
        if nz.size:
            row -= weights[nz] @ self.tableau[nz]
        row[self.in_basis] = 0.0
        return row

    def _pivot(self, obj_row: np.ndarray, row: int, col: int) -> None:
        t = self.tableau
        self.in_basis[self.basis[row]] = False
        self.in_basis[col] = True
        t[row] /= t[row, col]
        factors = t[:, col].copy()
        factors[row] = 0.0
        t -= np.outer(factors, t[row])
        obj_row -= obj_row[col] * t[row]
        t[:, col] = 0.0
        t[row, col] = 1.0
        self.basis[row] = col
        obj_row[self.in_basis] = 0.0

    def _leaving(self, col: int, blands: bool) -> int | None:
        column = self.tableau[:, col]
        rows = np.nonzero(column > _PIVOT_TOL)[0]
        if rows.size == 0:
            return None
        rhs = np.maximum(self.tableau[rows, -1], 0.0)
        ratios = rhs / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 + 1e-12 * best]
        if blands:
            return int(tied[np.argmin(self.basis[tied])])
        return int(tied[np.argmax(column[tied])])  # biggest pivot: stability

    def run(self, cost: np.ndarray, allowed: int) -> str:
        """Pivot to optimality for `cost`; returns "optimal" or "unbounded".

        Entering: most negative reduced cost while the objective improves,
        switching permanently to Bland's smallest-index rule after
        _STALL_LIMIT degenerate pivots in a row.  Among the best few
        entering candidates the first with a healthy pivot element wins,
        and the tableau is rebuilt from pristine data at a fixed cadence so
        roundoff cannot snowball across eliminations.  All rules are
        deterministic.
        """
        obj_row = self._obj_row(cost)
        stall = 0
        blands = False
        since_refactor = 0
        while True:
            if since_refactor >= _REFACTOR_EVERY and self.refactorize():
                obj_row = self._obj_row(cost)
                since_refactor = 0
            reduced = obj_row[:allowed]
            candidates = np.nonzero(reduced < -_PIVOT_TOL)[0]
            if candidates.size == 0:
                return OPTIMAL
            if blands:
                order = candidates[:_ENTER_TRIES]
            else:
                by_cost = np.argsort(reduced[candidates], kind="stable")
                order = candidates[by_cost[:_ENTER_TRIES]]
            col = row = None
            for cand in order:
                r = self._leaving(int(cand), blands)
                if r is None:
                    # An improving column with no blocking row certifies an
                    # unbounded ray; re-derive it from pristine data first so
                    # roundoff cannot manufacture one.
                    if self.refactorize():
                        obj_row = self._obj_row(cost)
                        since_refactor = 0
                        if obj_row[cand] >= -_PIVOT_TOL or self._leaving(int(cand), blands) is not None:
                            col = row = None  # tableau changed: restart the scan
                            break
                    return UNBOUNDED
                if col is None:
                    col, row = int(cand), r  # fallback if no candidate is stable
                if self.tableau[r, cand] >= _STABLE_PIVOT:
                    col, row = int(cand), r
                    break
            if col is None:
                continue
            if self.used >= self.budget:
                raise PivotLimitError(self.used)
            before = obj_row[-1]
            self._pivot(obj_row, row, col)
            self.used += 1
            since_refactor += 1
            if not blands:
                stall = 0 if abs(obj_row[-1] - before) > 1e-12 else stall + 1
                if stall >= _STALL_LIMIT:
                    blands = True

    def refactorize(self) -> bool:
        """Rebuild the tableau exactly from the pristine system and the
        current basis, clearing accumulated elimination error.  Returns
        False if the basis matrix is numerically singular."""
        base = self.a[:, self.basis]
        try:
            fresh = np.linalg.solve(base, np.hstack([self.a, self.b[:, None]]))
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(fresh)):
            return False
        self.tableau = fresh
        self.tableau[:, -1] = np.maximum(self.tableau[:, -1], 0.0)
        self._prepare_basis()
        return True

    def solution(self) -> np.ndarray:
        y = np.zeros(self.a.shape[1])
        y[self.basis] = np.maximum(self.tableau[:, -1], 0.0)
        return y

    def run_certified(self, cost: np.ndarray, allowed: int) -> str:
        """run() followed by refactorize-and-verify rounds: at claimed
        optimality the tableau is rebuilt from pristine data; if the exact
        reduced costs still show an improving column, pivoting resumes."""
        for _ in range(_MAX_REFACTOR_ROUNDS):
            status = self.run(cost, allowed)
            if status == UNBOUNDED or not self.refactorize():
                return status
            obj_row = self._obj_row(cost)
            if np.min(obj_row[:allowed]) >= -1e-8:
                return OPTIMAL
        return self.run(cost, allowed)


def solve_lp(model: LPModel, feas_tol: float = 1e-7, max_pivots: int | None = None) -> LPSolution:
    """Solve the model; statuses are "optimal", "infeasible", "unbounded".

    Optimal solutions satisfy every constraint within feas_tol and report
    the objective recomputed as c.x on the original variables.
    """
    if np.any(model.lower > model.upper):
        raise ValueError("a variable has lower bound above its upper bound")
    minimize = model.objective if model.sense == "min" else -model.objective

    # Shift finite lower bounds to zero and split free variables into +/- parts.
    col_of_var: list[tuple[int, int | None]] = []
    shifts = np.where(np.isfinite(model.lower), model.lower, 0.0)
    n_cols = 0
    for j in range(model.n_vars):
        if np.isfinite(model.lower[j]):
            col_of_var.append((n_cols, None))
            n_cols += 1
        else:
            col_of_var.append((n_cols, n_cols + 1))
            n_cols += 2

    def expand(coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros(n_cols)
        for j, (pos, neg) in enumerate(col_of_var):
            out[pos] = coeffs[j]
            if neg is not None:
                out[neg] = -coeffs[j]
        return out

    rows: list[tuple[np.ndarray, str, float]] = []
    for coeffs, rel, rhs in model.rows:
        rows.append((expand(coeffs), rel, rhs - float(coeffs @ shifts)))
    for j in range(model.n_vars):
        if np.isfinite(model.upper[j]):
            unit = np.zeros(model.n_vars)
            unit[j] = 1.0
            rows.append((expand(unit), "<=", model.upper[j] - shifts[j]))

    std_obj = expand(minimize)

    # Equilibrate, normalize to rhs >= 0, and rewrite ">= 0" rows as "<="
    # so they start from slack bases instead of artificial ones.
    normalized = []
    for coeffs, rel, rhs in rows:
        scale = np.max(np.abs(coeffs))
        if scale > 0:
            coeffs, rhs = coeffs / scale, rhs / scale
        if rhs < 0:
            coeffs, rhs = -coeffs, -rhs
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        if rel == ">=" and rhs == 0:
            coeffs, rel = -coeffs, "<="
        normalized.append((coeffs, rel, rhs))

    n_rows = len(normalized)
    n_slack = sum(1 for _, rel, _ in normalized if rel in ("<=", ">="))
    n_art = sum(1 for _, rel, _ in normalized if rel in (">=", "="))
    total = n_cols + n_slack + n_art
    a_std = np.zeros((n_rows, total))
    b_std = np.zeros(n_rows)
    basis = np.zeros(n_rows, dtype=int)
    slack_at = n_cols
    art_at = n_cols + n_slack
    art_cols = []
    for r, (coeffs, rel, rhs) in enumerate(normalized):
        a_std[r, :n_cols] = coeffs
        b_std[r] = rhs
        if rel == "<=":
            a_std[r, slack_at] = 1.0
            basis[r] = slack_at
            slack_at += 1
        elif rel == ">=":
            a_std[r, slack_at] = -1.0
            slack_at += 1
            a_std[r, art_at] = 1.0
            basis[r] = art_at
            art_cols.append(art_at)
            art_at += 1
        else:
            a_std[r, art_at] = 1.0
            basis[r] = art_at
            art_cols.append(art_at)
            art_at += 1

    budget = max_pivots if max_pivots is not None else 20_000 + 400 * (n_rows + total)
    n_structural = n_cols + n_slack
    worker = _Simplex(a_std, b_std, basis, budget)

    if art_cols:
        phase1 = np.zeros(total)
        phase1[art_cols] = 1.0
        status = worker.run_certified(phase1, total)
        assert status == OPTIMAL, "phase 1 is always bounded"
        if float(phase1 @ worker.solution()) > feas_tol:
            return LPSolution(INFEASIBLE, None, None)
        # Degenerate artificials still in the basis: swap them for any
        # structural column, dropping rows that turn out redundant.
        obj_row = worker._obj_row(phase1)
        for r in np.nonzero(worker.basis >= n_structural)[0]:
            pivots = np.nonzero(np.abs(worker.tableau[r, :n_structural]) > 1e-7)[0]
            if pivots.size:
                worker._pivot(obj_row, int(r), int(pivots[0]))
        keep = worker.basis < n_structural
        old_tableau, old_used = worker.tableau, worker.used
        worker = _Simplex(a_std[keep][:, :n_structural], b_std[keep], worker.basis[keep], budget)
        worker.used = old_used
        if not worker.refactorize():
            cols = list(range(n_structural)) + [total]
            worker.tableau = old_tableau[np.ix_(np.nonzero(keep)[0], cols)].copy()
            worker._prepare_basis()

    cost2 = np.zeros(worker.a.shape[1])
    cost2[:n_cols] = std_obj
    status = worker.run_certified(cost2, n_structural)
    if status == UNBOUNDED:
        return LPSolution(UNBOUNDED, None, None)

    y = worker.solution()
    x = np.empty(model.n_vars)
    for j, (pos, neg) in enumerate(col_of_var):
        x[j] = shifts[j] + y[pos] - (y[neg] if neg is not None else 0.0)
    return LPSolution(OPTIMAL, x, float(model.objective @ x))
