"""Minimal LP container and solve contract.

Problems are assembled as COO triplet blocks (fast to build for the large
time-expanded flow models) and handed to scipy's HiGHS backend, which is
deterministic for a fixed problem.  Statuses come back as values, never
exceptions: infeasible / unbounded are expected outcomes for some inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.optimize import linprog

LE, EQ, GE = -1, 0, 1

FEAS_TOL = 1e-6
BOUND_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERIC_FAILURE = "numeric_failure"


class LpProblem:
    """Sparse minimization LP: c'x s.t. rows (<=, =, >=), box bounds on x.

    Variables default to [0, +inf).  Rows are appended in blocks of COO
    triplets; `row` indices inside a block are local (0-based within the
    block) and shifted on append.
    """

    def __init__(self, num_vars: int, names: list[str] | None = None):
        if num_vars < 0:
            raise ValueError("num_vars must be >= 0")
        self.num_vars = num_vars
        self.objective = np.zeros(num_vars)
        self.lower = np.zeros(num_vars)
        self.upper = np.full(num_vars, np.inf)
        self.names = names
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._sense: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self.num_rows = 0

    def add_rows(self, rows, cols, vals, sense, rhs) -> None:
        """Append a block of rows given as parallel COO arrays.

        `rows` are block-local indices in 0..len(rhs)-1; `sense` is one of
        LE/EQ/GE per row; `rhs` one value per row.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        sense = np.asarray(sense, dtype=np.int8)
        rhs = np.asarray(rhs, dtype=float)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("COO arrays must have identical shape")
        if sense.shape != rhs.shape:
            raise ValueError("sense/rhs must have identical shape")
        n_new = len(rhs)
        if n_new and rows.size and rows.max() >= n_new:
            raise ValueError("local row index out of block range")
        if cols.size and (cols.min() < 0 or cols.max() >= self.num_vars):
            raise ValueError("column index out of range")
        self._rows.append(rows + self.num_rows)
        self._cols.append(cols)
        self._vals.append(vals)
        self._sense.append(sense)
        self._rhs.append(rhs)
        self.num_rows += n_new

    def set_objective(self, cols, coefs) -> None:
        self.objective[np.asarray(cols, dtype=np.int64)] = coefs

    def fix(self, cols, values) -> None:
        """Pin variables by collapsing their bounds."""
        cols = np.asarray(cols, dtype=np.int64)
        self.lower[cols] = values
        self.upper[cols] = values

    def matrix(self) -> tuple[sparse.csr_matrix, np.ndarray, np.ndarray]:
        """(A, sense, rhs) with all appended blocks concatenated."""
        if self._rows:
            r = np.concatenate(self._rows)
            c = np.concatenate(self._cols)
            v = np.concatenate(self._vals)
        else:
            r = c = v = np.zeros(0)
        A = sparse.csr_matrix((v, (r, c)), shape=(self.num_rows, self.num_vars))
        sense = np.concatenate(self._sense) if self._sense else np.zeros(0, dtype=np.int8)
        rhs = np.concatenate(self._rhs) if self._rhs else np.zeros(0)
        return A, sense, rhs


@dataclass(frozen=True)
class LpSolution:
    status: str
    values: np.ndarray | None
    objective_value: float


@dataclass(frozen=True)
class ResidualReport:
    max_constraint_violation: float
    max_bound_violation: float
    objective_value: float

    @property
    def max_violation(self) -> float:
        return max(self.max_constraint_violation, self.max_bound_violation)


def solve(problem: LpProblem) -> LpSolution:
    """Minimize the problem with HiGHS; failures are statuses, not exceptions."""
    A, sense, rhs = problem.matrix()
    eq = sense == EQ
    le = sense == LE
    ge = sense == GE
    A_eq = A[eq] if eq.any() else None
    b_eq = rhs[eq] if eq.any() else None
    if le.any() or ge.any():
        A_ub = sparse.vstack([A[le], -A[ge]], format="csr")
        b_ub = np.concatenate([rhs[le], -rhs[ge]])
    else:
        A_ub = b_ub = None
    res = linprog(
        problem.objective,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([problem.lower, problem.upper]),
        method="highs",
    )
    if res.status == 0:
        return LpSolution(OPTIMAL, np.asarray(res.x), float(res.fun))
    if res.status == 2:
        return LpSolution(INFEASIBLE, None, float("nan"))
    if res.status == 3:
        return LpSolution(UNBOUNDED, None, float("nan"))
    return LpSolution(NUMERIC_FAILURE, None, float("nan"))


def check_solution(problem: LpProblem, values: np.ndarray) -> ResidualReport:
    """Residuals of a candidate point, used by tests on every solve."""
    values = np.asarray(values, dtype=float)
    if values.shape != (problem.num_vars,):
        raise ValueError(f"expected {problem.num_vars} values, got {values.shape}")
    A, sense, rhs = problem.matrix()
    if problem.num_rows:
        resid = A @ values - rhs
        viol = np.zeros_like(resid)
        viol[sense == EQ] = np.abs(resid[sense == EQ])
        viol[sense == LE] = np.maximum(resid[sense == LE], 0.0)
        viol[sense == GE] = np.maximum(-resid[sense == GE], 0.0)
        max_con = float(viol.max()) if viol.size else 0.0
    else:
        max_con = 0.0
    below = np.maximum(problem.lower - values, 0.0)
    above = np.maximum(values - problem.upper, 0.0)
    max_bnd = float(np.maximum(below, above).max()) if values.size else 0.0
    return ResidualReport(max_con, max_bnd, float(problem.objective @ values))


def dump(problem: LpProblem) -> str:
    """Plain-text listing, one constraint per line, for eyeballing small models."""
    def name(j):
        return problem.names[j] if problem.names else f"x{j}"

    rel = {LE: "<=", EQ: "=", GE: ">="}
    lines = ["min " + " + ".join(
        f"{c:g}*{name(j)}" for j, c in enumerate(problem.objective) if c != 0.0
    )]
    A, sense, rhs = problem.matrix()
    A = A.tocsr()
    for i in range(problem.num_rows):
        row = A.getrow(i)
        terms = " + ".join(f"{v:g}*{name(j)}" for j, v in zip(row.indices, row.data))
        lines.append(f"  {terms} {rel[int(sense[i])]} {rhs[i]:g}")
    for j in range(problem.num_vars):
        lo, hi = problem.lower[j], problem.upper[j]
        if (lo, hi) != (0.0, np.inf):
            lines.append(f"  {lo:g} <= {name(j)} <= {hi:g}")
    return "\n".join(lines)
