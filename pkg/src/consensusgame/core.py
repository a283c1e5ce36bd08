"""Core membership and (Bayesian) core emptiness via LP feasibility.

The feasibility engine is a dense phase-1 simplex with Bland's anti-cycling
rule.  Constraint systems here are tiny (hundreds of rows at most), so a
deterministic zero-dependency solver beats an external one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .setfn import SetFunction, SetFunctionError, grand_mask, membership_matrix

_PIVOT_EPS = 1e-10

DEFAULT_TOL = 1e-9


class SimplexError(RuntimeError):
    """Iteration cap exceeded: numerical cycling or a degenerate system."""


@dataclass(frozen=True)
class LinearFeasibilityProblem:
    """A x (>= | ==) b over free allocation variables.

    ``senses[r]`` is ``">="`` or ``"=="`` per constraint row.
    """

    a: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1:
            raise SetFunctionError("constraint matrix must be 2-d with >= 1 row")
        if b.shape != (a.shape[0],):
            raise SetFunctionError("right-hand side length must match row count")
        if len(self.senses) != a.shape[0]:
            raise SetFunctionError("one sense per constraint row required")
        if any(s not in (">=", "==") for s in self.senses):
            raise SetFunctionError("senses must be '>=' or '=='")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise SetFunctionError("constraint entries must be finite")
        a = a.copy()
        a.setflags(write=False)
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "senses", tuple(self.senses))


class FeasibilityResult(NamedTuple):
    feasible: bool
    witness: np.ndarray | None


def lp_feasible(
    problem: LinearFeasibilityProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
) -> FeasibilityResult:
    """Decide feasibility; return a witness allocation when feasible.

    Free variables are split into positive parts, every row gets an
    artificial variable, and phase-1 minimizes the artificial sum.  Bland's
    rule (lowest eligible index in, lowest basis index out) makes the run
    deterministic and cycle-free.  Artificial columns are never stored:
    once one leaves the basis it is retired, so only the structural block
    is pivoted.
    """
    a, b, senses = problem.a, problem.b, problem.senses
    rows, nvars = a.shape

    # Columns: x+ | x- | surplus (one per ">=" row); artificials implicit.
    n_surplus = sum(1 for s in senses if s == ">=")
    struct = np.zeros((rows, 2 * nvars + n_surplus))
    struct[:, :nvars] = a
    struct[:, nvars : 2 * nvars] = -a
    si = 0
    for r, s in enumerate(senses):
        if s == ">=":
            struct[r, 2 * nvars + si] = -1.0
            si += 1
    rhs = b.copy()
    flip = rhs < 0
    struct[flip] *= -1.0
    rhs[flip] *= -1.0

    n_struct = struct.shape[1]
    tableau = np.hstack([struct, rhs[:, None]])
    # basis entry n_struct + r stands for row r's artificial variable
    basis = np.arange(n_struct, n_struct + rows)

    # Phase-1 reduced costs over structural columns plus the rhs cell.
    cost = -tableau.sum(axis=0)

    if max_iter is None:
        max_iter = 10 * (rows + n_struct + rows) ** 2

    for _ in range(max_iter):
        eligible = np.nonzero(cost[:n_struct] < -_PIVOT_EPS)[0]
        if eligible.size == 0:
            break
        entering = int(eligible[0])
        coefs = tableau[:, entering]
        positive = coefs > _PIVOT_EPS
        if not np.any(positive):
            raise SimplexError("phase-1 objective unbounded below; malformed tableau")
        ratios = np.full(rows, np.inf)
        ratios[positive] = tableau[positive, -1] / coefs[positive]
        ties = np.nonzero(ratios <= ratios.min() + _PIVOT_EPS)[0]
        leaving = int(ties[np.argmin(basis[ties])])
        pivot_row = tableau[leaving] / tableau[leaving, entering]
        col = tableau[:, entering].copy()
        col[leaving] = 0.0
        tableau -= np.outer(col, pivot_row)
        tableau[leaving] = pivot_row
        cost -= cost[entering] * pivot_row
        basis[leaving] = entering
        np.clip(tableau[:, -1], 0.0, None, out=tableau[:, -1])
    else:
        raise SimplexError(f"simplex did not terminate within {max_iter} pivots")

    artificial_rows = basis >= n_struct
    infeasibility = float(tableau[artificial_rows, -1].sum())
    if infeasibility > tol:
        return FeasibilityResult(False, None)

    solution = np.zeros(n_struct)
    structural_rows = ~artificial_rows
    solution[basis[structural_rows]] = tableau[structural_rows, -1]
    witness = solution[:nvars] - solution[nvars : 2 * nvars]
    return FeasibilityResult(True, witness)


def core_constraints(f: SetFunction) -> LinearFeasibilityProblem:
    """Core system: coalition sums cover payoffs, grand value split exactly."""
    n = f.n
    members = membership_matrix(n).astype(float)
    proper = np.arange(1, grand_mask(n))
    a = np.vstack([members[proper], np.ones((1, n))])
    b = np.concatenate([f.values[proper], [f.grand_value]])
    senses = (">=",) * len(proper) + ("==",)
    return LinearFeasibilityProblem(a, senses, b)


def core_contains(f: SetFunction, g, tol: float = DEFAULT_TOL) -> bool:
    """Membership check: every coalition covered, budget exactly spent."""
    g = np.asarray(g, dtype=float)
    if g.shape != (f.n,):
        raise SetFunctionError(f"allocation must have length {f.n}")
    sums = membership_matrix(f.n) @ g
    if abs(sums[-1] - f.grand_value) > tol:
        return False
    return bool(np.all(sums >= f.values - tol))


def core_is_empty(f: SetFunction, tol: float = DEFAULT_TOL) -> bool:
    return not lp_feasible(core_constraints(f), tol=tol).feasible


def bayesian_core_constraints(opinions: list[SetFunction]) -> LinearFeasibilityProblem:
    """Feasibility system for private opinions.

    Rationality holds for every player's opinion on every proper nonempty
    coalition, so each coalition row binds at the per-player maximum (the
    row set is aggregated per coalition; the feasible region is identical).
    The budget must fit under every player's grand-coalition value, i.e.
    under the minimum.
    """
    if not opinions:
        raise SetFunctionError("need at least one opinion")
    n = opinions[0].n
    if any(f.n != n for f in opinions):
        raise SetFunctionError("opinions disagree on player count")
    if len(opinions) != n:
        raise SetFunctionError(f"expected one opinion per player ({n}), got {len(opinions)}")
    stack = np.stack([f.values for f in opinions])
    members = membership_matrix(n).astype(float)
    proper = np.arange(1, grand_mask(n))
    a = np.vstack([members[proper], -np.ones((1, n))])
    b = np.concatenate([stack[:, proper].max(axis=0), [-stack[:, -1].min()]])
    senses = (">=",) * (len(proper) + 1)
    return LinearFeasibilityProblem(a, senses, b)


def bayesian_core_is_empty(
    opinions: list[SetFunction], tol: float = DEFAULT_TOL
) -> FeasibilityResult:
    """Emptiness verdict plus a witness allocation when nonempty.

    Returns ``(empty, witness)``; the witness is only present when the
    Bayesian core is nonempty.

    A candidate witness is tried before the LP: the Shapley allocation of
    the aggregated bound function (per-coalition maxima, budget as grand
    value) splits the budget exactly, so if it also covers every coalition
    bound the system is feasible without running the simplex.  Opinion
    profiles near a shared supermodular function almost always pass this,
    which keeps Monte-Carlo experiments cheap; the complete LP decides the
    rest.
    """
    from .shapley import shapley_value

    problem = bayesian_core_constraints(opinions)
    n = opinions[0].n
    stack = np.stack([f.values for f in opinions])
    bound_vals = stack.max(axis=0)
    bound_vals[0] = 0.0
    bound_vals[-1] = stack[:, -1].min()
    candidate = shapley_value(SetFunction(n, bound_vals)).payoffs
    if np.all(problem.a @ candidate >= problem.b - tol):
        return FeasibilityResult(False, candidate)
    feasible, witness = lp_feasible(problem, tol=tol)
    return FeasibilityResult(not feasible, witness)


def bayesian_core_contains(
    opinions: list[SetFunction], g, tol: float = DEFAULT_TOL
) -> bool:
    """Direct membership check against every player's private constraints."""
    g = np.asarray(g, dtype=float)
    n = opinions[0].n
    sums = membership_matrix(n) @ g
    proper = np.arange(1, grand_mask(n))
    for f in opinions:
        if not np.all(sums[proper] >= f.values[proper] - tol):
            return False
        if sums[-1] > f.grand_value + tol:
            return False
    return True
