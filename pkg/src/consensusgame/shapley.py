"""Shapley allocations and their linear-form representation.

For a fixed player count, the Shapley payoff of each player is an affine
function of the payoff vector.  On normalized functions (empty coalition
worth 0, grand coalition worth 1) the payoff of player i is
``1/n + d_i . restricted(f)`` with m-vector coefficient rows d_i that sum
to zero across players.  The strategic opinion dynamics consume those rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .setfn import SetFunction, SetFunctionError, num_restricted


@dataclass(frozen=True)
class Allocation:
    """Per-player payoff vector."""

    n: int
    payoffs: np.ndarray

    def __post_init__(self):
        pay = np.asarray(self.payoffs, dtype=float)
        if pay.shape != (self.n,):
            raise SetFunctionError(f"expected {self.n} payoffs, got shape {pay.shape}")
        pay = pay.copy()
        pay.setflags(write=False)
        object.__setattr__(self, "payoffs", pay)


def shapley_value(f: SetFunction) -> Allocation:
    """Exact Shapley allocation by the direct coalition-sum formula.

    g_i = sum over coalitions C not containing i of
    |C|! (n-|C|-1)! / n! * (f(C+i) - f(C)).  Efficient: payoffs sum to
    the grand-coalition value.
    """
    n = f.n
    vals = f.values
    masks = np.arange(1 << n)
    sizes = np.bitwise_count(masks)
    fact = np.array([factorial(k) for k in range(n + 1)], dtype=float)
    weight_by_size = fact[:n] * fact[n - 1 :: -1] / fact[n]
    payoffs = np.empty(n)
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        payoffs[i] = np.sum(
            weight_by_size[sizes[without]] * (vals[without | bit] - vals[without])
        )
    return Allocation(n, payoffs)


@dataclass(frozen=True)
class ShapleyLinearForm:
    """Affine representation of Shapley payoffs on normalized functions.

    ``payoff_i(f) = offset + rows[i] . restricted(f)`` whenever f is
    normalized.  Rows sum to the zero vector.
    """

    n: int
    rows: np.ndarray  # (n, m)
    offset: float

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.shape != (self.n, num_restricted(self.n)):
            raise SetFunctionError(
                f"expected rows of shape {(self.n, num_restricted(self.n))}"
            )
        rows = rows.copy()
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def apply(self, f: SetFunction) -> Allocation:
        if f.n != self.n:
            raise SetFunctionError("player count mismatch")
        if not f.is_normalized(tol=1e-9):
            raise SetFunctionError("linear form applies to normalized functions only")
        return Allocation(self.n, self.offset + self.rows @ f.restricted())

    def apply_restricted(self, restricted: np.ndarray) -> np.ndarray:
        """Payoffs for a normalized function given only its m-vector."""
        return self.offset + self.rows @ np.asarray(restricted, dtype=float)


def shapley_linear_form(n: int) -> ShapleyLinearForm:
    """Extract the linear form by evaluating Shapley values on indicators.

    The base function worth 1 only at the grand coalition allocates 1/n to
    everyone; adding a unit indicator at one proper coalition and
    differencing recovers that coalition's coefficient column, by linearity.
    """
    if not 2 <= n <= 12:
        raise SetFunctionError(f"linear form supported for 2 <= n <= 12, got {n}")
    m = num_restricted(n)
    base_vals = np.zeros(1 << n)
    base_vals[-1] = 1.0
    base = shapley_value(SetFunction(n, base_vals)).payoffs
    rows = np.empty((n, m))
    for col in range(m):
        vals = base_vals.copy()
        vals[col + 1] += 1.0
        rows[:, col] = shapley_value(SetFunction(n, vals)).payoffs - base
    return ShapleyLinearForm(n, rows, 1.0 / n)
