"""Set functions over player subsets, indexed by bitmask.

A coalition of players {0, ..., n-1} is a bitmask: bit i set means player i
is in the coalition.  A payoff function is stored dense, one value per
bitmask, with the empty coalition pinned at zero.  Proper nonempty
coalitions (everything except the empty set and the grand coalition) form
the "restricted" m-vector view, m = 2^n - 2, in ascending bitmask order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_PLAYERS = 20

DEFAULT_STRICT_TOL = 1e-9


class SetFunctionError(ValueError):
    """Malformed set function or incompatible operands."""


class SamplerError(RuntimeError):
    """Rejection sampler exhausted its attempt budget."""


def grand_mask(n: int) -> int:
    return (1 << n) - 1


def num_restricted(n: int) -> int:
    """Number of proper nonempty coalitions."""
    return (1 << n) - 2


def subset_index(subset: int, n: int) -> int:
    """Index of a proper nonempty coalition in the restricted m-vector.

    Canonical order is ascending bitmask, so the map is simply
    ``subset - 1``.  Rejects the empty set and the grand coalition.
    """
    _check_n(n)
    if not 0 <= subset < (1 << n):
        raise SetFunctionError(f"bitmask {subset} out of range for n={n}")
    if subset == 0:
        raise SetFunctionError("empty coalition has no restricted index")
    if subset == grand_mask(n):
        raise SetFunctionError("grand coalition has no restricted index")
    return subset - 1


def restricted_subset(index: int, n: int) -> int:
    """Inverse of subset_index."""
    _check_n(n)
    if not 0 <= index < num_restricted(n):
        raise SetFunctionError(f"restricted index {index} out of range for n={n}")
    return index + 1


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_PLAYERS:
        raise SetFunctionError(f"player count must be in [1, {MAX_PLAYERS}], got {n}")


@dataclass(frozen=True)
class SetFunction:
    """Dense payoff function over all coalitions of n players.

    ``values[mask]`` is the payoff of the coalition encoded by ``mask``.
    ``values[0]`` is always zero.
    """

    n: int
    values: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != ((1 << self.n),):
            raise SetFunctionError(
                f"expected {1 << self.n} values for n={self.n}, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise SetFunctionError("payoff values must be finite")
        if vals[0] != 0.0:
            raise SetFunctionError("empty-coalition payoff must be exactly 0")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def grand_value(self) -> float:
        return float(self.values[-1])

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.grand_value - 1.0) <= tol

    def restricted(self) -> np.ndarray:
        """Values on proper nonempty coalitions, ascending bitmask order."""
        return self.values[1:-1].copy()

    @staticmethod
    def from_restricted(n: int, restricted: np.ndarray, grand: float = 1.0) -> "SetFunction":
        restricted = np.asarray(restricted, dtype=float)
        if restricted.shape != (num_restricted(n),):
            raise SetFunctionError(
                f"expected {num_restricted(n)} restricted values for n={n}"
            )
        vals = np.concatenate([[0.0], restricted, [float(grand)]])
        return SetFunction(n, vals)

    def __call__(self, mask: int) -> float:
        return float(self.values[mask])


@lru_cache(maxsize=64)
def _local_increment_index(n: int):
    """Index arrays for the incremental supermodularity check.

    For every unordered player pair (i, j) and every coalition S avoiding
    both, the condition f(S+i+j) + f(S) >= f(S+i) + f(S+j) must hold.
    """
    masks = np.arange(1 << n)
    s_all, si_all, sj_all, sij_all = [], [], [], []
    for i in range(n):
        for j in range(i + 1, n):
            pair = (1 << i) | (1 << j)
            s = masks[(masks & pair) == 0]
            s_all.append(s)
            si_all.append(s | (1 << i))
            sj_all.append(s | (1 << j))
            sij_all.append(s | pair)
    if not s_all:  # n == 1: nothing to check
        empty = np.empty(0, dtype=int)
        return empty, empty, empty, empty
    return (
        np.concatenate(s_all),
        np.concatenate(si_all),
        np.concatenate(sj_all),
        np.concatenate(sij_all),
    )


def is_supermodular(
    f: SetFunction,
    strict: bool = False,
    tol: float = DEFAULT_STRICT_TOL,
    method: str = "local",
) -> bool:
    """Decide (strict) supermodularity of a payoff function.

    Two equivalent characterizations are available:

    - ``"local"``: incremental form, f(S+i+j) + f(S) >= f(S+i) + f(S+j)
      over all pairs i != j and all S avoiding both.  O(n^2 2^n).
    - ``"pairwise"``: f(X|Y) + f(X&Y) >= f(X) + f(Y) over all coalition
      pairs.  O(4^n), kept as the reference path.

    Strictness is required only where the inequality is not forced into
    equality by nesting: every incremental triple for ``"local"``, and
    incomparable X, Y for ``"pairwise"``.
    """
    if tol < 0:
        raise SetFunctionError("tolerance must be nonnegative")
    vals = f.values
    margin = tol if strict else -tol
    if method == "local":
        s, si, sj, sij = _local_increment_index(f.n)
        if s.size == 0:
            return True
        gaps = vals[sij] + vals[s] - vals[si] - vals[sj]
        return bool(np.all(gaps >= margin))
    if method == "pairwise":
        masks = np.arange(1 << f.n)
        x, y = np.meshgrid(masks, masks, indexing="ij")
        lhs = vals[x | y] + vals[x & y]
        rhs = vals[x] + vals[y]
        if strict:
            incomparable = ((x & ~y) != 0) & ((y & ~x) != 0)
            ok_strict = lhs[incomparable] >= rhs[incomparable] + tol
            ok_rest = lhs[~incomparable] >= rhs[~incomparable] - tol
            return bool(np.all(ok_strict)) and bool(np.all(ok_rest))
        return bool(np.all(lhs >= rhs - tol))
    raise SetFunctionError(f"unknown method {method!r}")


def weighted_average(fs: list[SetFunction], weights) -> SetFunction:
    """Convex combination of payoff functions sharing the same n.

    Preserves the zero empty-coalition payoff and supermodularity
    (the supermodular functions form a convex cone).
    """
    if not fs:
        raise SetFunctionError("need at least one set function")
    n = fs[0].n
    if any(f.n != n for f in fs):
        raise SetFunctionError("set functions disagree on player count")
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(fs),):
        raise SetFunctionError("one weight per set function required")
    if np.any(w < 0):
        raise SetFunctionError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise SetFunctionError(f"weights sum to {w.sum()!r}, expected 1")
    stack = np.stack([f.values for f in fs])
    vals = w @ stack
    vals[0] = 0.0
    return SetFunction(n, vals)


@dataclass(frozen=True)
class GroundTruthSpec:
    """Ground-truth payoff function plus per-player sampling noise levels."""

    truth: SetFunction
    sigmas: np.ndarray

    def __post_init__(self):
        sig = np.asarray(self.sigmas, dtype=float)
        if sig.ndim != 1 or sig.size < 1:
            raise SetFunctionError("sigmas must be a 1-d array")
        if np.any(sig < 0):
            raise SetFunctionError("sigmas must be nonnegative")
        if not is_supermodular(self.truth, strict=True):
            raise SetFunctionError("ground truth must be strictly supermodular")
        sig = sig.copy()
        sig.setflags(write=False)
        object.__setattr__(self, "sigmas", sig)


def sample_supermodular_opinion(
    spec: GroundTruthSpec,
    player: int,
    rng: np.random.Generator,
    perturb_grand: bool = True,
    max_attempts: int = 100_000,
) -> SetFunction:
    """Draw one private opinion: truth plus i.i.d. normal noise, rejected
    until supermodular.

    Rejection realizes a normal distribution truncated to the supermodular
    cone exactly.  Noise hits every proper nonempty coalition; the grand
    coalition is perturbed too when ``perturb_grand`` (the empty coalition
    never is).  Raises SamplerError once the attempt budget runs out,
    which signals a noise level too large for the truth's strictness
    margin.
    """
    if not 0 <= player < spec.sigmas.size:
        raise SetFunctionError(f"player index {player} out of range")
    sigma = float(spec.sigmas[player])
    truth = spec.truth
    if sigma == 0.0:
        return SetFunction(truth.n, truth.values)
    m = num_restricted(truth.n)
    for _ in range(max_attempts):
        vals = truth.values.copy()
        vals[1:-1] += rng.normal(0.0, sigma, size=m)
        if perturb_grand:
            vals[-1] += rng.normal(0.0, sigma)
        candidate = SetFunction(truth.n, vals)
        if is_supermodular(candidate):
            return candidate
    raise SamplerError(
        f"no supermodular sample for player {player} in {max_attempts} attempts; "
        f"sigma={sigma} is likely too large for the truth's strictness margin"
    )


def random_supermodular(
    n: int, rng: np.random.Generator, normalized: bool = True
) -> SetFunction:
    """Random strictly supermodular payoff function.

    Built from positive Harsanyi dividends: every coalition of size >= 2
    gets a positive dividend, singletons get a nonnegative one, and
    f(C) is the dividend sum over subsets of C.  Positive pair dividends
    make every incremental inequality strict.
    """
    _check_n(n)
    size = 1 << n
    dividends = np.zeros(size)
    counts = np.bitwise_count(np.arange(size))
    dividends[counts == 1] = rng.uniform(0.0, 1.0, size=int((counts == 1).sum()))
    big = counts >= 2
    dividends[big] = rng.uniform(0.2, 1.0, size=int(big.sum()))
    vals = subset_sums(dividends, n)
    if normalized:
        vals = vals / vals[-1]
    vals[0] = 0.0
    return SetFunction(n, vals)


def subset_sums(weights: np.ndarray, n: int) -> np.ndarray:
    """Zeta transform: out[C] = sum of weights[T] over T subseteq C."""
    out = np.asarray(weights, dtype=float).copy()
    for i in range(n):
        bit = 1 << i
        masks = np.arange(1 << n)
        has = (masks & bit) != 0
        out[has] += out[masks[has] ^ bit]
    return out


def membership_matrix(n: int) -> np.ndarray:
    """Boolean (2^n, n) matrix: row C, column i is player i's membership."""
    masks = np.arange(1 << n)
    return ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)


# --- text serialization -----------------------------------------------------
#
# Header line "n=<count>", then one "bitmask value" line per coalition in
# ascending bitmask order.  Values use repr for lossless round-trips.


def dump_setfn(f: SetFunction) -> str:
    lines = [f"n={f.n}"]
    lines.extend(f"{mask} {float(v)!r}" for mask, v in enumerate(f.values))
    return "\n".join(lines) + "\n"


def parse_setfn(text: str) -> SetFunction:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise SetFunctionError("set-function file must start with a 'n=<count>' header")
    try:
        n = int(lines[0][2:])
    except ValueError as exc:
        raise SetFunctionError(f"bad player count in header: {lines[0]!r}") from exc
    _check_n(n)
    body = lines[1:]
    if len(body) != (1 << n):
        raise SetFunctionError(f"expected {1 << n} value lines for n={n}, got {len(body)}")
    vals = np.empty(1 << n)
    for expected, line in enumerate(body):
        parts = line.split()
        if len(parts) != 2:
            raise SetFunctionError(f"malformed line {expected + 2}: {line!r}")
        mask, value = int(parts[0]), float(parts[1])
        if mask != expected:
            raise SetFunctionError(
                f"line {expected + 2}: expected bitmask {expected}, got {mask}"
            )
        vals[mask] = value
    return SetFunction(n, vals)


def write_setfn(f: SetFunction, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_setfn(f))


def read_setfn(path) -> SetFunction:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_setfn(fh.read())
