"""Exact small-instance ground truth via the local correlation polytope.

A correlation matrix c[j][k] admits a local model iff it is a convex
mixture of deterministic strategies, where each strategy assigns fixed
signs a_s in {+-1}^N and b_s in {+-1}^N and contributes the rank-1
matrix a_s b_s^T.  The largest representable visibility for a Gram
matrix g is therefore the linear program

    max V  s.t.  V g[j][k] = sum_s w_s a_s[j] b_s[k],  w >= 0,
                 sum_s w_s = 1,  V <= 1.

Zero-marginal constraints come for free: averaging every strategy with
its global sign flip zeroes the marginals without touching the
correlations.  The global flip also means fixing a_s[0] = +1 loses no
generality, halving the vertex count to 2^(2N-1).

The LP is solved by a self-contained dense two-phase simplex so the
oracle does not lean on any external solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construct import SettingsEnsemble
from .errors import InvalidInputError, LvtError, ResourceLimitError
from .estimate import VisibilityEstimate

# Hard cap on settings per side: 2^(2N-1) LP columns at N=12 is the
# absolute ceiling; dense tableaus stay desk-sized only up to N ~ 8.
MAX_ORACLE_SETTINGS = 12

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7


@dataclass(frozen=True)
class DeterministicStrategy:
    """Fixed +-1 answers for every setting on each side."""

    a_signs: tuple
    b_signs: tuple

    def __post_init__(self) -> None:
        a = tuple(int(s) for s in self.a_signs)
        b = tuple(int(s) for s in self.b_signs)
        if not a or len(a) != len(b):
            raise InvalidInputError("sides need equal nonzero sign counts")
        if any(s not in (1, -1) for s in a + b):
            raise InvalidInputError("strategy signs must be +1 or -1")
        object.__setattr__(self, "a_signs", a)
        object.__setattr__(self, "b_signs", b)

    def correlation(self) -> np.ndarray:
        """Rank-1 correlation matrix a_signs outer b_signs."""
        return np.outer(self.a_signs, self.b_signs).astype(float)


def _sign_rows(n_bits: int) -> np.ndarray:
    """All 2^n_bits sign rows; bit 0 of the row index drives column 0."""
    idx = np.arange(1 << n_bits)[:, None]
    bits = (idx >> np.arange(n_bits)[None, :]) & 1
    return 1.0 - 2.0 * bits


def _check_n(n: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidInputError(f"setting count must be an integer >= 1, got {n!r}")
    if n > MAX_ORACLE_SETTINGS:
        raise ResourceLimitError(
            f"oracle handles at most {MAX_ORACLE_SETTINGS} settings per side "
            f"(2^(2N-1) strategies), got {n}"
        )
    return int(n)


def _strategy_signs(n: int, fix_first_sign: bool) -> tuple[np.ndarray, np.ndarray]:
    if fix_first_sign:
        a_rows = np.ones(((1 << (n - 1)), n)) if n > 1 else np.ones((1, 1))
        if n > 1:
            a_rows[:, 1:] = _sign_rows(n - 1)
    else:
        a_rows = _sign_rows(n)
    return a_rows, _sign_rows(n)


def enumerate_strategies(n: int, fix_first_sign: bool = True) -> list[DeterministicStrategy]:
    """All deterministic strategies, a_signs[0] fixed to +1 by default.

    Count is 2^(2n-1) gauge-fixed (2^(2n) otherwise); keep n small, the
    list is materialized.
    """
    n = _check_n(n)
    a_rows, b_rows = _strategy_signs(n, fix_first_sign)
    return [
        DeterministicStrategy(tuple(int(x) for x in a), tuple(int(x) for x in b))
        for a in a_rows
        for b in b_rows
    ]


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    tab -= np.outer(factors, tab[row])


def _iterate(tab: np.ndarray, basis: list, max_pivots: int, pivots_done: int) -> int:
    """Run simplex pivots until the last-row reduced costs are optimal.

    Dantzig entering rule with a Bland fallback kicking in late to break
    cycles; ratio ties resolve to the lowest basis index.
    """
    m = len(basis)
    bland_after = pivots_done + 3 * tab.shape[1] + 50
    pivots = pivots_done
    while True:
        costs = tab[m, :-1]
        if pivots < bland_after:
            col = int(np.argmin(costs))
            if costs[col] >= -_PIVOT_TOL:
                return pivots
        else:
            negative = np.nonzero(costs < -_PIVOT_TOL)[0]
            if negative.size == 0:
                return pivots
            col = int(negative[0])
        column = tab[:m, col]
        rows = np.nonzero(column > _PIVOT_TOL)[0]
        if rows.size == 0:
            raise LvtError("LP unbounded; the visibility cap row is missing")
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(tab, row, col)
        basis[row] = col
        pivots += 1
        if pivots > max_pivots:
            raise ResourceLimitError(f"simplex exceeded {max_pivots} pivots")


def _lp_min(a_mat: np.ndarray, b_vec: np.ndarray, cost: np.ndarray) -> tuple[np.ndarray, int]:
    """Two-phase dense simplex for min cost.x s.t. a_mat x = b_vec, x >= 0."""
    m, n = a_mat.shape
    a = a_mat.astype(float, copy=True)
    b = b_vec.astype(float, copy=True)
    neg = b < 0.0
    a[neg] *= -1.0
    b[neg] *= -1.0
    max_pivots = 10000 + 50 * (m + n)

    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :n] = -a.sum(axis=0)
    tab[m, -1] = -b.sum()
    basis = list(range(n, n + m))
    pivots = _iterate(tab, basis, max_pivots, 0)
    if -tab[m, -1] > _FEAS_TOL:
        raise LvtError("LP infeasible; the uniform mixture certificate failed")

    keep_rows = []
    for r in range(m):
        if basis[r] >= n:
            real = np.nonzero(np.abs(tab[r, :n]) > _PIVOT_TOL)[0]
            if real.size == 0:
                continue
            _pivot(tab, r, int(real[0]))
            basis[r] = int(real[0])
            pivots += 1
        keep_rows.append(r)

    rows = len(keep_rows)
    phase2 = np.zeros((rows + 1, n + 1))
    phase2[:rows, :n] = tab[keep_rows, :n]
    phase2[:rows, -1] = tab[keep_rows, -1]
    basis2 = [basis[r] for r in keep_rows]
    phase2[rows, :n] = cost
    for r, var in enumerate(basis2):
        if cost[var] != 0.0:
            phase2[rows] -= cost[var] * phase2[r]
    pivots = _iterate(phase2, basis2, max_pivots, pivots)

    x = np.zeros(n)
    for r, var in enumerate(basis2):
        x[var] = phase2[r, -1]
    return x, pivots


def max_visibility_for_gram(gram, fix_first_sign: bool = True) -> tuple[float, int]:
    """LP optimum for a raw Gram-like matrix; returns (visibility, pivots).

    Accepts any square matrix with entries in [-1, 1], physical or not,
    so scaled correlation targets can be probed directly.
    """
    g = np.asarray(gram, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidInputError(f"gram must be square, got shape {g.shape}")
    if not np.all(np.isfinite(g)) or np.max(np.abs(g)) > 1.0 + 1e-9:
        raise InvalidInputError("gram entries must be finite and lie in [-1, 1]")
    n = _check_n(g.shape[0])

    a_rows, b_rows = _strategy_signs(n, fix_first_sign)
    cols = np.einsum("sj,tk->stjk", a_rows, b_rows).reshape(-1, n * n)
    n_strategies = cols.shape[0]

    n_var = n_strategies + 2
    n_rows = n * n + 2
    a_mat = np.zeros((n_rows, n_var))
    a_mat[: n * n, :n_strategies] = -cols.T
    a_mat[: n * n, n_strategies] = g.ravel()
    a_mat[n * n, :n_strategies] = 1.0
    a_mat[n * n + 1, n_strategies] = 1.0
    a_mat[n * n + 1, n_strategies + 1] = 1.0
    b_vec = np.zeros(n_rows)
    b_vec[n * n] = 1.0
    b_vec[n * n + 1] = 1.0
    cost = np.zeros(n_var)
    cost[n_strategies] = -1.0

    x, pivots = _lp_min(a_mat, b_vec, cost)
    return min(1.0, max(0.0, float(x[n_strategies]))), pivots


def max_visibility_lp(settings: SettingsEnsemble) -> VisibilityEstimate:
    """Exact maximum representable visibility for the given settings."""
    value, pivots = max_visibility_for_gram(settings.gram)
    return VisibilityEstimate(
        value=value,
        std_error=0.0,
        n_settings=settings.n_settings,
        provenance="oracle",
        seed=0,
        iterations_used=pivots,
    )
