"""Bound checks for the moving-window strategy, residual sweeps and fits,
and an exhaustive optimality oracle for small instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Optional, Sequence

import numpy as np

from .strategies import default_window_width, moving_window_strategy, naive_strategy
from .tank_core import Pair, Strategy, TankConfig, iterate_strategy, run_strategy

BRUTE_FORCE_MAX_TANKS = 6
BRUTE_FORCE_MAX_LEN = 8


@dataclass(frozen=True)
class SweepRecord:
    n: int
    strategy_id: str
    residual_per_red: float

    def __post_init__(self):
        if not 0 <= self.residual_per_red <= 1:
            raise ValueError(f"residual {self.residual_per_red} outside [0, 1]")


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit ``residual(n) ~ a / sqrt(n) + b / n**1.5``."""

    a: float
    b: float
    rms_error: float


@dataclass
class BoundReport:
    name: str
    passed: bool
    checked: int = 0
    details: dict = field(default_factory=dict)
    first_violation: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "details": self.details,
            "first_violation": self.first_violation,
        }


# --------------------------------------------------------------------------
# moving-window bounds


def lemma_bound(i: int, j: int, k: int) -> Fraction:
    """Upper bound ``(k + i - j) / (k + 1)`` on red ``i`` and blue ``j`` after they meet."""
    if i < 1 or not i <= j <= i + k - 1:
        raise ValueError(f"blue tank {j} is outside the window of red tank {i} (k={k})")
    return Fraction(k + i - j, k + 1)


def total_red_bound(n: int, k: int) -> Fraction:
    """Water left in the red tanks before the final averages is at most this."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    return Fraction(n - k + 1, k + 1) + (k - 1)


def _le(value, bound: Fraction, tol: float) -> bool:
    if isinstance(value, Fraction):
        return value <= bound
    return value <= float(bound) + tol


def verify_lemma_bounds(n: int, k: int, exact: bool = True, tol: float = 1e-12) -> BoundReport:
    """Run the window strategy step by step and check every meeting against :func:`lemma_bound`."""
    strategy = moving_window_strategy(n, k, final_averages=False)
    config = TankConfig.full_empty(n, exact=exact)
    checked = 0
    for step, levels in iterate_strategy(config.levels, strategy):
        red, blue = step.a, step.b
        i, j = red + 1, blue - n + 1
        bound = lemma_bound(i, j, k)
        for tank in (red, blue):
            if not _le(levels[tank], bound, tol):
                return BoundReport(
                    "lemma",
                    False,
                    checked,
                    {"n": n, "k": k},
                    {"step": checked, "i": i, "j": j, "tank": tank, "level": str(levels[tank]), "bound": str(bound)},
                )
        checked += 1
    return BoundReport("lemma", True, checked, {"n": n, "k": k})


def check_total_red_bound(n: int, k: int, exact: bool = True) -> BoundReport:
    """Pre-average red total against :func:`total_red_bound`."""
    final = run_strategy(TankConfig.full_empty(n, exact=exact), moving_window_strategy(n, k, final_averages=False))
    total = sum(final.levels[:n], Fraction(0) if exact else 0.0)
    bound = total_red_bound(n, k)
    passed = total <= bound if exact else total <= float(bound) + 1e-9
    return BoundReport("total_red", bool(passed), 1, {"n": n, "k": k, "red_total": str(total), "bound": str(bound)})


def theorem_bound_check(n: int, exact: bool = False) -> BoundReport:
    """Window strategy with default width leaves every red tank below ``2 / sqrt(n)``.

    Also checks the closing estimate ``total_red_bound(n, k) < 2 sqrt(n)``.
    Exact comparisons against the irrational bounds are done by squaring.
    """
    k = default_window_width(n)
    final = run_strategy(TankConfig.full_empty(n, exact=exact), moving_window_strategy(n, k))
    reds = final.levels[:n]
    worst = max(reds)
    if exact:
        # 0 <= r < 2/sqrt(n)  <=>  r^2 n < 4
        per_red_ok = all(r >= 0 and r * r * n < 4 for r in reds)
    else:
        per_red_ok = worst < 2 / math.sqrt(n)
    total = total_red_bound(n, k)
    total_ok = total * total < 4 * n  # total < 2 sqrt(n)
    return BoundReport(
        "theorem",
        bool(per_red_ok and total_ok),
        n,
        {
            "n": n,
            "k": k,
            "max_red": float(worst),
            "per_red_bound": 2 / math.sqrt(n),
            "total_red_bound": float(total),
            "total_bound": 2 * math.sqrt(n),
            "per_red_ok": bool(per_red_ok),
            "total_ok": bool(total_ok),
        },
    )


# --------------------------------------------------------------------------
# residual sweeps


def residual(n: int, strategy: str = "naive", exact: bool = False):
    """Common level of the red tanks after the strategy on the full/empty start."""
    if n < 1:
        raise ValueError("n must be positive")
    if strategy == "naive":
        strat = naive_strategy(n)
    elif strategy == "window":
        strat = moving_window_strategy(n, default_window_width(n))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return run_strategy(TankConfig.full_empty(n, exact=exact), strat).levels[0]


def residual_sweep(ns: Sequence[int], strategy: str = "naive") -> list[SweepRecord]:
    return [SweepRecord(n, strategy, float(residual(n, strategy))) for n in ns]


def conjecture_fit(records: Sequence[SweepRecord]) -> FitResult:
    """Fit ``a n^(-1/2) + b n^(-3/2)``; the conjectured ``a`` is ``1/sqrt(pi)``."""
    if len({r.n for r in records}) < 3:
        raise ValueError("need records for at least three distinct n")
    n = np.array([r.n for r in records], dtype=float)
    y = np.array([r.residual_per_red for r in records])
    design = np.column_stack([n**-0.5, n**-1.5])
    if np.linalg.matrix_rank(design) < 2:
        raise ValueError("degenerate design matrix")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    rms = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return FitResult(float(coef[0]), float(coef[1]), rms)


# --------------------------------------------------------------------------
# exhaustive optimum


def brute_force_optimal(config: TankConfig, max_len: int) -> tuple[Fraction, Strategy]:
    """Largest transfer to the blue tanks over all pair sequences of length <= ``max_len``.

    Every pair of distinct tanks is allowed, whatever the colors; ordered and
    unordered pairs give the same equilibration, so unordered ones are
    enumerated.  Levels are scaled to integers by ``lcm(denominators) *
    2**max_len`` so that every reachable state stays integral.  A state seen
    before with at least as many remaining steps is not expanded again.
    """
    n = len(config)
    if n > BRUTE_FORCE_MAX_TANKS or max_len > BRUTE_FORCE_MAX_LEN:
        raise ValueError(
            f"search limited to {BRUTE_FORCE_MAX_TANKS} tanks and length {BRUTE_FORCE_MAX_LEN}, "
            f"got {n} tanks and length {max_len}"
        )
    if max_len < 0:
        raise ValueError("max_len must be nonnegative")
    levels = [Fraction(v) for v in config.levels]
    scale = lcm(*(v.denominator for v in levels), 1) << max_len
    start = tuple(int(v * scale) for v in levels)
    blues = config.blues
    pairs = list(combinations(range(n), 2))

    def blue_total(state):
        return sum(state[b] for b in blues)

    best = [blue_total(start), ()]
    seen: dict[tuple, int] = {}

    def search(state: tuple, remaining: int, path: tuple) -> None:
        if seen.get(state, -1) >= remaining:
            return
        seen[state] = remaining
        value = blue_total(state)
        if value > best[0]:
            best[0], best[1] = value, path
        if remaining == 0:
            return
        for a, b in pairs:
            if state[a] == state[b]:
                continue
            mean = (state[a] + state[b]) // 2
            nxt = list(state)
            nxt[a] = nxt[b] = mean
            search(tuple(nxt), remaining - 1, path + ((a, b),))

    search(start, max_len, ())
    gain = Fraction(best[0] - blue_total(start), scale)
    return gain, Strategy(n, [Pair(a, b) for a, b in best[1]])
