"""Generators for water tank strategies and the discrete heat exchanger.

Tank layout for the full/empty problem: red tanks at ``0..n-1``, blue tanks
at ``n..2n-1``.  Red tank ``i`` and blue tank ``j`` in the 1-based numbering
used for the window bounds are indices ``i - 1`` and ``n + j - 1``.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Callable, Optional, Union

from .tank_core import Average, Color, Pair, Strategy, Sweep, TankConfig

TieBreak = Union[str, Callable[[list], int]]


def _final_averages(n: int) -> list[Average]:
    return [Average((tuple(range(n)),)), Average((tuple(range(n, 2 * n)),))]


def naive_strategy(n: int, final_averages: bool = True) -> Strategy:
    """Every red tank in turn equilibrated with every blue tank, then both colors averaged."""
    if n <= 0:
        return Strategy(0)
    steps: list = [Sweep(i, range(n, 2 * n)) for i in range(n)]
    if final_averages:
        steps += _final_averages(n)
    return Strategy(2 * n, steps)


def moving_window_strategy(n: int, k: int, final_averages: bool = True) -> Strategy:
    """Red tank ``i`` equilibrated with blue tanks ``i..i+k-1`` for ``i = 1..n-k+1``.

    The last ``k - 1`` red tanks are never touched before the final averages.
    """
    if not 1 <= k <= n:
        raise ValueError(f"window width must satisfy 1 <= k <= n, got k={k}, n={n}")
    steps: list = [Sweep(i, range(n + i, n + i + k)) for i in range(n - k + 1)]
    if final_averages:
        steps += _final_averages(n)
    return Strategy(2 * n, steps)


def default_window_width(n: int) -> int:
    """``floor(sqrt(n + 2))`` clamped to ``[1, n]``."""
    if n < 1:
        raise ValueError("n must be positive")
    return max(1, min(n, math.isqrt(n + 2)))


# --------------------------------------------------------------------------
# greedy


def _pick(rule: TieBreak, eligible: set, rng: Optional[random.Random]) -> int:
    if rule == "leftmost":
        return min(eligible)
    if rule == "rightmost":
        return max(eligible)
    if rule == "random":
        return (rng or random.Random(0)).choice(sorted(eligible))
    if callable(rule):
        choice = rule(sorted(eligible))
        if choice not in eligible:
            raise ValueError(f"tie-break rule returned ineligible position {choice}")
        return choice
    raise ValueError(f"unknown tie-break rule {rule!r}")


def greedy_order(config: TankConfig) -> list[int]:
    """Tanks sorted by decreasing level; on ties blue before red, then by index."""
    return sorted(
        range(len(config)),
        key=lambda a: (-config.levels[a], config.colors[a] is Color.RED, a),
    )


def greedy_optimal_strategy(
    config: TankConfig,
    tiebreak: TieBreak = "leftmost",
    rng: Optional[random.Random] = None,
) -> Strategy:
    """Equilibrate red tanks sitting directly left of blue ones until none remain.

    ``tiebreak`` selects among the eligible adjacent positions: ``"leftmost"``
    (default), ``"rightmost"``, ``"random"`` (uses ``rng``), or a callable
    receiving the sorted list of eligible positions and returning one.

    Each step swaps the two tanks in the order, so the number of red-left-of-
    blue inversions drops by one and the loop ends after at most
    ``#red * #blue`` steps.
    """
    levels = list(config.levels)
    is_red = [c is Color.RED for c in config.colors]
    order = greedy_order(config)

    def eligible_at(p: int) -> bool:
        return 0 <= p < len(order) - 1 and is_red[order[p]] and not is_red[order[p + 1]]

    eligible = {p for p in range(len(order) - 1) if eligible_at(p)}
    steps = []
    while eligible:
        p = _pick(tiebreak, eligible, rng)
        a, b = order[p], order[p + 1]
        levels[a] = levels[b] = (levels[a] + levels[b]) / 2
        steps.append(Pair(a, b))
        order[p], order[p + 1] = b, a
        for q in (p - 1, p, p + 1):
            if eligible_at(q):
                eligible.add(q)
            else:
                eligible.discard(q)
    return Strategy(len(config), steps)


# --------------------------------------------------------------------------
# heat exchanger


def heat_exchanger_simulate(
    n: int,
    capacity: Optional[int] = None,
    exact: bool = True,
    mix_outlets: bool = False,
) -> TankConfig:
    """Discrete countercurrent exchanger with ``n`` hot and ``n`` cold chunks.

    The left tube carries hot chunks (level 1) top to bottom, the right tube
    cold chunks (level 0) bottom to top.  Both tubes have ``L`` positions,
    ``0`` at the top.  On every tick each chunk advances one position, new
    chunks enter, and chunks at the same position equilibrate.  Hot chunk
    ``i`` (1-based) enters at tick ``2i``; cold chunk ``j`` enters at tick
    ``2j + offset``, so chunks of one fluid travel two positions apart.

    Hot ``i`` and cold ``j`` then meet exactly once, at tick
    ``i + j + (L - 1 + offset) / 2`` and position ``j - i + (L - 1 + offset) / 2``
    if that lies inside the tube.  Meetings therefore respect the order of the
    double loop ``for i: for j:`` (``(i, j)`` after ``(i, j-1)`` and
    ``(i-1, j)``), and meetings on the same tick involve disjoint chunks.

    * unlimited (``capacity=None``): ``L = 2n - 1``, ``offset = 0``; every
      pair meets, reproducing the naive double loop.
    * ``capacity=k``: ``L = k``, ``offset = 1 - k``; pairs with
      ``0 <= j - i <= k - 1`` meet.  For ``i <= n - k + 1`` that is the moving
      window; the trailing ``k - 1`` hot chunks also meet the cold chunks
      still ahead of them.

    Returns the exit levels as a config (hot chunks as red tanks ``0..n-1``,
    cold as blue).  ``mix_outlets`` averages each fluid after it has left.
    """
    if n < 1:
        raise ValueError("need at least one chunk")
    if capacity is None:
        length, offset = 2 * n - 1, 0
    else:
        if not 1 <= capacity <= n:
            raise ValueError(f"capacity must be in 1..{n}, got {capacity}")
        length, offset = capacity, 1 - capacity

    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    hot = [one] * n
    cold = [zero] * n
    left: list = [None] * length
    right: list = [None] * length

    tick = min(2, 2 + offset)
    last_entry = max(2 * n, 2 * n + offset)
    while True:
        left = [None] + left[:-1]
        right = right[1:] + [None]
        if tick % 2 == 0 and 1 <= tick // 2 <= n:
            left[0] = tick // 2 - 1
        if (tick - offset) % 2 == 0 and 1 <= (tick - offset) // 2 <= n:
            right[-1] = (tick - offset) // 2 - 1
        for pos in range(length):
            i, j = left[pos], right[pos]
            if i is not None and j is not None:
                hot[i] = cold[j] = (hot[i] + cold[j]) / 2
        if tick >= last_entry and all(c is None for c in left) and all(c is None for c in right):
            break
        tick += 1

    if mix_outlets:
        hot = [sum(hot, zero) / n] * n
        cold = [sum(cold, zero) / n] * n
    return TankConfig.from_colored(hot, cold)
