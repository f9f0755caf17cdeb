"""Tank states, the two averaging primitives, and strategy execution.

Two scalar backends are supported.  The exact backend works on
:class:`fractions.Fraction` levels; since every step only adds and divides by
small integers, results are exact and denominators grow as powers of two (times
the block sizes of any ``Average`` steps and the initial denominators).  The
float backend works on ``float64`` numpy arrays and agrees with the exact one
to about ``1e-12`` per step in practice; :data:`FLOAT_TOL` is the tolerance used
for doubly-stochastic checks on float matrices.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Sequence, Union

import numpy as np
from scipy.signal import lfilter

FLOAT_TOL = 1e-12

# one pivot-vs-partner equilibration: y[t] = (y[t-1] + x[t]) / 2
_SWEEP_B = np.array([0.5])
_SWEEP_A = np.array([1.0, -0.5])


class InvalidStepError(ValueError):
    """A step refers to bad indices (out of range, or a tank paired with itself)."""


class InvalidPartitionError(InvalidStepError):
    """Blocks of an ``Average`` step overlap."""


class Color(str, enum.Enum):
    RED = "red"
    BLUE = "blue"


@dataclass(frozen=True)
class TankConfig:
    """Water levels of ``N`` tanks together with their colors.

    Levels may be negative; only finiteness is required.  A config is *exact*
    when every level is a ``Fraction`` (ints are promoted on construction when
    any level is a ``Fraction``).
    """

    levels: tuple
    colors: tuple

    def __post_init__(self):
        levels = tuple(self.levels)
        colors = tuple(Color(c) for c in self.colors)
        if len(levels) != len(colors):
            raise ValueError(f"{len(levels)} levels but {len(colors)} colors")
        if any(isinstance(v, Fraction) for v in levels):
            levels = tuple(Fraction(v) for v in levels)
        else:
            levels = tuple(float(v) for v in levels)
            if not all(math.isfinite(v) for v in levels):
                raise ValueError("levels must be finite")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "colors", colors)

    @classmethod
    def full_empty(cls, n: int, exact: bool = False) -> "TankConfig":
        """``n`` full red tanks (indices ``0..n-1``) then ``n`` empty blue ones."""
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls((one,) * n + (zero,) * n, (Color.RED,) * n + (Color.BLUE,) * n)

    @classmethod
    def from_colored(cls, reds: Sequence, blues: Sequence) -> "TankConfig":
        return cls(tuple(reds) + tuple(blues), (Color.RED,) * len(reds) + (Color.BLUE,) * len(blues))

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def exact(self) -> bool:
        return bool(self.levels) and isinstance(self.levels[0], Fraction)

    @property
    def reds(self) -> tuple[int, ...]:
        return tuple(a for a, c in enumerate(self.colors) if c is Color.RED)

    @property
    def blues(self) -> tuple[int, ...]:
        return tuple(a for a, c in enumerate(self.colors) if c is Color.BLUE)

    def with_levels(self, levels: Iterable) -> "TankConfig":
        return TankConfig(tuple(levels), self.colors)

    def to_exact(self) -> "TankConfig":
        return TankConfig(tuple(Fraction(v) for v in self.levels), self.colors)

    def to_float(self) -> "TankConfig":
        return TankConfig(tuple(float(v) for v in self.levels), self.colors)


# --------------------------------------------------------------------------
# steps and strategies


@dataclass(frozen=True)
class Pair:
    """Equilibrate tanks ``a`` and ``b``."""

    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise InvalidStepError(f"cannot equilibrate tank {self.a} with itself")
        if self.a < 0 or self.b < 0:
            raise InvalidStepError(f"negative tank index in {self}")

    @property
    def indices(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Average:
    """Replace the levels of each block by the block mean (uniform weights)."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(int(a) for a in block) for block in self.blocks)
        seen: set[int] = set()
        for block in blocks:
            for a in block:
                if a < 0:
                    raise InvalidStepError(f"negative tank index {a}")
                if a in seen:
                    raise InvalidPartitionError(f"tank {a} appears in more than one block")
                seen.add(a)
        object.__setattr__(self, "blocks", blocks)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(a for block in self.blocks for a in block)


@dataclass(frozen=True)
class Sweep:
    """Equilibrate ``pivot`` successively with each tank in ``partners``.

    Shorthand for ``[Pair(pivot, p) for p in partners]``.  Partners must be
    distinct and exclude the pivot; under that condition the float backend
    runs the whole sweep as a single first-order linear recurrence.
    """

    pivot: int
    partners: Union[range, tuple]

    def __post_init__(self):
        partners = self.partners
        if not isinstance(partners, range):
            partners = tuple(int(p) for p in partners)
            if len(set(partners)) != len(partners):
                raise InvalidStepError("sweep partners must be distinct")
        elif partners.step == 0:
            raise InvalidStepError("bad partner range")
        if self.pivot in partners:
            raise InvalidStepError(f"sweep pivot {self.pivot} is among its partners")
        if self.pivot < 0 or (len(partners) and min(partners) < 0):
            raise InvalidStepError("negative tank index in sweep")
        object.__setattr__(self, "partners", partners)

    def pairs(self) -> Iterator[Pair]:
        for p in self.partners:
            yield Pair(self.pivot, p)

    @property
    def indices(self) -> tuple[int, ...]:
        return (self.pivot, *self.partners)


Step = Union[Pair, Average]


def _max_index(step) -> int:
    if isinstance(step, Pair):
        return max(step.a, step.b)
    if isinstance(step, Sweep):
        partners = step.partners
        if isinstance(partners, range):
            return max(step.pivot, partners[0], partners[-1]) if len(partners) else step.pivot
        return max(step.pivot, max(partners, default=-1))
    return max(step.indices, default=-1)


@dataclass(frozen=True)
class Strategy:
    """A finite sequence of steps on ``n_tanks`` tanks.

    ``steps`` may contain :class:`Sweep` blocks; iterating the strategy yields
    the elementary :class:`Pair` / :class:`Average` steps.
    """

    n_tanks: int
    steps: tuple = ()

    def __post_init__(self):
        steps = tuple(self.steps)
        for step in steps:
            if not isinstance(step, (Pair, Average, Sweep)):
                raise InvalidStepError(f"not a step: {step!r}")
            if _max_index(step) >= self.n_tanks:
                raise InvalidStepError(f"{step} out of range for {self.n_tanks} tanks")
        object.__setattr__(self, "steps", steps)

    def __iter__(self) -> Iterator[Step]:
        for step in self.steps:
            if isinstance(step, Sweep):
                yield from step.pairs()
            else:
                yield step

    def __len__(self) -> int:
        return sum(len(s.partners) if isinstance(s, Sweep) else 1 for s in self.steps)

    def __add__(self, other: "Strategy") -> "Strategy":
        return Strategy(max(self.n_tanks, other.n_tanks), self.steps + other.steps)

    def pairs(self) -> list[Pair]:
        return [s for s in self if isinstance(s, Pair)]


def relabel(strategy: Strategy, mapping: Sequence[int], n_tanks: int) -> Strategy:
    """Rename tank ``a`` to ``mapping[a]`` in every step."""
    out = []
    for step in strategy.steps:
        if isinstance(step, Pair):
            out.append(Pair(mapping[step.a], mapping[step.b]))
        elif isinstance(step, Sweep):
            out.append(Sweep(mapping[step.pivot], tuple(mapping[p] for p in step.partners)))
        else:
            out.append(Average(tuple(tuple(mapping[a] for a in b) for b in step.blocks)))
    return Strategy(n_tanks, out)


def expand_average(step: Average, rounds: int) -> list[Pair]:
    """Approximate ``step`` by ``rounds`` passes of all-pairs equilibrations.

    Exact block averages are what the executors use; this exists to study how
    quickly pairwise equilibrations converge to them.
    """
    pairs = []
    for _ in range(rounds):
        for block in step.blocks:
            pairs.extend(Pair(a, b) for a, b in combinations(block, 2))
    return pairs


# --------------------------------------------------------------------------
# primitives


def _check_pair(n: int, a: int, b: int) -> None:
    if a == b or not (0 <= a < n and 0 <= b < n):
        raise InvalidStepError(f"invalid pair ({a}, {b}) for {n} tanks")


def equilibrate_pair(config: TankConfig, a: int, b: int) -> TankConfig:
    _check_pair(len(config), a, b)
    levels = list(config.levels)
    levels[a] = levels[b] = (levels[a] + levels[b]) / 2
    return config.with_levels(levels)


def average_partition(levels, blocks):
    """Average ``levels`` over each block of ``blocks``; other entries unchanged."""
    step = Average(blocks)
    n = len(levels)
    if any(a >= n for a in step.indices):
        raise InvalidStepError(f"block index out of range for {n} cells")
    if isinstance(levels, np.ndarray):
        out = np.array(levels, dtype=float if levels.dtype != object else object)
        _apply_average_array(out, step)
        return out
    out = list(levels)
    if any(isinstance(v, Fraction) for v in out):
        out = [Fraction(v) for v in out]
    _apply_average_list(out, step)
    return tuple(out)


def _apply_average_list(levels: list, step: Average) -> None:
    for block in step.blocks:
        if not block:
            continue
        mean = sum(levels[a] for a in block) / len(block)
        for a in block:
            levels[a] = mean


def _apply_average_array(values: np.ndarray, step: Average) -> None:
    for block in step.blocks:
        if block:
            idx = list(block)
            values[idx] = values[idx].mean(axis=0)


# --------------------------------------------------------------------------
# execution


def _apply_list(levels: list, strategy: Strategy) -> list:
    for step in strategy:
        if isinstance(step, Pair):
            levels[step.a] = levels[step.b] = (levels[step.a] + levels[step.b]) / 2
        else:
            _apply_average_list(levels, step)
    return levels


def _partner_index(step: Sweep):
    partners = step.partners
    if isinstance(partners, range) and partners.step == 1:
        return slice(partners.start, partners.stop)
    return np.asarray(partners)


_SHORT_SWEEP = 64


@functools.lru_cache(maxsize=None)
def _sweep_weights(k: int) -> tuple[np.ndarray, np.ndarray]:
    # y[t] = 2^-(t+1) * pivot + sum_{s<=t} 2^-(t-s+1) * x[s]
    t = np.arange(k)
    lag = t[:, None] - t[None, :]
    weights = np.where(lag >= 0, 0.5 ** (lag + 1.0), 0.0)
    return weights, 0.5 ** (t + 1.0)


def _sweep_values(values: np.ndarray, step: Sweep) -> np.ndarray:
    """Levels of the pivot after each equilibration of ``step``."""
    x = values[_partner_index(step)]
    pivot = values[step.pivot]
    k = len(x)
    if k <= _SHORT_SWEEP:
        weights, decay = _sweep_weights(k)
        return weights @ x + np.multiply.outer(decay, pivot)
    y, _ = lfilter(_SWEEP_B, _SWEEP_A, x, axis=0, zi=0.5 * pivot[np.newaxis])
    return y


def _apply_array(values: np.ndarray, strategy: Strategy) -> np.ndarray:
    for step in strategy.steps:
        if isinstance(step, Pair):
            mean = (values[step.a] + values[step.b]) / 2
            values[step.a] = mean
            values[step.b] = mean
        elif isinstance(step, Sweep):
            if len(step.partners) == 0:
                continue
            y = _sweep_values(values, step)
            values[_partner_index(step)] = y
            values[step.pivot] = y[-1]
        else:
            _apply_average_array(values, step)
    return values


def apply_strategy(values, strategy: Strategy):
    """Run ``strategy`` on a raw level vector.

    A float ``ndarray`` (1-D, or 2-D with one column per function) takes the
    vectorised path and a new array is returned.  Any other sequence is run
    step by step in exact arithmetic when it holds ``Fraction`` values, and
    returned as a tuple.
    """
    if len(values) != strategy.n_tanks:
        raise InvalidStepError(f"strategy is for {strategy.n_tanks} tanks, got {len(values)} levels")
    if isinstance(values, np.ndarray) and values.dtype != object:
        return _apply_array(np.array(values, dtype=float), strategy)
    levels = list(values)
    if any(isinstance(v, Fraction) for v in levels):
        levels = [Fraction(v) for v in levels]
    return tuple(_apply_list(levels, strategy))


def iterate_strategy(levels: Sequence, strategy: Strategy) -> Iterator[tuple[Step, list]]:
    """Yield ``(step, levels)`` after each elementary step.

    The yielded list is updated in place on the next iteration; copy it to
    keep a snapshot.
    """
    if len(levels) != strategy.n_tanks:
        raise InvalidStepError(f"strategy is for {strategy.n_tanks} tanks, got {len(levels)} levels")
    current = list(levels)
    for step in strategy:
        if isinstance(step, Pair):
            current[step.a] = current[step.b] = (current[step.a] + current[step.b]) / 2
        else:
            _apply_average_list(current, step)
        yield step, current


def run_strategy(config: TankConfig, strategy: Strategy, trace: bool = False, backend: str | None = None):
    """Apply ``strategy`` to ``config``.

    ``backend`` is ``"exact"`` or ``"float"``; by default it follows the
    config.  With ``trace=True`` returns ``(final, trace)`` where ``trace``
    holds the full level tuple after every elementary step.
    """
    if backend is None:
        backend = "exact" if config.exact else "float"
    if backend == "exact":
        config = config.to_exact()
    elif backend == "float":
        config = config.to_float()
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if strategy.n_tanks != len(config):
        raise InvalidStepError(f"strategy is for {strategy.n_tanks} tanks, config has {len(config)}")

    if trace:
        snapshots = [tuple(lv) for _, lv in iterate_strategy(config.levels, strategy)]
        final = snapshots[-1] if snapshots else config.levels
        return config.with_levels(final), snapshots
    if backend == "exact":
        return config.with_levels(_apply_list(list(config.levels), strategy))
    values = _apply_array(np.array(config.levels, dtype=float), strategy)
    return config.with_levels(values.tolist())


# --------------------------------------------------------------------------
# matrices


def strategy_matrix(strategy: Strategy, exact: bool = True) -> np.ndarray:
    """The doubly stochastic ``D`` with ``run_strategy(x) == D @ x``.

    Each step left-multiplies ``D``, i.e. averages the corresponding rows.
    Exact matrices are object arrays of ``Fraction``.
    """
    n = strategy.n_tanks
    if exact:
        d = np.empty((n, n), dtype=object)
        d[...] = Fraction(0)
        for a in range(n):
            d[a, a] = Fraction(1)
    else:
        d = np.eye(n)
    for step in strategy:
        if isinstance(step, Pair):
            row = (d[step.a] + d[step.b]) / 2
            d[step.a] = row
            d[step.b] = row
        else:
            for block in step.blocks:
                if block:
                    idx = list(block)
                    d[idx] = d[idx].sum(axis=0) / len(idx)
    return d


def apply_matrix(matrix: np.ndarray, levels):
    """Matrix-vector product ``matrix @ levels`` (exact for object matrices)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[1] != len(levels):
        raise ValueError(f"dimension mismatch: {matrix.shape} vs {len(levels)}")
    if matrix.dtype == object or any(isinstance(v, Fraction) for v in levels):
        vec = [Fraction(v) for v in levels]
        return tuple(sum((Fraction(m) * v for m, v in zip(row, vec)), Fraction(0)) for row in matrix)
    return matrix @ np.asarray(levels, dtype=float)


def is_doubly_stochastic(matrix: np.ndarray, tol: float = FLOAT_TOL) -> bool:
    """Nonnegative with unit row and column sums; exact for object matrices."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    if matrix.dtype == object:
        one = Fraction(1)
        return (
            all(v >= 0 for v in matrix.flat)
            and all(sum(row) == one for row in matrix)
            and all(sum(col) == one for col in matrix.T)
        )
    return bool(
        (matrix >= -tol).all()
        and np.allclose(matrix.sum(axis=0), 1.0, rtol=0, atol=tol * matrix.shape[0])
        and np.allclose(matrix.sum(axis=1), 1.0, rtol=0, atol=tol * matrix.shape[0])
    )


def transferred_to_blue(initial: TankConfig, final: TankConfig):
    """Water gained by the blue tanks between ``initial`` and ``final``."""
    if len(initial) != len(final) or initial.colors != final.colors:
        raise ValueError("configs differ in size or coloring")
    zero = Fraction(0) if final.exact and initial.exact else 0.0
    return sum((final.levels[a] - initial.levels[a] for a in initial.blues), zero)
