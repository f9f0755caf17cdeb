"""Approximating a permutation of cells by composed partition averages.

A function on ``N`` equal-measure cells is subdivided into ``N * m`` equal
sub-cells.  Swapping the values of two cells is approximated by the moving
window tank strategy run between their sub-cells (each pair equilibration is
the average over a two-element block, the closing steps are averages over all
sub-cells of one cell).  A permutation is split into two involutions and their
transpositions are chained; within one involution the transpositions touch
disjoint cells and commute.

Convention: ``perm.images[x]`` is the image of ``x`` and ``f ∘ perm`` is the
function ``x -> f[perm[x]]``.  A plan approximating ``g -> g ∘ S`` followed by
one approximating ``g -> g ∘ T`` approximates ``f -> f ∘ S ∘ T``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .strategies import default_window_width
from .tank_core import Average, Pair, Strategy, Sweep, _sweep_values, apply_strategy


class IncompatiblePlanError(ValueError):
    pass


@dataclass(frozen=True)
class FiniteFunction:
    """Values on ``N`` cells of mass ``1/N``; shape ``(N,)`` or ``(N, d)`` for ``d`` functions at once."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.dtype != object:
            values = values.astype(float)
            if not np.isfinite(values).all():
                raise ValueError("values must be finite")
        if values.ndim not in (1, 2):
            raise ValueError("values must be a vector or an (N, d) array")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values.astype(float)))) if len(self) else 0.0

    def value_range(self) -> float:
        if not len(self):
            return 0.0
        v = self.values.astype(float)
        return float(np.max(v.max(axis=0) - v.min(axis=0)))

    def compose(self, perm: "Permutation") -> "FiniteFunction":
        if len(perm) != len(self):
            raise ValueError("size mismatch")
        return FiniteFunction(self.values[np.asarray(perm.images, dtype=int)])

    def mean(self):
        return self.values.sum(axis=0) / len(self)


@dataclass(frozen=True)
class Permutation:
    images: tuple

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"not a permutation: {images}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> "Permutation":
        images = list(range(n))
        images[a], images[b] = b, a
        return cls(images)

    def __len__(self) -> int:
        return len(self.images)

    def __call__(self, x: int) -> int:
        return self.images[x]

    def __matmul__(self, other: "Permutation") -> "Permutation":
        """Composition ``self ∘ other`` (apply ``other`` first)."""
        return Permutation(self.images[x] for x in other.images)

    def is_identity(self) -> bool:
        return all(i == x for x, i in enumerate(self.images))

    def is_involution(self) -> bool:
        return all(self.images[i] == x for x, i in enumerate(self.images))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * len(self)
        out = []
        for start in range(len(self)):
            if seen[start]:
                continue
            cycle = []
            x = start
            while not seen[x]:
                seen[x] = True
                cycle.append(x)
                x = self.images[x]
            out.append(tuple(cycle))
        return out

    def transpositions(self) -> list[tuple[int, int]]:
        """The 2-cycles of an involution."""
        if not self.is_involution():
            raise ValueError("not an involution")
        return [(x, i) for x, i in enumerate(self.images) if x < i]


def involution_decompose(perm: Permutation) -> tuple[Permutation, Permutation]:
    """Involutions ``(inv1, inv2)`` with ``perm == inv1 @ inv2``.

    On a cycle ``c_0 -> c_1 -> ... -> c_{L-1}`` take ``inv2: c_t -> c_{-t}``
    and ``inv1: c_t -> c_{1-t}`` (indices mod ``L``); both are reflections.
    """
    inv1 = list(range(len(perm)))
    inv2 = list(range(len(perm)))
    for cycle in perm.cycles():
        length = len(cycle)
        for t, x in enumerate(cycle):
            inv2[x] = cycle[(-t) % length]
            inv1[x] = cycle[(1 - t) % length]
    return Permutation(inv1), Permutation(inv2)


# --------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class AveragingPlan:
    """Partition averages on the ``n_cells * m`` sub-cells, as a tank strategy.

    Sub-cell ``c * m + t`` is the ``t``-th piece of cell ``c``.
    """

    n_cells: int
    m: int
    strategy: Strategy

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("subdivision factor must be positive")
        if self.strategy.n_tanks != self.n_cells * self.m:
            raise ValueError("strategy size does not match n_cells * m")

    @classmethod
    def empty(cls, n_cells: int, m: int = 1) -> "AveragingPlan":
        return cls(n_cells, m, Strategy(n_cells * m))

    def __len__(self) -> int:
        return len(self.strategy)

    def partitions(self) -> Iterator[list[list[int]]]:
        """Each averaging step as its list of nontrivial blocks."""
        for step in self.strategy:
            if isinstance(step, Pair):
                yield [[step.a, step.b]]
            else:
                yield [list(b) for b in step.blocks]

    def to_json(self) -> str:
        return json.dumps(
            {"n_cells": self.n_cells, "m": self.m, "partitions": list(self.partitions())},
            separators=(",", ":"),
        )

    def with_cells(self, n_cells: int) -> "AveragingPlan":
        if n_cells < self.n_cells:
            raise ValueError("cannot shrink a plan")
        return AveragingPlan(n_cells, self.m, Strategy(n_cells * self.m, self.strategy.steps))


def approximate_swap_plan(cell_a: int, cell_b: int, m: int, n_cells: int | None = None) -> AveragingPlan:
    """Plan taking a function constant on cells ``a`` and ``b`` close to its swap.

    The window strategy with width ``floor(sqrt(m + 2))`` runs with the
    sub-cells of ``a`` as red tanks and those of ``b`` as blue ones.  By
    linearity, values ``c_a, c_b`` end up within ``2 / sqrt(m) * |c_a - c_b|``
    of ``c_b, c_a``.
    """
    if n_cells is None:
        n_cells = max(cell_a, cell_b) + 1
    if cell_a == cell_b or not (0 <= cell_a < n_cells and 0 <= cell_b < n_cells):
        raise ValueError(f"invalid cells ({cell_a}, {cell_b}) for {n_cells} cells")
    if m < 1:
        raise ValueError("subdivision factor must be positive")
    k = default_window_width(m)
    a0, b0 = cell_a * m, cell_b * m
    # moving_window_strategy(m, k) with red t -> a0 + t and blue t -> b0 + t
    steps: list = [Sweep(a0 + i, range(b0 + i, b0 + i + k)) for i in range(m - k + 1)]
    steps += [Average((tuple(range(a0, a0 + m)),)), Average((tuple(range(b0, b0 + m)),))]
    return AveragingPlan(n_cells, m, Strategy(n_cells * m, steps))


def compose_plans(first: AveragingPlan, second: AveragingPlan) -> AveragingPlan:
    """Run ``first`` then ``second``.

    Conditional expectations are sup-norm contractions, so the error of the
    composite is at most the sum of the component errors.
    """
    if len(first) == 0:
        return second.with_cells(max(first.n_cells, second.n_cells))
    if len(second) == 0:
        return first.with_cells(max(first.n_cells, second.n_cells))
    if first.m != second.m:
        raise IncompatiblePlanError(f"subdivision factors differ: {first.m} vs {second.m}")
    n_cells = max(first.n_cells, second.n_cells)
    return AveragingPlan(n_cells, first.m, Strategy(n_cells * first.m, first.strategy.steps + second.strategy.steps))


def involution_plan(inv: Permutation, m: int) -> AveragingPlan:
    """Swap plans for all 2-cycles of ``inv``; fixed points get no steps."""
    plan = AveragingPlan.empty(len(inv), m)
    for a, b in inv.transpositions():
        plan = compose_plans(plan, approximate_swap_plan(a, b, m, len(inv)))
    return plan


def subdivision_for(value_range: float, eps: float, layers: int = 2) -> int:
    """Smallest ``m`` with ``2 / sqrt(m) * value_range <= eps / layers``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if value_range <= 0:
        return 1
    budget = eps / layers
    m = max(1, math.ceil((2 * value_range / budget) ** 2))
    while 2 / math.sqrt(m) * value_range > budget:
        m += 1
    while m > 1 and 2 / math.sqrt(m - 1) * value_range <= budget:
        m -= 1
    return m


def run_plan(plan: AveragingPlan, f: FiniteFunction) -> FiniteFunction:
    """Apply ``plan`` to ``f`` and average each cell's sub-cells back into one value."""
    if len(f) != plan.n_cells:
        raise ValueError(f"plan is for {plan.n_cells} cells, function has {len(f)}")
    values = f.values
    fine = np.repeat(values, plan.m, axis=0)
    if values.dtype == object:
        out = apply_strategy([Fraction(v) for v in fine], plan.strategy)
        cells = [sum(out[c * plan.m:(c + 1) * plan.m], Fraction(0)) / plan.m for c in range(plan.n_cells)]
        arr = np.empty(plan.n_cells, dtype=object)
        arr[:] = cells
        return FiniteFunction(arr)
    out = apply_strategy(fine, plan.strategy)
    shape = (plan.n_cells, plan.m) + values.shape[1:]
    return FiniteFunction(out.reshape(shape).mean(axis=1))


def approximate_permutation(f: FiniteFunction, perm: Permutation, eps: float) -> tuple[AveragingPlan, FiniteFunction]:
    """Plan and result with ``sup |result - f ∘ perm| < eps``.

    Each of the two involution layers gets half the budget: ``m`` is the
    smallest subdivision with ``2 / sqrt(m) * range(f) <= eps / 2``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if len(perm) != len(f):
        raise ValueError("size mismatch")
    if perm.is_identity():
        return AveragingPlan.empty(len(f)), FiniteFunction(f.values.copy())
    inv1, inv2 = involution_decompose(perm)
    m = subdivision_for(f.value_range(), eps)
    plan = compose_plans(involution_plan(inv1, m), involution_plan(inv2, m))
    return plan, run_plan(plan, f)


def sup_error(result: FiniteFunction, target: FiniteFunction) -> float:
    return float(np.max(np.abs(result.values.astype(float) - target.values.astype(float)))) if len(target) else 0.0


# --------------------------------------------------------------------------
# per-step checks


@dataclass(frozen=True)
class StepCheck:
    steps: int
    max_expansion: float  # largest increase of the local sup-norm difference
    max_mean_drift: float  # largest change of a step's block sum, relative to the block's l1 mass

    def ok(self, tol: float = 1e-12) -> bool:
        return self.max_expansion <= tol and self.max_mean_drift <= tol


def check_plan_steps(plan: AveragingPlan, g: np.ndarray, h: np.ndarray) -> StepCheck:
    """Run ``g`` and ``h`` through every averaging step of ``plan`` and check each step.

    For each step, over the entries it touches: ``max |Eg - Eh|`` must not
    exceed ``max |g - h|`` (contractivity) and the sum of each function must be
    unchanged (so is the overall mean).  Untouched entries do not change, so
    the local check implies the global one.
    """
    gh = np.column_stack([np.repeat(np.asarray(g, float), plan.m), np.repeat(np.asarray(h, float), plan.m)])
    expansion = 0.0
    drift = 0.0
    steps = 0
    for step in plan.strategy.steps:
        if isinstance(step, Sweep):
            if not len(step.partners):
                continue
            partners = np.asarray(step.partners)
            y = _sweep_values(gh, step)
            before_pivot = np.vstack([gh[step.pivot][np.newaxis], y[:-1]])
            x = gh[partners]
            old = np.maximum(np.abs(before_pivot[:, 0] - before_pivot[:, 1]), np.abs(x[:, 0] - x[:, 1]))
            new = np.abs(y[:, 0] - y[:, 1])
            expansion = max(expansion, float(np.max(new - old)))
            mass = np.maximum(1.0, np.abs(before_pivot) + np.abs(x))
            drift = max(drift, float(np.max(np.abs(2 * y - before_pivot - x) / mass)))
            gh[partners] = y
            gh[step.pivot] = y[-1]
            steps += len(partners)
            continue
        blocks = [[step.a, step.b]] if isinstance(step, Pair) else [list(b) for b in step.blocks if b]
        for idx in blocks:
            old_vals = gh[idx]
            new_vals = np.broadcast_to(old_vals.mean(axis=0), old_vals.shape)
            old = np.max(np.abs(old_vals[:, 0] - old_vals[:, 1]))
            new = np.max(np.abs(new_vals[:, 0] - new_vals[:, 1]))
            expansion = max(expansion, float(new - old))
            mass = np.maximum(1.0, np.abs(old_vals).sum(axis=0))
            drift = max(drift, float(np.max(np.abs(new_vals.sum(axis=0) - old_vals.sum(axis=0)) / mass)))
            gh[idx] = new_vals
        steps += 1
    return StepCheck(steps, expansion, drift)
