"""Majorization, Robin Hood operations, and reachable-set exploration.

Sampled clouds and hulls are empirical evidence about the reachable sets;
nothing here proves that those sets are polytopes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .hull import Hull, hull_in_sum_plane
from .tank_core import is_doubly_stochastic

EVIDENCE_LABEL = "empirical evidence for the polytope conjecture on Robin Hood reachable sets; not a proof"


class InvalidOpError(ValueError):
    pass


def majorizes(x: Sequence, y: Sequence, tol: float = 1e-12) -> bool:
    """Whether ``x`` majorizes ``y``, by comparing sorted partial sums.

    Equal totals and ``sum of the k largest y <= sum of the k largest x`` for
    every ``k``.  Exact (``tol`` ignored) when all entries are ``Fraction``.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    exact = all(isinstance(v, (Fraction, int)) for v in (*x, *y))
    if exact:
        tol = 0
    xs = sorted(x, reverse=True)
    ys = sorted(y, reverse=True)
    px = py = 0
    for a, b in zip(xs, ys):
        px += a
        py += b
        if py > px + tol:
            return False
    return abs(px - py) <= tol


def majorized_mask(x: Sequence[float], points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Row-wise :func:`majorizes` ``(x, row)`` for a float array of points."""
    points = np.atleast_2d(np.asarray(points, float))
    xs = np.cumsum(np.sort(np.asarray(x, float))[::-1])
    ps = np.cumsum(-np.sort(-points, axis=1), axis=1)
    return np.all(ps <= xs + tol, axis=1) & (np.abs(ps[:, -1] - xs[-1]) <= tol)


@dataclass(frozen=True)
class RobinHoodOp:
    """Move a ``lam`` share of the gap from richer ``j`` to poorer ``i``."""

    i: int
    j: int
    lam: float | Fraction

    def __post_init__(self):
        if self.i == self.j:
            raise InvalidOpError("i and j must differ")
        if not 0 <= self.lam <= Fraction(1, 2):
            raise InvalidOpError(f"lambda must lie in [0, 1/2], got {self.lam}")


def apply_robin_hood(x: Sequence, op: RobinHoodOp):
    """``y_i = (1-lam) x_i + lam x_j`` and ``y_j = lam x_i + (1-lam) x_j``.

    Requires ``x_i <= x_j``; then ``x_i <= y_i <= y_j <= x_j``.
    """
    if not (0 <= op.i < len(x) and 0 <= op.j < len(x)):
        raise InvalidOpError(f"indices out of range for length {len(x)}")
    xi, xj = x[op.i], x[op.j]
    if xi > xj:
        raise InvalidOpError(f"x[{op.i}]={xi} exceeds x[{op.j}]={xj}")
    lam = op.lam
    y = np.array(x, dtype=float) if isinstance(x, np.ndarray) else list(x)
    y[op.i] = (1 - lam) * xi + lam * xj
    y[op.j] = lam * xi + (1 - lam) * xj
    return y if isinstance(y, np.ndarray) else tuple(y)


def robin_hood_matrix(op: RobinHoodOp, n: int) -> np.ndarray:
    """Identity except the ``{i, j}`` block ``[[1-lam, lam], [lam, 1-lam]]``.

    Object array of ``Fraction`` when ``lam`` is a ``Fraction``.
    """
    if not (0 <= op.i < n and 0 <= op.j < n):
        raise InvalidOpError(f"indices ({op.i}, {op.j}) out of range for n={n}")
    if isinstance(op.lam, Fraction):
        m = np.empty((n, n), dtype=object)
        m[...] = Fraction(0)
        for a in range(n):
            m[a, a] = Fraction(1)
    else:
        m = np.eye(n)
    lam = op.lam
    m[op.i, op.i] = m[op.j, op.j] = 1 - lam
    m[op.i, op.j] = m[op.j, op.i] = lam
    return m


def random_op(x: Sequence[float], rng: np.random.Generator) -> RobinHoodOp:
    """A uniformly random pair, oriented poorer-to-richer, with ``lam ~ U[0, 1/2]``."""
    n = len(x)
    i, j = rng.choice(n, size=2, replace=False)
    if x[i] > x[j]:
        i, j = j, i
    return RobinHoodOp(int(i), int(j), float(rng.uniform(0.0, 0.5)))


def monoid_sample(n: int, length: int, samples: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Products of ``length`` random Robin Hood matrices, each checked doubly stochastic."""
    if length < 0:
        raise ValueError("length must be nonnegative")
    out = []
    for _ in range(samples):
        prod = np.eye(n)
        for _ in range(length):
            i, j = rng.choice(n, size=2, replace=False)
            prod = robin_hood_matrix(RobinHoodOp(int(i), int(j), float(rng.uniform(0.0, 0.5))), n) @ prod
        if not is_doubly_stochastic(prod, tol=1e-12):
            raise AssertionError("product of Robin Hood matrices is not doubly stochastic")
        out.append(prod)
    return out


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    total: float
    label: str = EVIDENCE_LABEL

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, float))
        if len(points) and np.max(np.abs(points.sum(axis=1) - self.total)) > 1e-9 * max(1.0, abs(self.total)):
            raise ValueError("points do not share the coordinate sum")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)


LAM_MODES = ("uniform", "mixed")


def _draw_lams(rows: int, rng: np.random.Generator, lam_mode: str) -> np.ndarray:
    # "mixed": lam = 1/2 (an equilibration) with probability 1/2, else U[0, 1/2]
    lam = rng.uniform(0.0, 0.5, rows)
    if lam_mode == "mixed":
        lam = np.where(rng.random(rows) < 0.5, 0.5, lam)
    elif lam_mode != "uniform":
        raise ValueError(f"unknown lam_mode {lam_mode!r}")
    return lam


def _random_ops_batch(state: np.ndarray, rng: np.random.Generator, lam_mode: str = "uniform") -> np.ndarray:
    rows, n = state.shape
    p = rng.integers(0, n, rows)
    q = (p + rng.integers(1, n, rows)) % n
    r = np.arange(rows)
    swap = state[r, p] > state[r, q]
    i = np.where(swap, q, p)
    j = np.where(swap, p, q)
    lam = _draw_lams(rows, rng, lam_mode)
    xi, xj = state[r, i], state[r, j]
    out = state.copy()
    out[r, i] = (1 - lam) * xi + lam * xj
    out[r, j] = lam * xi + (1 - lam) * xj
    return out


def sample_reachable(
    x: Sequence[float],
    depth: int,
    samples: int,
    rng: np.random.Generator,
    lam_mode: str = "uniform",
) -> PointCloud:
    """``x`` plus every intermediate point of ``samples`` random trajectories of length ``depth``.

    Each step picks a uniformly random pair, orients it poorer-to-richer and
    draws ``lam`` per ``lam_mode``: ``"uniform"`` on ``[0, 1/2]``, or
    ``"mixed"``, which puts half the mass on ``lam = 1/2``.  Extreme points of
    the reachable sets tend to come from full equilibrations, so ``"mixed"``
    clouds fill out their hull with far fewer samples.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    x = np.asarray(x, float)
    clouds = [x[np.newaxis]]
    if len(x) >= 2 and samples > 0:
        state = np.tile(x, (samples, 1))
        for _ in range(depth):
            state = _random_ops_batch(state, rng, lam_mode)
            clouds.append(state)
    return PointCloud(np.vstack(clouds), float(x.sum()))


@dataclass
class ClosureReport:
    trials: int
    violations: int
    max_penetration: float
    tol: float
    vertices_majorized: bool = True
    label: str = EVIDENCE_LABEL

    @property
    def violation_rate(self) -> float:
        return self.violations / self.trials if self.trials else 0.0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "violations": self.violations,
            "violation_rate": self.violation_rate,
            "max_penetration": self.max_penetration,
            "tol": self.tol,
            "vertices_majorized": self.vertices_majorized,
            "label": self.label,
        }


def hull_closure_test(
    x: Sequence[float],
    hull: Hull,
    trials: int,
    rng: np.random.Generator,
    tol: float = 1e-9,
) -> ClosureReport:
    """Apply random Robin Hood ops to random convex combinations of hull vertices.

    Each trial point mixes ``dim + 1`` randomly chosen vertices with
    Dirichlet(1) weights.

    Counts images landing outside the hull by more than ``tol``.  A positive
    count means the sampled hull is not yet closed under the operations
    (sampling not converged), not that the reachable set is not convex.  Also
    records whether every hull vertex is majorized by ``x``.
    """
    verts = hull.vertices
    # convex combination of dim + 1 vertices drawn with replacement, Dirichlet(1) weights
    picks = rng.integers(0, len(verts), size=(trials, hull.dim + 1))
    weights = rng.dirichlet(np.ones(hull.dim + 1), size=trials)
    pts = np.einsum("tk,tkn->tn", weights, verts[picks])
    images = _random_ops_batch(pts, rng) if hull.n >= 2 else pts
    depth = hull.penetration(images) if trials else np.zeros(0)
    violations = int(np.sum(depth > tol))
    majorized = bool(majorized_mask(x, verts, tol=tol).all())
    return ClosureReport(trials, violations, float(depth.max()) if trials else 0.0, tol, majorized)


def reachable_hull(
    x: Sequence[float], depth: int, samples: int, rng: np.random.Generator, lam_mode: str = "uniform"
) -> Hull:
    hull = hull_in_sum_plane(sample_reachable(x, depth, samples, rng, lam_mode).points)
    hull.label = EVIDENCE_LABEL
    return hull
