"""Convex hulls of point clouds lying in a hyperplane ``sum(y) = const``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

RANK_TOL = 1e-9


def sum_plane_basis(n: int) -> np.ndarray:
    """Orthonormal rows spanning ``{v : sum(v) = 0}`` in ``R^n``, shape ``(n-1, n)``."""
    _, _, vt = np.linalg.svd(np.ones((1, n)))
    return vt[1:]


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def monotone_chain(points: np.ndarray) -> list[int]:
    """Indices of the 2-D hull vertices in counter-clockwise order (collinear points dropped)."""
    order = sorted(range(len(points)), key=lambda i: (points[i, 0], points[i, 1]))
    if len(order) <= 2:
        return order
    pts = points.tolist()

    def half(seq):
        chain: list[int] = []
        for i in seq:
            while len(chain) >= 2 and _cross(pts[chain[-2]], pts[chain[-1]], pts[i]) <= 0:
                chain.pop()
            chain.append(i)
        return chain

    lower = half(order)
    upper = half(reversed(order))
    return lower[:-1] + upper[:-1]


def _octagon_filter(w: np.ndarray) -> np.ndarray:
    """Drop points strictly inside the polygon spanned by 8 directional extremes."""
    dirs = np.array([[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1], [0, -1], [1, -1]], float)
    idx = np.unique(np.argmax(w @ dirs.T, axis=0))
    if len(idx) < 3:
        return np.arange(len(w))
    poly = w[idx][monotone_chain(w[idx])]
    if len(poly) < 3:
        return np.arange(len(w))
    inside = np.ones(len(w), dtype=bool)
    for p, q in zip(poly, np.roll(poly, -1, axis=0)):
        inside &= (q[0] - p[0]) * (w[:, 1] - p[1]) - (q[1] - p[1]) * (w[:, 0] - p[0]) > 1e-12
    return np.flatnonzero(~inside)


@dataclass
class Hull:
    """Hull of a cloud, described in the cloud's own affine span.

    ``dim`` is the affine dimension of the cloud; ``degenerate`` is true when
    it is smaller than ``n - 1``.  Inside the span, a point ``z`` (coordinates
    ``basis @ (y - origin)``) lies in the hull when ``normals @ z + offsets <= 0``.
    """

    n: int
    dim: int
    vertices: np.ndarray
    facets: list
    origin: np.ndarray
    basis: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    label: str = field(default="")

    @property
    def degenerate(self) -> bool:
        return self.dim < self.n - 1

    def penetration(self, points: np.ndarray) -> np.ndarray:
        """Distance by which each point lies outside the hull (0 inside)."""
        pts = np.atleast_2d(np.asarray(points, float))
        rel = pts - self.origin
        z = rel @ self.basis.T
        off_span = np.linalg.norm(rel - z @ self.basis, axis=1)
        if len(self.normals):
            facet = np.max(z @ self.normals.T + self.offsets, axis=1)
        else:
            facet = np.zeros(len(pts))
        return np.maximum(np.maximum(facet, 0.0), off_span)

    def contains(self, point, tol: float = 1e-9) -> bool:
        return bool(self.penetration(point)[0] <= tol)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dim": self.dim,
            "degenerate": self.degenerate,
            "vertices": self.vertices.tolist(),
            "facets": [list(map(int, f)) for f in self.facets],
            "label": self.label,
        }


def hull_in_sum_plane(points, tol: float = RANK_TOL) -> Hull:
    """Convex hull of points with a common coordinate sum.

    Points are expressed in an orthonormal frame of the sum-plane and then of
    their own affine span (found by SVD); the hull is computed in that span:
    an interval in 1-D, Andrew's monotone chain in 2-D, qhull in 3-D.
    """
    pts = np.unique(np.atleast_2d(np.asarray(points, float)), axis=0)
    if pts.size == 0:
        raise ValueError("empty point cloud")
    n = pts.shape[1]
    if not 2 <= n <= 4:
        raise ValueError(f"hulls are supported for n in 2..4, got n={n}")
    sums = pts.sum(axis=1)
    if np.ptp(sums) > 1e-9 * max(1.0, np.abs(sums).max()):
        raise ValueError("points do not share a coordinate sum")

    plane = sum_plane_basis(n)
    origin = pts.mean(axis=0)
    z = (pts - origin) @ plane.T
    if len(pts) > 1:
        _, s, vt = np.linalg.svd(z, full_matrices=False)
        dim = int(np.sum(s > tol * max(1.0, s[0])))
    else:
        dim, vt = 0, np.zeros((0, n - 1))
    basis = vt[:dim] @ plane if dim else np.zeros((0, n))
    w = (pts - origin) @ basis.T

    if dim == 0:
        vidx, facets = [0], []
        normals, offsets = np.zeros((0, 0)), np.zeros(0)
    elif dim == 1:
        lo, hi = int(np.argmin(w[:, 0])), int(np.argmax(w[:, 0]))
        vidx, facets = [lo, hi], [(0,), (1,)]
        normals = np.array([[-1.0], [1.0]])
        offsets = np.array([w[lo, 0], -w[hi, 0]])
    elif dim == 2:
        cand = _octagon_filter(w)
        vidx = [int(cand[i]) for i in monotone_chain(w[cand])]
        count = len(vidx)
        facets = [(i, (i + 1) % count) for i in range(count)]
        normals, offsets = [], []
        for i, j in facets:
            p, q = w[vidx[i]], w[vidx[j]]
            edge = q - p
            normal = np.array([edge[1], -edge[0]]) / np.linalg.norm(edge)
            normals.append(normal)
            offsets.append(-normal @ p)
        normals, offsets = np.array(normals), np.array(offsets)
    else:
        qh = ConvexHull(w)
        vidx = [int(v) for v in qh.vertices]
        pos = {v: i for i, v in enumerate(vidx)}
        facets = [tuple(pos[int(v)] for v in simplex) for simplex in qh.simplices]
        normals, offsets = qh.equations[:, :-1], qh.equations[:, -1]

    return Hull(n, dim, pts[vidx], facets, origin, basis, np.asarray(normals), np.asarray(offsets))
