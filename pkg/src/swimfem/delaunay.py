"""Constrained Delaunay triangulation of planar point sets.

scipy's Qhull wrapper provides the unconstrained triangulation; prescribed
segments are then recovered by edge flips (Sloan's algorithm) and the
result is re-legalized away from constrained edges, so interior edges
satisfy the Delaunay in-circle property. No points are inserted: the
caller controls the vertex set entirely, which keeps boundary vertices
intact across remeshing.
"""
from __future__ import annotations

from collections import deque

import numpy as np
from scipy.spatial import Delaunay


class TriangulationError(Exception):
    """Constraint recovery failed (degenerate or inconsistent input)."""


def _orient(pts, a, b, c) -> float:
    pa, pb, pc = pts[a], pts[b], pts[c]
    return (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])


def _crosses(pts, a, b, u, v) -> bool:
    """True if segments a-b and u-v properly intersect (strict)."""
    o1 = _orient(pts, a, b, u)
    o2 = _orient(pts, a, b, v)
    o3 = _orient(pts, u, v, a)
    o4 = _orient(pts, u, v, b)
    return (o1 * o2 < 0.0) and (o3 * o4 < 0.0)


class _EditableTriangulation:
    """Triangle soup with edge adjacency supporting diagonal flips."""

    def __init__(self, pts: np.ndarray, triangles: np.ndarray):
        self.pts = pts
        self.tris: dict[int, tuple[int, int, int]] = {}
        self.edge2: dict[tuple[int, int], list[int]] = {}
        self.vert2: dict[int, set[int]] = {}
        self._next = 0
        for tri in triangles:
            self.add(tuple(int(v) for v in tri))

    @staticmethod
    def _ekey(u: int, v: int) -> tuple[int, int]:
        return (u, v) if u < v else (v, u)

    def add(self, tri: tuple[int, int, int]) -> int:
        tid = self._next
        self._next += 1
        self.tris[tid] = tri
        a, b, c = tri
        for u, v in ((a, b), (b, c), (c, a)):
            self.edge2.setdefault(self._ekey(u, v), []).append(tid)
            self.vert2.setdefault(u, set()).add(tid)
        return tid

    def remove(self, tid: int):
        a, b, c = self.tris.pop(tid)
        for u, v in ((a, b), (b, c), (c, a)):
            key = self._ekey(u, v)
            lst = self.edge2[key]
            lst.remove(tid)
            if not lst:
                del self.edge2[key]
        for u in (a, b, c):
            self.vert2[u].discard(tid)

    def has_edge(self, u: int, v: int) -> bool:
        return self._ekey(u, v) in self.edge2

    def third(self, tid: int, u: int, v: int) -> int:
        for w in self.tris[tid]:
            if w != u and w != v:
                return w
        raise TriangulationError("edge not part of triangle")

    def flip(self, u: int, v: int) -> tuple[int, int]:
        """Replace diagonal u-v of its two adjacent triangles with p-q."""
        tids = self.edge2[self._ekey(u, v)]
        if len(tids) != 2:
            raise TriangulationError(f"cannot flip boundary edge ({u}, {v})")
        t1, t2 = tids
        p = self.third(t1, u, v)
        q = self.third(t2, u, v)
        self.remove(t1)
        self.remove(t2)
        # orient new triangles CCW explicitly
        for tri in ((p, q, u), (q, p, v)):
            if _orient(self.pts, *tri) <= 0.0:
                tri = (tri[1], tri[0], tri[2])
            self.add(tri)
        return p, q

    def quad_strictly_convex(self, u: int, v: int) -> bool:
        tids = self.edge2[self._ekey(u, v)]
        if len(tids) != 2:
            return False
        t1, t2 = tids
        p = self.third(t1, u, v)
        q = self.third(t2, u, v)
        quad = (u, p, v, q)
        signs = []
        for i in range(4):
            a, b, c = quad[i], quad[(i + 1) % 4], quad[(i + 2) % 4]
            signs.append(_orient(self.pts, a, b, c))
        return all(s > 0.0 for s in signs) or all(s < 0.0 for s in signs)

    def triangle_array(self) -> np.ndarray:
        out = np.asarray([self.tris[t] for t in sorted(self.tris)], dtype=np.int64)
        return out


def _recover_segment(T: _EditableTriangulation, a: int, b: int) -> list[tuple[int, int]]:
    """Flip diagonals until edge a-b exists; returns edges created."""
    pts = T.pts
    # find the first crossing edge by scanning triangles incident to a
    first = None
    for tid in sorted(T.vert2.get(a, ())):
        tri = T.tris[tid]
        others = [w for w in tri if w != a]
        u, v = others
        if _crosses(pts, a, b, u, v):
            first = (u, v)
            break
    if first is None:
        raise TriangulationError(
            f"segment ({a}, {b}) cannot be recovered: no crossing found "
            f"(a vertex may lie exactly on the segment)")

    crossing: deque[tuple[int, int]] = deque([first])
    # walk from the first crossing collecting all edges that intersect a-b
    seen = {T._ekey(*first)}
    walk_edge = first
    while True:
        tids = T.edge2[T._ekey(*walk_edge)]
        if len(tids) != 2:
            raise TriangulationError(
                f"segment ({a}, {b}) crosses the triangulation boundary")
        # the triangle on the far side of walk_edge relative to a
        nxt = None
        for tid in tids:
            tri = T.tris[tid]
            w = T.third(tid, *walk_edge)
            if w == a:
                continue
            if b in tri:
                nxt = None
                break
            for u, v in ((walk_edge[0], w), (walk_edge[1], w)):
                if T._ekey(u, v) not in seen and _crosses(pts, a, b, u, v):
                    nxt = (u, v)
                    break
        if nxt is None:
            break
        seen.add(T._ekey(*nxt))
        crossing.append(nxt)
        walk_edge = nxt

    created: list[tuple[int, int]] = []
    stall = 0
    limit = 10 * (len(crossing) + 2) ** 2 + 100
    while crossing:
        u, v = crossing.popleft()
        if not T.has_edge(u, v):
            continue
        if not T.quad_strictly_convex(u, v):
            crossing.append((u, v))
            stall += 1
            if stall > limit:
                raise TriangulationError(
                    f"segment ({a}, {b}) recovery stalled (degenerate geometry)")
            continue
        p, q = T.flip(u, v)
        if (p, q) != (a, b) and (q, p) != (a, b) and _crosses(pts, a, b, p, q):
            crossing.append((p, q))
        else:
            created.append((p, q))
    if not T.has_edge(a, b):
        raise TriangulationError(f"segment ({a}, {b}) still missing after recovery")
    return created


def _incircle(pts, a, b, c, d) -> float:
    """Positive if d is inside the circumcircle of CCW triangle (a, b, c)."""
    ax, ay = pts[a] - pts[d]
    bx, by = pts[b] - pts[d]
    cx, cy = pts[c] - pts[d]
    return (
        (ax * ax + ay * ay) * (bx * cy - by * cx)
        - (bx * bx + by * by) * (ax * cy - ay * cx)
        + (cx * cx + cy * cy) * (ax * by - ay * bx)
    )


def _legalize(T: _EditableTriangulation, queue: deque, constrained: set):
    """Lawson flips restoring the Delaunay property on unconstrained edges."""
    pts = T.pts
    budget = 50 * (len(T.tris) + len(queue)) + 1000
    while queue:
        budget -= 1
        if budget < 0:
            raise TriangulationError("legalization did not terminate")
        u, v = queue.popleft()
        key = T._ekey(u, v)
        if key in constrained or key not in T.edge2:
            continue
        tids = T.edge2[key]
        if len(tids) != 2:
            continue
        t1, t2 = tids
        p = T.third(t1, u, v)
        q = T.third(t2, u, v)
        a, b, c = T.tris[t1]
        if _orient(pts, a, b, c) < 0.0:
            a, b = b, a
        tol = 1e-12 * max(abs(_incircle(pts, a, b, c, q)), 1.0)
        if _incircle(pts, a, b, c, q) <= tol:
            continue
        if not T.quad_strictly_convex(u, v):
            continue
        p, q = T.flip(u, v)
        for e in ((u, p), (p, v), (v, q), (q, u)):
            queue.append(e)


def constrained_delaunay(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Triangulate ``points`` so that every segment appears as an edge.

    Parameters
    ----------
    points : (n, 2) array
    segments : (m, 2) int array of point indices; segments must not cross
        each other and no third point may lie exactly on a segment.

    Returns
    -------
    (k, 3) int array of CCW triangles covering the convex hull.
    """
    pts = np.ascontiguousarray(points, dtype=float)
    if len(pts) < 3:
        raise TriangulationError("need at least 3 points")
    dt = Delaunay(pts)
    tris = dt.simplices
    # qhull may emit CW triangles; normalize
    areas = ((pts[tris[:, 1], 0] - pts[tris[:, 0], 0])
             * (pts[tris[:, 2], 1] - pts[tris[:, 0], 1])
             - (pts[tris[:, 1], 1] - pts[tris[:, 0], 1])
             * (pts[tris[:, 2], 0] - pts[tris[:, 0], 0]))
    flip = areas < 0.0
    tris[flip] = tris[flip][:, [1, 0, 2]]

    segs = [tuple(int(x) for x in s) for s in np.asarray(segments, dtype=np.int64)]
    constrained = {_EditableTriangulation._ekey(u, v) for u, v in segs}

    T = _EditableTriangulation(pts, tris)
    touched: deque[tuple[int, int]] = deque()
    for u, v in segs:
        if u == v:
            raise TriangulationError(f"degenerate segment ({u}, {v})")
        if T.has_edge(u, v):
            continue
        for e in _recover_segment(T, u, v):
            touched.append(e)
    if touched:
        _legalize(T, touched, constrained)
    return T.triangle_array()
