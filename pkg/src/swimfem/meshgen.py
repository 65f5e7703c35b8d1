"""Mesh generation: channel domains with holes, structured grids, remeshing.

Interior vertices come from a hexagonal background lattice plus graded
rings around hole boundaries; the constrained Delaunay layer then
triangulates the point set with the boundary polylines as hard segments,
and triangles outside the fluid region are culled. Boundary vertices are
never moved or subdivided by remeshing, so degrees of freedom attached to
body surfaces survive mesh regeneration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delaunay import constrained_delaunay
from .mesh import (DIRICHLET_WALL, SWIMMER, BoundaryTag, Mesh, MeshError)


class GenerationError(MeshError):
    """Invalid generator input (overlapping holes, bad sizes...)."""


class SelfIntersectingBoundaryError(MeshError):
    """Boundary loops cross themselves or each other."""


# ---------------------------------------------------------------------------
# hole shapes

@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float
    body: int | None = None
    h: float | None = None
    role: str = "swimmer"  # "swimmer" or "obstacle"

    def boundary_points(self, h: float) -> np.ndarray:
        n = max(16, int(math.ceil(2.0 * math.pi * self.radius / h)))
        n += (-n) % 4
        th = 2.0 * math.pi * np.arange(n) / n
        return np.column_stack([self.center[0] + self.radius * np.cos(th),
                                self.center[1] + self.radius * np.sin(th)])

    def contains(self, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
        d = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return d < self.radius + margin


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    rx: float
    ry: float
    angle: float = 0.0
    body: int | None = None
    h: float | None = None
    role: str = "swimmer"

    def _axes(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([c, s]), np.array([-s, c])

    def boundary_points(self, h: float) -> np.ndarray:
        # Ramanujan perimeter estimate
        a, b = self.rx, self.ry
        per = math.pi * (3 * (a + b) - math.sqrt((3 * a + b) * (a + 3 * b)))
        n = max(16, int(math.ceil(per / h)))
        n += (-n) % 4
        th = 2.0 * math.pi * np.arange(n) / n
        u, v = self._axes()
        pts = (np.asarray(self.center)
               + np.outer(a * np.cos(th), u) + np.outer(b * np.sin(th), v))
        return pts

    def contains(self, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
        u, v = self._axes()
        rel = pts - np.asarray(self.center)
        xi = rel @ u / (self.rx + margin)
        eta = rel @ v / (self.ry + margin)
        return xi**2 + eta**2 < 1.0


@dataclass(frozen=True)
class Capsule:
    """Stadium shape: segment p0-p1 thickened by half_width."""

    p0: tuple[float, float]
    p1: tuple[float, float]
    half_width: float
    body: int | None = None
    h: float | None = None
    role: str = "swimmer"

    def boundary_points(self, h: float) -> np.ndarray:
        p0 = np.asarray(self.p0, dtype=float)
        p1 = np.asarray(self.p1, dtype=float)
        w = self.half_width
        axis = p1 - p0
        length = float(np.linalg.norm(axis))
        if length <= 0:
            raise GenerationError("capsule endpoints coincide")
        u = axis / length
        nrm = np.array([-u[1], u[0]])
        h = min(h, 1.6 * w)  # resolve the cap arcs and opposite sides
        ns = max(2, int(math.ceil(length / h)))
        na = max(4, int(math.ceil(math.pi * w / h)))
        pts = []
        s = np.linspace(0.0, 1.0, ns + 1)[:-1]
        pts.append(p0 + np.outer(s, axis) - nrm * w)          # lower side
        alpha = np.linspace(-0.5 * math.pi, 0.5 * math.pi, na + 1)[:-1]
        pts.append(p1 + w * (np.outer(np.cos(alpha), u) + np.outer(np.sin(alpha), nrm)))
        pts.append(p1 - np.outer(s, axis) + nrm * w)          # upper side
        alpha = np.linspace(0.5 * math.pi, 1.5 * math.pi, na + 1)[:-1]
        pts.append(p0 + w * (np.outer(np.cos(alpha), u) + np.outer(np.sin(alpha), nrm)))
        return np.vstack(pts)

    def contains(self, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
        p0 = np.asarray(self.p0, dtype=float)
        p1 = np.asarray(self.p1, dtype=float)
        d = p1 - p0
        t = np.clip(((pts - p0) @ d) / (d @ d), 0.0, 1.0)
        proj = p0 + t[:, None] * d
        return np.linalg.norm(pts - proj, axis=1) < self.half_width + margin


# ---------------------------------------------------------------------------
# planar predicates

def points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule point-in-polygon test, vectorized over pts."""
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1 = np.roll(poly[:, 0], -1)[None, :]
    y1 = np.roll(poly[:, 1], -1)[None, :]
    cond = ((y0 <= y) & (y1 > y)) | ((y1 <= y) & (y0 > y))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (y - y0) / (y1 - y0)
        xi = x0 + t * (x1 - x0)
    crossings = (cond & (xi > x)).sum(axis=1)
    return crossings % 2 == 1


def dist_to_segments(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(n, m) distances from each point to each segment a[j]-b[j]."""
    d = b - a
    denom = np.maximum((d**2).sum(axis=1), 1e-300)
    out = np.empty((len(pts), len(a)))
    chunk = max(1, int(4e6 / max(len(a), 1)))
    for lo in range(0, len(pts), chunk):
        p = pts[lo:lo + chunk]
        t = ((p[:, None, :] - a[None]) * d[None]).sum(axis=2) / denom[None]
        t = np.clip(t, 0.0, 1.0)
        proj = a[None] + t[:, :, None] * d[None]
        out[lo:lo + chunk] = np.linalg.norm(p[:, None, :] - proj, axis=2)
    return out


def _segments_cross(a0, a1, b0, b1) -> np.ndarray:
    """Vectorized proper-intersection test for segment arrays."""
    def orient(p, q, r):
        return ((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))
    o1 = orient(a0, a1, b0)
    o2 = orient(a0, a1, b1)
    o3 = orient(b0, b1, a0)
    o4 = orient(b0, b1, a1)
    return (o1 * o2 < 0) & (o3 * o4 < 0)


def loops_self_intersect(loops: list[np.ndarray]) -> bool:
    """True if any boundary segment properly crosses another."""
    seg_a, seg_b = [], []
    for pts in loops:
        seg_a.append(pts)
        seg_b.append(np.roll(pts, -1, axis=0))
    a = np.vstack(seg_a)
    b = np.vstack(seg_b)
    n = len(a)
    ii, jj = np.triu_indices(n, k=1)
    hits = _segments_cross(a[ii], b[ii], a[jj], b[jj])
    return bool(hits.any())


# ---------------------------------------------------------------------------
# interior point seeding

def hex_lattice(xmin, xmax, ymin, ymax, h) -> np.ndarray:
    dy = h * math.sqrt(3.0) / 2.0
    ny = max(0, int(math.floor((ymax - ymin) / dy)) - 1)
    rows = []
    for j in range(1, ny + 1):
        y = ymin + j * dy
        off = 0.5 * h if j % 2 else 0.0
        nx = int(math.floor((xmax - xmin - off) / h))
        if nx < 1:
            continue
        x = xmin + off + h * np.arange(1, nx + 1)
        x = x[x < xmax - 0.25 * h]
        rows.append(np.column_stack([x, np.full(len(x), y)]))
    if not rows:
        return np.empty((0, 2))
    return np.vstack(rows)


def _offset_rings(boundary: np.ndarray, h_local: float, h_target: float) -> np.ndarray:
    """Graded point rings marching outward from a closed convex-ish loop.

    Rings are plain normal offsets of the previous ring so points stay
    radially aligned with the boundary sampling; when the ring spacing
    lags behind the growing offset gap, every other point is dropped,
    which preserves alignment.
    """
    cur = np.asarray(boundary, dtype=float).copy()
    rings = []
    gap = h_local
    while True:
        gap *= 1.3
        if gap >= h_target:
            break
        tang = np.roll(cur, -1, axis=0) - np.roll(cur, 1, axis=0)
        tang /= np.maximum(np.linalg.norm(tang, axis=1), 1e-300)[:, None]
        nrm = np.column_stack([tang[:, 1], -tang[:, 0]])  # outward for CCW loop
        cur = cur + nrm * gap
        seglen = np.linalg.norm(np.roll(cur, -1, axis=0) - cur, axis=1)
        if seglen.mean() < 0.72 * gap and len(cur) >= 16:
            cur = cur[::2]
        rings.append(cur.copy())
    if not rings:
        return np.empty((0, 2))
    return np.vstack(rings)


# ---------------------------------------------------------------------------
# polygon-bounded domains

def _smooth_interior(points: np.ndarray, tris: np.ndarray, n_fixed: int,
                     blend: float = 0.7) -> np.ndarray:
    """One Laplacian smoothing pass over non-boundary vertices."""
    e = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    acc = np.zeros_like(points)
    deg = np.zeros(len(points))
    np.add.at(acc, e[:, 0], points[e[:, 1]])
    np.add.at(acc, e[:, 1], points[e[:, 0]])
    np.add.at(deg, e[:, 0], 1.0)
    np.add.at(deg, e[:, 1], 1.0)
    out = points.copy()
    movable = deg > 0
    movable[:n_fixed] = False
    out[movable] = ((1.0 - blend) * points[movable]
                    + blend * acc[movable] / deg[movable, None])
    return out


def triangulate_domain(loops: list[np.ndarray], loop_tag_ids: list[np.ndarray],
                       tags: tuple, target_h: float,
                       interior_points: np.ndarray | None = None,
                       clearance: float = 0.6, smooth_iters: int = 2) -> Mesh:
    """Mesh the region inside ``loops[0]`` minus the other loops.

    Loop points become mesh vertices verbatim (loop k occupies a
    contiguous index range, in order). ``loop_tag_ids[k]`` assigns a tag
    to each edge of loop k.
    """
    if loops_self_intersect(loops):
        raise SelfIntersectingBoundaryError("boundary loops cross")

    pts_list = [np.asarray(lp, dtype=float) for lp in loops]
    offsets = np.cumsum([0] + [len(p) for p in pts_list])
    all_pts = np.vstack(pts_list)

    segments = []
    seg_tags = []
    for k, lp in enumerate(pts_list):
        n = len(lp)
        base = offsets[k]
        idx = np.arange(n)
        segments.append(np.column_stack([base + idx, base + (idx + 1) % n]))
        tag_ids = np.asarray(loop_tag_ids[k], dtype=np.int64)
        if tag_ids.ndim == 0:
            tag_ids = np.full(n, int(tag_ids))
        seg_tags.append(tag_ids)
    segments = np.vstack(segments)
    seg_tags = np.concatenate(seg_tags)

    # candidate interior vertices
    outer = pts_list[0]
    xmin, ymin = outer.min(axis=0)
    xmax, ymax = outer.max(axis=0)
    cand = hex_lattice(xmin, xmax, ymin, ymax, target_h)
    if interior_points is not None and len(interior_points):
        extra = np.asarray(interior_points, dtype=float)
        if len(cand):
            # graded points (e.g. rings around holes) win over the lattice
            from scipy.spatial import cKDTree
            d, _ = cKDTree(extra).query(cand)
            cand = cand[d >= 0.6 * target_h]
        cand = np.vstack([cand, extra]) if len(cand) else extra

    if len(cand):
        keep = points_in_polygon(cand, outer)
        for hole in pts_list[1:]:
            keep &= ~points_in_polygon(cand, hole)
        cand = cand[keep]
    if len(cand):
        seg_a = all_pts[segments[:, 0]]
        seg_b = all_pts[segments[:, 1]]
        seg_len = np.linalg.norm(seg_b - seg_a, axis=1)
        d = dist_to_segments(cand, seg_a, seg_b)
        thresh = clearance * np.maximum(seg_len, 0.4 * target_h)
        cand = cand[(d >= thresh[None, :]).all(axis=1)]

    points = np.vstack([all_pts, cand]) if len(cand) else all_pts
    tris = constrained_delaunay(points, segments)

    def cull(points, tris):
        cent = points[tris].mean(axis=1)
        keep = points_in_polygon(cent, outer)
        for hole in pts_list[1:]:
            keep &= ~points_in_polygon(cent, hole)
        return tris[keep]

    tris = cull(points, tris)
    if len(cand) and smooth_iters > 0:
        n_fixed = len(all_pts)
        for _ in range(smooth_iters):
            points = _smooth_interior(points, tris, n_fixed)
            tris = cull(points, constrained_delaunay(points, segments))

    used = np.zeros(len(points), dtype=bool)
    used[tris.ravel()] = True
    if not used[:len(all_pts)].all():
        raise GenerationError("a boundary vertex was dropped during triangulation")
    # compress unused interior candidates out of the vertex array
    remap = -np.ones(len(points), dtype=np.int64)
    remap[used] = np.arange(used.sum())
    points = points[used]
    tris = remap[tris]
    segments = remap[segments]

    return Mesh(points, tris, segments, seg_tags, tags)


# ---------------------------------------------------------------------------
# channel generator

def generate_channel(length: float, height: float, holes=(), target_h: float = 0.1,
                     side_kinds: dict | None = None) -> Mesh:
    """Rectangular channel [0, length] x [0, height] with optional holes.

    Hole boundaries are tagged ``swimmer0``, ``swimmer1``, ... (grouped by
    the shape's ``body`` attribute when given) or ``obstacleK`` for shapes
    with role "obstacle". Rectangle sides are tagged bottom/right/top/left
    with kinds taken from ``side_kinds`` (default: all dirichlet walls).
    """
    if target_h <= 0.0:
        raise GenerationError(f"target_h must be positive, got {target_h}")
    if length <= 0.0 or height <= 0.0:
        raise GenerationError("channel dimensions must be positive")
    side_kinds = side_kinds or {}
    if not holes:
        nx = max(1, int(math.ceil(length / target_h)))
        ny = max(1, int(math.ceil(height / target_h)))
        return structured_rectangle(length, height, nx, ny, side_kinds)

    # rectangle boundary, one loop, CCW, per-side tags
    nx = max(1, int(round(length / target_h)))
    ny = max(1, int(round(height / target_h)))
    xb = np.linspace(0.0, length, nx + 1)
    yb = np.linspace(0.0, height, ny + 1)
    rect = np.vstack([
        np.column_stack([xb[:-1], np.zeros(nx)]),
        np.column_stack([np.full(ny, length), yb[:-1]]),
        np.column_stack([xb[::-1][:-1], np.full(nx, height)]),
        np.column_stack([np.zeros(ny), yb[::-1][:-1]]),
    ])
    side_names = (["bottom"] * nx) + (["right"] * ny) + (["top"] * nx) + (["left"] * ny)

    tags = []
    tag_index: dict[str, int] = {}
    for name in ("bottom", "right", "top", "left"):
        kind = side_kinds.get(name, DIRICHLET_WALL)
        tag_index[name] = len(tags)
        tags.append(BoundaryTag(name, kind))
    rect_tag_ids = np.asarray([tag_index[n] for n in side_names], dtype=np.int64)

    loops = [rect]
    loop_tags = [rect_tag_ids]
    hole_polys = []
    rings_all = []
    n_swimmers = 0
    n_obstacles = 0
    for k, hole in enumerate(holes):
        h_loc = hole.h or target_h
        poly = hole.boundary_points(h_loc)
        hole_polys.append((hole, poly, h_loc))
        if hole.role == "obstacle":
            name = f"obstacle{n_obstacles}"
            tags.append(BoundaryTag(name, DIRICHLET_WALL))
            n_obstacles += 1
        else:
            body = hole.body if hole.body is not None else n_swimmers
            name = f"swimmer{body}_{k}"
            tags.append(BoundaryTag(name, SWIMMER, body=body))
            n_swimmers += 1
        loops.append(poly)
        loop_tags.append(np.full(len(poly), len(tags) - 1, dtype=np.int64))

    # validity: holes inside rectangle, pairwise disjoint, meshable gaps
    for hole, poly, h_loc in hole_polys:
        margin = 0.55 * h_loc
        if (poly[:, 0] < margin).any() or (poly[:, 0] > length - margin).any() \
                or (poly[:, 1] < margin).any() or (poly[:, 1] > height - margin).any():
            raise GenerationError(
                "hole touches or is too close to the channel boundary")
    for i in range(len(hole_polys)):
        for j in range(i + 1, len(hole_polys)):
            hi, pi, hli = hole_polys[i]
            hj, pj, hlj = hole_polys[j]
            gap = 0.55 * max(hli, hlj)
            if hi.contains(pj[:1], 0.0)[0] or hj.contains(pi[:1], 0.0)[0]:
                raise GenerationError(f"holes {i} and {j} overlap")
            if hi.contains(pj, gap).any() or hj.contains(pi, gap).any():
                raise GenerationError(f"holes {i} and {j} overlap or nearly touch")

    for hole, poly, h_loc in hole_polys:
        if h_loc < target_h:
            rings_all.append(_offset_rings(poly, h_loc, target_h))
    extra = np.vstack(rings_all) if rings_all else None
    if extra is not None and len(extra):
        # rings must stay inside the channel and outside other holes
        keep = ((extra[:, 0] > 0.45 * target_h) & (extra[:, 0] < length - 0.45 * target_h)
                & (extra[:, 1] > 0.45 * target_h) & (extra[:, 1] < height - 0.45 * target_h))
        for hole, poly, h_loc in hole_polys:
            keep &= ~hole.contains(extra, 0.5 * h_loc)
        extra = extra[keep]
        if len(extra) > 1:
            # drop ring points that collide with rings of other holes
            from scipy.spatial import cKDTree
            tree = cKDTree(extra)
            pairs = tree.query_pairs(0.4 * target_h, output_type="ndarray")
            drop = np.zeros(len(extra), dtype=bool)
            for a, b in pairs:
                if not drop[a] and not drop[b]:
                    drop[max(a, b)] = True
            extra = extra[~drop]

    return triangulate_domain(loops, loop_tags, tuple(tags), target_h, extra)


# ---------------------------------------------------------------------------
# structured meshes

def structured_rectangle(length: float, height: float, nx: int, ny: int,
                         side_kinds: dict | None = None,
                         origin=(0.0, 0.0)) -> Mesh:
    """Uniform right-triangle grid on a rectangle (no holes)."""
    side_kinds = side_kinds or {}
    x = origin[0] + np.linspace(0.0, length, nx + 1)
    y = origin[1] + np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    cells = np.asarray(cells, dtype=np.int64)

    tags = []
    tag_index = {}
    for name in ("bottom", "right", "top", "left"):
        kind = side_kinds.get(name, DIRICHLET_WALL)
        tag_index[name] = len(tags)
        tags.append(BoundaryTag(name, kind))

    edges = []
    tag_ids = []
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        tag_ids.append(tag_index["bottom"])
    for j in range(ny):
        edges.append((vid(nx, j), vid(nx, j + 1)))
        tag_ids.append(tag_index["right"])
    for i in range(nx, 0, -1):
        edges.append((vid(i, ny), vid(i - 1, ny)))
        tag_ids.append(tag_index["top"])
    for j in range(ny, 0, -1):
        edges.append((vid(0, j), vid(0, j - 1)))
        tag_ids.append(tag_index["left"])

    return Mesh(verts, cells, np.asarray(edges, dtype=np.int64),
                np.asarray(tag_ids, dtype=np.int64), tuple(tags))


def structured_annulus(r_in: float, r_out: float, n_theta: int, n_r: int,
                       center=(0.0, 0.0), body: int = 0) -> Mesh:
    """Polar grid annulus; inner circle tagged as a swimmer boundary.

    All triangles are non-obtuse for near-unit radius ratios, which makes
    the P1 Laplacian an M-matrix regardless of per-cell diffusion weights.
    """
    radii = np.linspace(r_in, r_out, n_r + 1)
    th = 2.0 * math.pi * np.arange(n_theta) / n_theta
    verts = []
    for r in radii:
        verts.append(np.column_stack([center[0] + r * np.cos(th),
                                      center[1] + r * np.sin(th)]))
    verts = np.vstack(verts)

    def vid(ring, k):
        return ring * n_theta + (k % n_theta)

    cells = []
    for ring in range(n_r):
        for k in range(n_theta):
            v00, v01 = vid(ring, k), vid(ring, k + 1)
            v10, v11 = vid(ring + 1, k), vid(ring + 1, k + 1)
            cells.append((v00, v11, v01))
            cells.append((v00, v10, v11))
    cells = np.asarray(cells, dtype=np.int64)

    tags = (BoundaryTag(f"swimmer{body}", SWIMMER, body=body),
            BoundaryTag("outer", DIRICHLET_WALL))
    edges = []
    tag_ids = []
    for k in range(n_theta):  # inner loop, CW as seen from fluid side
        edges.append((vid(0, k + 1), vid(0, k)))
        tag_ids.append(0)
    for k in range(n_theta):
        edges.append((vid(n_r, k), vid(n_r, k + 1)))
        tag_ids.append(1)
    return Mesh(verts, cells, np.asarray(edges, dtype=np.int64),
                np.asarray(tag_ids, dtype=np.int64), tags)


# ---------------------------------------------------------------------------
# remeshing

def remesh(mesh: Mesh) -> Mesh:
    """Re-triangulate the current domain keeping the boundary fixed.

    The interior is re-seeded at the median current edge length and
    re-triangulated with constrained Delaunay; boundary vertices, edges
    and tags carry over verbatim. If the rebuilt mesh would not improve
    the minimum cell quality, the input mesh is returned unchanged.
    """
    loops = mesh.boundary_loops()
    loop_pts = [mesh.vertices[lp] for lp in loops]
    if loops_self_intersect(loop_pts):
        raise SelfIntersectingBoundaryError("boundary self-intersects; cannot remesh")

    target = float(np.median(mesh.edge_lengths()))

    # identify the outer loop (largest enclosed area)
    def loop_area(pts):
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    areas = [loop_area(p) for p in loop_pts]
    outer_idx = int(np.argmax(areas))
    order = [outer_idx] + [k for k in range(len(loops)) if k != outer_idx]

    edge_tag = {}
    for (a, b), tid in zip(mesh.boundary_edges, mesh.boundary_tag_ids):
        edge_tag[(int(a), int(b))] = int(tid)

    loops_ordered = []
    tag_ids_ordered = []
    vid_lists = []
    for k in order:
        lp = loops[k]
        pts = mesh.vertices[lp]
        ids = []
        n = len(lp)
        for i in range(n):
            a, b = int(lp[i]), int(lp[(i + 1) % n])
            ids.append(edge_tag[(a, b)])
        loops_ordered.append(pts)
        tag_ids_ordered.append(np.asarray(ids, dtype=np.int64))
        vid_lists.append(lp)

    new = triangulate_domain(loops_ordered, tag_ids_ordered, mesh.tags, target)
    if new.quality().min_quality < mesh.quality().min_quality - 1e-12:
        return mesh
    return new


def match_boundary_vertices(old: Mesh, new: Mesh) -> dict[int, int]:
    """Map old boundary vertex ids to new ids by exact coordinate match."""
    lookup = {}
    for vid in new.boundary_vertex_ids():
        lookup[new.vertices[vid].tobytes()] = int(vid)
    out = {}
    for vid in old.boundary_vertex_ids():
        key = old.vertices[vid].tobytes()
        if key not in lookup:
            raise MeshError("boundary vertices do not match between meshes")
        out[int(vid)] = lookup[key]
    return out


# ---------------------------------------------------------------------------
# symmetry tooling

def mirror_x(mesh: Mesh, x0: float, seam_tags: tuple[str, ...]) -> Mesh:
    """Reflect a half-domain mesh about the vertical line x = x0.

    Edges carrying a seam tag are dropped (they become interior); the
    resulting triangulation is exactly mirror-symmetric, which is useful
    for tests that rely on discrete symmetry.
    """
    seam_ids = {mesh.tag_id(t) for t in seam_tags}
    nv = mesh.n_vertices
    on_seam = np.abs(mesh.vertices[:, 0] - x0) == 0.0

    mirror_id = np.full(nv, -1, dtype=np.int64)
    new_verts = [mesh.vertices]
    extra = []
    nxt = nv
    for v in range(nv):
        if on_seam[v]:
            mirror_id[v] = v
        else:
            mirror_id[v] = nxt
            nxt += 1
            p = mesh.vertices[v]
            extra.append((2.0 * x0 - p[0], p[1]))
    if extra:
        new_verts.append(np.asarray(extra))
    verts = np.vstack(new_verts)

    cells_m = mirror_id[mesh.cells][:, [0, 2, 1]]  # reflection flips orientation
    cells = np.vstack([mesh.cells, cells_m])

    keep = ~np.isin(mesh.boundary_tag_ids, list(seam_ids))
    be = mesh.boundary_edges[keep]
    bt = mesh.boundary_tag_ids[keep]
    be_m = mirror_id[be][:, [1, 0]]
    edges = np.vstack([be, be_m])
    tag_ids = np.concatenate([bt, bt])

    remaining = tuple(t for i, t in enumerate(mesh.tags) if i not in seam_ids)
    remap = {}
    for i, t in enumerate(mesh.tags):
        if i not in seam_ids:
            remap[i] = len(remap)
    if len(remaining) != len(mesh.tags):
        tag_ids = np.asarray([remap[int(t)] for t in tag_ids], dtype=np.int64)
    return Mesh(verts, cells, edges, tag_ids, remaining)
