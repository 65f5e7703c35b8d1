"""Unstructured 2D triangular meshes with tagged boundaries.

A mesh is immutable after construction: operations that "modify" it
(displacement, remeshing) return new Mesh objects. Boundary edges carry
tags that classify them as outer Dirichlet/Neumann boundary or as the
surface of a specific immersed body.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIRICHLET_WALL = "dirichlet-wall"
DIRICHLET_INFLOW = "dirichlet-inflow"
NEUMANN_OUTFLOW = "neumann-outflow"
SWIMMER = "swimmer"

_KINDS = (DIRICHLET_WALL, DIRICHLET_INFLOW, NEUMANN_OUTFLOW, SWIMMER)


class MeshError(Exception):
    """Invalid mesh topology or geometry."""


class InvertedElementError(MeshError):
    """A cell acquired non-positive signed area."""

    def __init__(self, cell: int, area: float):
        self.cell = int(cell)
        self.area = float(area)
        super().__init__(f"cell {cell} has non-positive signed area {area:g}")


@dataclass(frozen=True)
class BoundaryTag:
    """Name and role of one boundary group.

    ``kind`` is one of ``dirichlet-wall``, ``dirichlet-inflow``,
    ``neumann-outflow`` or ``swimmer``; swimmer tags carry the index of
    the body they belong to.
    """

    name: str
    kind: str
    body: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == SWIMMER and self.body is None:
            raise ValueError(f"swimmer tag {self.name!r} needs a body index")
        if self.kind != SWIMMER and self.body is not None:
            raise ValueError(f"tag {self.name!r}: body index only valid for swimmer tags")


@dataclass(frozen=True)
class QualityReport:
    """Per-cell quality q in [0, 1] plus the location of the minimum."""

    q: np.ndarray
    min_quality: float
    min_cell: int


def signed_areas(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    p0 = vertices[cells[:, 0]]
    e1 = vertices[cells[:, 1]] - p0
    e2 = vertices[cells[:, 2]] - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def cell_quality_array(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Quality 2*r_in/r_circ per cell, 1 for equilateral, 0 for degenerate.

    Equals 16*A^2 / ((a+b+c) * a*b*c) with edge lengths a, b, c; invariant
    under rigid motions and uniform scaling.
    """
    pa = vertices[cells[:, 0]]
    pb = vertices[cells[:, 1]]
    pc = vertices[cells[:, 2]]
    a = np.linalg.norm(pb - pc, axis=1)
    b = np.linalg.norm(pc - pa, axis=1)
    c = np.linalg.norm(pa - pb, axis=1)
    area = np.abs(signed_areas(vertices, cells))
    denom = (a + b + c) * a * b * c
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(denom > 0.0, 16.0 * area**2 / denom, 0.0)
    return np.clip(q, 0.0, 1.0)


class Mesh:
    """Triangular mesh of the fluid domain at one time instant.

    Parameters
    ----------
    vertices : (nv, 2) float array
    cells : (nc, 3) int array, counter-clockwise vertex triples
    boundary_edges : (nb, 2) int array
    boundary_tag_ids : (nb,) int array indexing into ``tags``
    tags : sequence of BoundaryTag; if empty, a single default
        ``dirichlet-wall`` tag named "boundary" is applied to all edges.
    """

    def __init__(self, vertices, cells, boundary_edges, boundary_tag_ids=None,
                 tags=(), validate: bool = True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64)
        if not tags:
            tags = (BoundaryTag("boundary", DIRICHLET_WALL),)
            boundary_tag_ids = np.zeros(len(self.boundary_edges), dtype=np.int64)
        self.tags = tuple(tags)
        self.boundary_tag_ids = np.ascontiguousarray(boundary_tag_ids, dtype=np.int64)
        self.tag_table = {tag.name: i for i, tag in enumerate(self.tags)}
        if validate:
            self.validate()

    # -- basic metrics -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.cells)

    def edge_lengths(self) -> np.ndarray:
        """Lengths of all unique cell edges."""
        e = np.vstack([self.cells[:, [0, 1]], self.cells[:, [1, 2]], self.cells[:, [2, 0]]])
        e = np.unique(np.sort(e, axis=1), axis=0)
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def quality(self) -> QualityReport:
        q = cell_quality_array(self.vertices, self.cells)
        imin = int(np.argmin(q))
        return QualityReport(q=q, min_quality=float(q[imin]), min_cell=imin)

    # -- tag helpers ---------------------------------------------------

    def tag_id(self, name: str) -> int:
        try:
            return self.tag_table[name]
        except KeyError:
            raise MeshError(f"unknown boundary tag {name!r}") from None

    def edges_of_tag(self, name: str) -> np.ndarray:
        return self.boundary_edges[self.boundary_tag_ids == self.tag_id(name)]

    def vertices_of_tag(self, name: str) -> np.ndarray:
        """Sorted ids of vertices incident to edges of the tag."""
        return np.unique(self.edges_of_tag(name))

    def swimmer_tags(self) -> list[BoundaryTag]:
        return [t for t in self.tags if t.kind == SWIMMER]

    def body_vertex_ids(self, body: int) -> np.ndarray:
        ids = [i for i, t in enumerate(self.tags) if t.kind == SWIMMER and t.body == body]
        if not ids:
            return np.empty(0, dtype=np.int64)
        mask = np.isin(self.boundary_tag_ids, ids)
        return np.unique(self.boundary_edges[mask])

    def boundary_vertex_ids(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def boundary_loops(self, tag_ids=None) -> list[np.ndarray]:
        """Ordered vertex loops of the (sub)boundary.

        Each loop is returned as an array of vertex ids with loop[0] ==
        loop[-1] omitted; orientation follows the stored edge direction.
        """
        if tag_ids is None:
            edges = self.boundary_edges
        else:
            edges = self.boundary_edges[np.isin(self.boundary_tag_ids, tag_ids)]
        succ = {}
        for a, b in edges:
            if int(a) in succ:
                raise MeshError("boundary is not a union of simple loops")
            succ[int(a)] = int(b)
        loops = []
        seen: set[int] = set()
        for start in sorted(succ):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            cur = succ[start]
            while cur != start:
                if cur in seen or cur not in succ:
                    raise MeshError("boundary loop does not close")
                loop.append(cur)
                seen.add(cur)
                cur = succ[cur]
            loops.append(np.asarray(loop, dtype=np.int64))
        return loops

    # -- validation ----------------------------------------------------

    def validate(self):
        areas = self.areas()
        bad = np.flatnonzero(areas <= 0.0)
        if bad.size:
            raise InvertedElementError(bad[0], areas[bad[0]])

        # every boundary edge must belong to exactly one cell
        cell_edges = np.vstack(
            [self.cells[:, [0, 1]], self.cells[:, [1, 2]], self.cells[:, [2, 0]]])
        cell_edges = np.sort(cell_edges, axis=1)
        order = np.lexsort((cell_edges[:, 1], cell_edges[:, 0]))
        se = cell_edges[order]
        uniq, counts = np.unique(se, axis=0, return_counts=True)
        edge_count = {(int(a), int(b)): int(c) for (a, b), c in zip(uniq, counts)}
        for a, b in np.sort(self.boundary_edges, axis=1):
            c = edge_count.get((int(a), int(b)), 0)
            if c != 1:
                raise MeshError(
                    f"boundary edge ({a}, {b}) belongs to {c} cells, expected 1")
        # interior edges appear twice, boundary edges once
        singles = uniq[counts == 1]
        if len(singles) != len(self.boundary_edges):
            raise MeshError(
                f"{len(singles)} cell edges lie on the boundary but "
                f"{len(self.boundary_edges)} are tagged")

        # boundary must decompose into closed loops; swimmer groups must
        # each form closed loops on their own
        self.boundary_loops()
        for body in sorted({t.body for t in self.tags if t.kind == SWIMMER}):
            ids = [i for i, t in enumerate(self.tags)
                   if t.kind == SWIMMER and t.body == body]
            self.boundary_loops(tag_ids=ids)

    # -- geometry updates ----------------------------------------------

    def displaced(self, displacement: np.ndarray) -> "Mesh":
        """New mesh with vertices moved by ``displacement`` (nv, 2).

        Raises InvertedElementError naming the first offending cell if the
        motion flips any triangle.
        """
        displacement = np.asarray(displacement, dtype=float)
        if displacement.shape != self.vertices.shape:
            raise ValueError(
                f"displacement shape {displacement.shape} does not match "
                f"vertex array {self.vertices.shape}")
        new_vertices = self.vertices + displacement
        areas = signed_areas(new_vertices, self.cells)
        bad = np.flatnonzero(areas <= 0.0)
        if bad.size:
            raise InvertedElementError(bad[0], areas[bad[0]])
        return Mesh(new_vertices, self.cells, self.boundary_edges,
                    self.boundary_tag_ids, self.tags, validate=False)


def cell_quality(mesh: Mesh, cell: int) -> float:
    """Quality of one cell (2*r_in/r_circ, equilateral -> 1)."""
    return float(cell_quality_array(mesh.vertices, mesh.cells[cell:cell + 1])[0])


def displace(mesh: Mesh, nodal_displacement: np.ndarray) -> Mesh:
    """Functional alias for Mesh.displaced."""
    return mesh.displaced(nodal_displacement)
