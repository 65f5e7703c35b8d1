"""Point location and finite-element field evaluation / transfer.

Used to evaluate P2/P1 fields at arbitrary points and to carry solution
fields across a remesh (locate the new node in the old mesh, interpolate
with the old basis).
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .fem import DofMap, cell_node_ids, p2_shape
from .mesh import Mesh


class CellLocator:
    """Locate points in a triangulation via nearest-centroid candidates."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.centroids = mesh.vertices[mesh.cells].mean(axis=1)
        self.tree = cKDTree(self.centroids)
        p0 = mesh.vertices[mesh.cells[:, 0]]
        e1 = mesh.vertices[mesh.cells[:, 1]] - p0
        e2 = mesh.vertices[mesh.cells[:, 2]] - p0
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self._p0 = p0
        self._inv = np.empty((len(det), 2, 2))
        self._inv[:, 0, 0] = e2[:, 1] / det
        self._inv[:, 0, 1] = -e2[:, 0] / det
        self._inv[:, 1, 0] = -e1[:, 1] / det
        self._inv[:, 1, 1] = e1[:, 0] / det

    def _bary(self, cells: np.ndarray, pts: np.ndarray) -> np.ndarray:
        rel = pts - self._p0[cells]
        xi = np.einsum("nij,nj->ni", self._inv[cells], rel)
        return np.column_stack([1.0 - xi[:, 0] - xi[:, 1], xi[:, 0], xi[:, 1]])

    def locate(self, pts: np.ndarray, tol: float = 1e-10):
        """Return (cell_ids, barycentric) for each point.

        Points marginally outside the mesh (within roundoff of the
        boundary) are clamped to the nearest candidate cell.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = len(pts)
        cells = np.full(n, -1, dtype=np.int64)
        bary = np.zeros((n, 3))
        pending = np.arange(n)
        k = 8
        best_cell = np.full(n, -1, dtype=np.int64)
        best_def = np.full(n, np.inf)
        while len(pending) and k <= 512:
            kk = min(k, len(self.centroids))
            _, cand = self.tree.query(pts[pending], k=kk)
            cand = np.atleast_2d(cand)
            still = []
            for row, pi in enumerate(pending):
                found = False
                for c in cand[row]:
                    b = self._bary(np.array([c]), pts[pi:pi + 1])[0]
                    deficit = -min(b.min(), 0.0)
                    if deficit <= tol:
                        cells[pi] = c
                        bary[pi] = b
                        found = True
                        break
                    if deficit < best_def[pi]:
                        best_def[pi] = deficit
                        best_cell[pi] = c
                if not found:
                    still.append(pi)
            pending = np.asarray(still, dtype=np.int64)
            if kk == len(self.centroids):
                break
            k *= 4
        # clamp leftovers to their best candidate
        for pi in pending:
            c = best_cell[pi]
            b = self._bary(np.array([c]), pts[pi:pi + 1])[0]
            b = np.clip(b, 0.0, None)
            bary[pi] = b / b.sum()
            cells[pi] = c
        return cells, bary


def eval_p2(dofmap: DofMap, values: np.ndarray, pts: np.ndarray,
            locator: CellLocator | None = None) -> np.ndarray:
    """Evaluate a P2 field at points; values has shape (n_nodes,) or (n_nodes, 2)."""
    locator = locator or CellLocator(dofmap.mesh)
    cells, bary = locator.locate(pts)
    N, _ = p2_shape(bary)              # (npts, 6)
    cn = cell_node_ids(dofmap)[cells]  # (npts, 6)
    vals = np.asarray(values)
    if vals.ndim == 1:
        return np.einsum("pi,pi->p", N, vals[cn])
    return np.einsum("pi,pid->pd", N, vals[cn])


def eval_p1(mesh: Mesh, values: np.ndarray, pts: np.ndarray,
            locator: CellLocator | None = None) -> np.ndarray:
    """Evaluate a P1 (vertex) field at points."""
    locator = locator or CellLocator(mesh)
    cells, bary = locator.locate(pts)
    vals = np.asarray(values)
    if vals.ndim == 1:
        return np.einsum("pm,pm->p", bary, vals[mesh.cells[cells]])
    return np.einsum("pm,pmd->pd", bary, vals[mesh.cells[cells]])


def transfer_p2_dofs(old_dofmap: DofMap, old_u: np.ndarray,
                     new_dofmap: DofMap,
                     locator: CellLocator | None = None) -> np.ndarray:
    """Interpolate a velocity dof vector onto the nodes of a new dof map."""
    locator = locator or CellLocator(old_dofmap.mesh)
    vals = np.column_stack([old_u[0::2], old_u[1::2]])
    new_vals = eval_p2(old_dofmap, vals, new_dofmap.node_coords, locator)
    out = np.empty(new_dofmap.n_velocity_dofs)
    out[0::2] = new_vals[:, 0]
    out[1::2] = new_vals[:, 1]
    return out


def transfer_p1_vertices(old_mesh: Mesh, values: np.ndarray, new_mesh: Mesh,
                         locator: CellLocator | None = None) -> np.ndarray:
    """Interpolate a vertex field onto the vertices of a new mesh."""
    locator = locator or CellLocator(old_mesh)
    return eval_p1(old_mesh, values, new_mesh.vertices, locator)
