"""Taylor-Hood (P2/P1) finite elements for incompressible viscous flow.

Velocity is continuous piecewise-quadratic (vertex + edge-midpoint nodes,
two interleaved components), pressure continuous piecewise-linear on the
vertices. Assembly is vectorized over cells; systems are solved by sparse
LU with iterative refinement. Degrees of freedom are classified from the
mesh boundary tags: outer Dirichlet values are eliminated symmetrically,
Neumann tractions enter the right-hand side, and body-surface (gamma)
dofs are kept explicit for the rigid-body coupling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import (DIRICHLET_INFLOW, DIRICHLET_WALL, NEUMANN_OUTFLOW, SWIMMER,
                   Mesh)

# node classes
FREE, DIRICHLET, GAMMA = 0, 1, 2
_PRIORITY = {SWIMMER: 4, DIRICHLET_WALL: 3, DIRICHLET_INFLOW: 2, NEUMANN_OUTFLOW: 1}


class AssemblyError(Exception):
    """Non-finite entries or inconsistent inputs during assembly."""


class SingularSystemError(Exception):
    def __init__(self, msg, cause_hint=""):
        self.cause_hint = cause_hint
        super().__init__(msg + (f" (suspected cause: {cause_hint})" if cause_hint else ""))


class SolverError(Exception):
    """Linear solve failed to reach the required residual."""


# ---------------------------------------------------------------------------
# quadrature and shape functions

# Dunavant degree-4 rule (6 points), weights sum to 1
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
TRI_QUAD4_BARY = np.array([
    [1 - 2 * _A1, _A1, _A1], [_A1, 1 - 2 * _A1, _A1], [_A1, _A1, 1 - 2 * _A1],
    [1 - 2 * _A2, _A2, _A2], [_A2, 1 - 2 * _A2, _A2], [_A2, _A2, 1 - 2 * _A2],
])
TRI_QUAD4_W = np.array([_W1, _W1, _W1, _W2, _W2, _W2])

# Dunavant degree-6 rule (12 points) for error norms
_B1, _V1 = 0.063089014491502, 0.050844906370207
_B2, _V2 = 0.249286745170910, 0.116786275726379
_B3, _C3, _V3 = 0.310352451033785, 0.053145049844816, 0.082851075618374
_perm3 = lambda a: [[1 - 2 * a, a, a], [a, 1 - 2 * a, a], [a, a, 1 - 2 * a]]
_perm6 = [[1 - _B3 - _C3, _B3, _C3], [1 - _B3 - _C3, _C3, _B3],
          [_B3, 1 - _B3 - _C3, _C3], [_C3, 1 - _B3 - _C3, _B3],
          [_B3, _C3, 1 - _B3 - _C3], [_C3, _B3, 1 - _B3 - _C3]]
TRI_QUAD6_BARY = np.array(_perm3(_B1) + _perm3(_B2) + _perm6)
TRI_QUAD6_W = np.array([_V1] * 3 + [_V2] * 3 + [_V3] * 6)

# 3-point Gauss on [0, 1]
EDGE_GAUSS3_S = np.array([0.5 - np.sqrt(15) / 10, 0.5, 0.5 + np.sqrt(15) / 10])
EDGE_GAUSS3_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def p2_shape(bary: np.ndarray):
    """P2 values and barycentric gradients at barycentric points.

    Local node order: vertices 0,1,2 then midpoints of edges (0,1), (1,2),
    (2,0). Returns (N, dNdL) with shapes (q, 6) and (q, 6, 3).
    """
    L = np.asarray(bary)
    N = np.empty(L.shape[:-1] + (6,))
    N[..., 0] = L[..., 0] * (2 * L[..., 0] - 1)
    N[..., 1] = L[..., 1] * (2 * L[..., 1] - 1)
    N[..., 2] = L[..., 2] * (2 * L[..., 2] - 1)
    N[..., 3] = 4 * L[..., 0] * L[..., 1]
    N[..., 4] = 4 * L[..., 1] * L[..., 2]
    N[..., 5] = 4 * L[..., 2] * L[..., 0]
    dN = np.zeros(L.shape[:-1] + (6, 3))
    for i in range(3):
        dN[..., i, i] = 4 * L[..., i] - 1
    dN[..., 3, 0] = 4 * L[..., 1]
    dN[..., 3, 1] = 4 * L[..., 0]
    dN[..., 4, 1] = 4 * L[..., 2]
    dN[..., 4, 2] = 4 * L[..., 1]
    dN[..., 5, 2] = 4 * L[..., 0]
    dN[..., 5, 0] = 4 * L[..., 2]
    return N, dN


def p2_edge_trace(s: np.ndarray):
    """P2 values along one edge; nodes (start, end, midpoint)."""
    s = np.asarray(s)
    return np.stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)], axis=-1)


# ---------------------------------------------------------------------------
# dof map

@dataclass
class DofMap:
    """Velocity/pressure numbering plus per-node boundary classification.

    Velocity nodes are the mesh vertices followed by the unique edge
    midpoints; component c of node n is dof ``2 n + c``. Pressure dofs
    are the vertices.
    """

    mesh: Mesh
    edges: np.ndarray            # (ne, 2) sorted vertex pairs
    cell_edges: np.ndarray       # (nc, 3) edge ids for local edges 01, 12, 20
    node_coords: np.ndarray      # (n_nodes, 2)
    node_class: np.ndarray       # (n_nodes,) FREE / DIRICHLET / GAMMA
    node_tag: np.ndarray         # (n_nodes,) boundary tag id or -1
    node_body: np.ndarray        # (n_nodes,) body id for gamma nodes, else -1
    boundary_edge_mid: np.ndarray  # (nb,) midpoint node id per boundary edge

    @property
    def n_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def n_velocity_dofs(self) -> int:
        return 2 * self.n_nodes

    @property
    def n_pressure_dofs(self) -> int:
        return self.mesh.n_vertices

    def nodes_of_class(self, cls: int) -> np.ndarray:
        return np.flatnonzero(self.node_class == cls)

    def dofs_of_nodes(self, nodes: np.ndarray) -> np.ndarray:
        return np.column_stack([2 * nodes, 2 * nodes + 1]).ravel()

    @property
    def free_dofs(self) -> np.ndarray:
        return self.dofs_of_nodes(self.nodes_of_class(FREE))

    @property
    def gamma_dofs(self) -> np.ndarray:
        return self.dofs_of_nodes(self.nodes_of_class(GAMMA))

    @property
    def dirichlet_dofs(self) -> np.ndarray:
        return self.dofs_of_nodes(self.nodes_of_class(DIRICHLET))

    def gamma_nodes_of_body(self, body: int) -> np.ndarray:
        return np.flatnonzero((self.node_class == GAMMA) & (self.node_body == body))

    @property
    def has_neumann(self) -> bool:
        kinds = {t.kind for t in self.mesh.tags}
        if NEUMANN_OUTFLOW not in kinds:
            return False
        ids = [i for i, t in enumerate(self.mesh.tags) if t.kind == NEUMANN_OUTFLOW]
        return bool(np.isin(self.mesh.boundary_tag_ids, ids).any())


def build_taylor_hood(mesh: Mesh) -> DofMap:
    """Construct the P2/P1 dof map with boundary classification."""
    nv = mesh.n_vertices
    cells = mesh.cells
    raw = np.vstack([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]])
    raw_sorted = np.sort(raw, axis=1)
    edges, inverse = np.unique(raw_sorted, axis=0, return_inverse=True)
    cell_edges = inverse.reshape(3, -1).T

    midpoints = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    node_coords = np.vstack([mesh.vertices, midpoints])
    n_nodes = len(node_coords)

    node_class = np.zeros(n_nodes, dtype=np.int8)
    node_tag = np.full(n_nodes, -1, dtype=np.int64)
    node_body = np.full(n_nodes, -1, dtype=np.int64)
    priority = np.zeros(n_nodes, dtype=np.int8)

    edge_lookup = {(int(a), int(b)): k for k, (a, b) in enumerate(edges)}
    boundary_edge_mid = np.empty(len(mesh.boundary_edges), dtype=np.int64)

    for k, ((a, b), tid) in enumerate(zip(mesh.boundary_edges, mesh.boundary_tag_ids)):
        tag = mesh.tags[tid]
        prio = _PRIORITY[tag.kind]
        if tag.kind == SWIMMER:
            cls, body = GAMMA, tag.body
        elif tag.kind == NEUMANN_OUTFLOW:
            cls, body = FREE, -1
        else:
            cls, body = DIRICHLET, -1
        key = (min(int(a), int(b)), max(int(a), int(b)))
        mid = nv + edge_lookup[key]
        boundary_edge_mid[k] = mid
        for node in (int(a), int(b), mid):
            if prio > priority[node]:
                priority[node] = prio
                node_class[node] = cls
                node_tag[node] = tid
                node_body[node] = body

    return DofMap(mesh, edges, cell_edges, node_coords, node_class,
                  node_tag, node_body, boundary_edge_mid)


def cell_node_ids(dofmap: DofMap) -> np.ndarray:
    """(nc, 6) P2 node ids per cell (vertices then edge midpoints)."""
    nv = dofmap.mesh.n_vertices
    return np.hstack([dofmap.mesh.cells, nv + dofmap.cell_edges])


# ---------------------------------------------------------------------------
# fluid parameters

class FluidParams:
    """Viscosity, density and boundary data for the flow problem.

    ``bc`` maps boundary tag names to ("dirichlet", fn) / ("neumann", fn) /
    ("noslip", None); fn(t, x, y) must broadcast over coordinate arrays and
    return two components. Tags without an entry default to zero values.
    ``f`` is an optional volume force with the same call signature.
    """

    def __init__(self, mu, rho_f=0.0, f=None, bc=None):
        if mu <= 0:
            raise ValueError("viscosity must be positive")
        if rho_f < 0:
            raise ValueError("fluid density must be non-negative")
        self.mu = float(mu)
        self.rho_f = float(rho_f)
        self.f = f
        self.bc = dict(bc or {})

    def bc_value(self, tag_name: str, t: float, x: np.ndarray, y: np.ndarray):
        entry = self.bc.get(tag_name)
        if entry is None or entry[0] == "noslip":
            return np.zeros_like(x), np.zeros_like(y)
        fn = entry[1]
        vx, vy = fn(t, x, y)
        return np.broadcast_to(vx, x.shape).astype(float), \
            np.broadcast_to(vy, y.shape).astype(float)


# ---------------------------------------------------------------------------
# geometry tables

def _cell_geometry(mesh: Mesh):
    p0 = mesh.vertices[mesh.cells[:, 0]]
    p1 = mesh.vertices[mesh.cells[:, 1]]
    p2 = mesh.vertices[mesh.cells[:, 2]]
    j11 = p1[:, 0] - p0[:, 0]
    j21 = p1[:, 1] - p0[:, 1]
    j12 = p2[:, 0] - p0[:, 0]
    j22 = p2[:, 1] - p0[:, 1]
    det = j11 * j22 - j12 * j21
    area = 0.5 * det
    # gradients of barycentric coordinates: gradL[c, a, :] = rows of J^-1
    gradL = np.empty((len(area), 3, 2))
    gradL[:, 1, 0] = j22 / det
    gradL[:, 1, 1] = -j12 / det
    gradL[:, 2, 0] = -j21 / det
    gradL[:, 2, 1] = j11 / det
    gradL[:, 0, 0] = -gradL[:, 1, 0] - gradL[:, 2, 0]
    gradL[:, 0, 1] = -gradL[:, 1, 1] - gradL[:, 2, 1]
    return area, gradL


# ---------------------------------------------------------------------------
# system blocks

@dataclass
class SystemBlocks:
    """Assembled velocity/pressure operators split by dof class.

    ``A`` couples all velocity dofs; ``B`` is the pressure-velocity
    (divergence) block with the sign convention b(v, p) = -int p div v.
    ``G`` is the velocity right-hand side including volume forces, Neumann
    tractions and time-stepping history. Outer Dirichlet contributions
    have been moved to the right-hand side; the stored sub-blocks act on
    the free (interior + Neumann) and gamma (body surface) partitions.
    """

    dofmap: DofMap
    A: sp.csr_matrix
    B: sp.csr_matrix
    G: np.ndarray
    dirichlet_values: np.ndarray
    t: float

    def __post_init__(self):
        dm = self.dofmap
        self.free = dm.free_dofs
        self.gamma = dm.gamma_dofs
        self.dir = dm.dirichlet_dofs
        u_d = self.dirichlet_values
        self.A_II = self.A[self.free][:, self.free].tocsr()
        self.A_IG = self.A[self.free][:, self.gamma].tocsr()
        self.A_GI = self.A[self.gamma][:, self.free].tocsr()
        self.A_GG = self.A[self.gamma][:, self.gamma].tocsr()
        self.B_I = self.B[:, self.free].tocsr()
        self.B_G = self.B[:, self.gamma].tocsr()
        A_ID = self.A[self.free][:, self.dir]
        A_GD = self.A[self.gamma][:, self.dir]
        self.G_I = self.G[self.free] - A_ID @ u_d
        self.G_G = self.G[self.gamma] - A_GD @ u_d
        self.C0 = -(self.B[:, self.dir] @ u_d)

    @property
    def has_neumann(self) -> bool:
        return self.dofmap.has_neumann

    def full_velocity(self, u_free: np.ndarray, u_gamma: np.ndarray | None = None) -> np.ndarray:
        u = np.zeros(self.dofmap.n_velocity_dofs)
        u[self.free] = u_free
        u[self.dir] = self.dirichlet_values
        if len(self.gamma):
            if u_gamma is None:
                raise ValueError("gamma dof values required")
            u[self.gamma] = u_gamma
        return u

    def divergence_inf_norm(self, u_full: np.ndarray) -> float:
        return float(np.abs(self.B @ u_full).max()) if self.B.shape[0] else 0.0


def assemble_blocks(dofmap: DofMap, params: FluidParams,
                    u_conv: np.ndarray | None = None,
                    u_ale: np.ndarray | None = None,
                    dt: float | None = None,
                    bdf_history: list | None = None,
                    t: float = 0.0,
                    bdf_order: int = 1) -> SystemBlocks:
    """Assemble viscous + convective + time-derivative blocks at time t.

    ``u_conv`` and ``u_ale`` are nodal P2 vector fields (n_nodes, 2); the
    convection term uses their difference. ``bdf_history`` carries the
    previous velocity dof vectors [u^n] (BDF1) or [u^n, u^{n-1}] (BDF2);
    with ``rho_f == 0`` or no history, the steady Stokes operator results.
    """
    mesh = dofmap.mesh
    area, gradL = _cell_geometry(mesh)
    cn = cell_node_ids(dofmap)
    nc = mesh.n_cells
    n_nodes = dofmap.n_nodes
    nvd = dofmap.n_velocity_dofs

    Nq, dNdLq = p2_shape(TRI_QUAD4_BARY)
    w = TRI_QUAD4_W
    nq = len(w)
    # physical gradients per (cell, qpoint, basis, dim)
    gN = np.einsum("qia,cad->cqid", dNdLq, gradL)

    # scalar component matrices
    G1 = np.einsum("q,cqid,cqjd->cij", w, gN, gN)
    G2 = np.einsum("q,cqib,cqja->cijab", w, gN, gN)
    Mscal = np.einsum("q,qi,qj->ij", w, Nq, Nq)[None, :, :] * np.ones((nc, 1, 1))

    # 2 mu D(u):D(v) => entry[(j,b),(i,a)] = mu (gradNi . gradNj) d_ab
    #                                      + mu (dNi/dx_b)(dNj/dx_a)
    mu = params.mu
    visc = np.zeros((nc, 12, 12))
    for a in range(2):
        for b in range(2):
            blk = np.transpose(G2[:, :, :, a, b], (0, 2, 1))
            if a == b:
                blk = blk + G1
            visc[:, b::2, a::2] = mu * blk
    elem = visc * area[:, None, None]

    rho = params.rho_f
    if rho > 0.0 and u_conv is not None:
        w_nodal = u_conv - (u_ale if u_ale is not None else 0.0)
        w_cells = w_nodal[cn]                     # (nc, 6, 2)
        w_q = np.einsum("qi,cid->cqd", Nq, w_cells)
        adv = np.einsum("q,cqd,cqid,qj->cji", w, w_q, gN, Nq)  # test j, trial i
        for comp in range(2):
            elem[:, comp::2, comp::2] += rho * adv * area[:, None, None]

    time_coeff = 0.0
    if rho > 0.0 and dt is not None and bdf_history:
        time_coeff = rho / dt if bdf_order == 1 else 1.5 * rho / dt
        for comp in range(2):
            elem[:, comp::2, comp::2] += time_coeff * Mscal * area[:, None, None]

    if not np.isfinite(elem).all():
        raise AssemblyError("non-finite entries in velocity block (degenerate geometry?)")

    vdofs = np.empty((nc, 12), dtype=np.int64)
    vdofs[:, 0::2] = 2 * cn
    vdofs[:, 1::2] = 2 * cn + 1
    rows = np.repeat(vdofs, 12, axis=1).ravel()
    cols = np.tile(vdofs, (1, 12)).ravel()
    A = sp.coo_matrix((elem.ravel(), (rows, cols)), shape=(nvd, nvd)).tocsr()

    # divergence block: B[m, (i, a)] = -int psi_m dN_i/dx_a
    Bel = -np.einsum("q,qm,cqia->cmia", w, TRI_QUAD4_BARY, gN) * area[:, None, None, None]
    Bel = Bel.reshape(nc, 3, 12)
    prows = np.repeat(mesh.cells, 12, axis=1).ravel()
    pcols = np.tile(vdofs, (1, 3)).ravel()
    B = sp.coo_matrix((Bel.ravel(), (prows, pcols)),
                      shape=(dofmap.n_pressure_dofs, nvd)).tocsr()

    # right-hand side: volume force
    G = np.zeros(nvd)
    if params.f is not None:
        xq = np.einsum("qm,cmd->cqd", TRI_QUAD4_BARY, mesh.vertices[mesh.cells])
        fx, fy = params.f(t, xq[:, :, 0], xq[:, :, 1])
        fx = np.broadcast_to(fx, xq[:, :, 0].shape)
        fy = np.broadcast_to(fy, xq[:, :, 1].shape)
        Fel = np.empty((nc, 12))
        Fel[:, 0::2] = np.einsum("q,cq,qi->ci", w, fx, Nq) * area[:, None]
        Fel[:, 1::2] = np.einsum("q,cq,qi->ci", w, fy, Nq) * area[:, None]
        np.add.at(G, vdofs.ravel(), Fel.ravel())

    # time-derivative history (rho/dt) M u^n etc.
    if time_coeff > 0.0:
        Mel = np.zeros((nc, 12, 12))
        for comp in range(2):
            Mel[:, comp::2, comp::2] = Mscal * area[:, None, None]
        Mass = sp.coo_matrix((Mel.ravel(), (rows, cols)), shape=(nvd, nvd)).tocsr()
        if bdf_order == 1 or len(bdf_history) < 2:
            G += (rho / dt) * (Mass @ bdf_history[0])
        else:
            G += (rho / (2 * dt)) * (Mass @ (4.0 * bdf_history[0] - bdf_history[1]))

    # Neumann tractions
    neumann_ids = [i for i, tg in enumerate(mesh.tags) if tg.kind == NEUMANN_OUTFLOW]
    if neumann_ids:
        sel = np.isin(mesh.boundary_tag_ids, neumann_ids)
        edges_n = mesh.boundary_edges[sel]
        mids_n = dofmap.boundary_edge_mid[sel]
        tags_n = mesh.boundary_tag_ids[sel]
        if len(edges_n):
            tr = p2_edge_trace(EDGE_GAUSS3_S)      # (3 qpoints, 3 nodes)
            pa = mesh.vertices[edges_n[:, 0]]
            pb = mesh.vertices[edges_n[:, 1]]
            lengths = np.linalg.norm(pb - pa, axis=1)
            for tid in np.unique(tags_n):
                mask = tags_n == tid
                name = mesh.tags[tid].name
                a_pts = pa[mask][:, None, :] + EDGE_GAUSS3_S[None, :, None] \
                    * (pb[mask] - pa[mask])[:, None, :]
                gx, gy = params.bc_value(name, t, a_pts[:, :, 0], a_pts[:, :, 1])
                lw = lengths[mask][:, None] * EDGE_GAUSS3_W[None, :]
                contrib_x = np.einsum("eq,eq,qn->en", lw, gx, tr)
                contrib_y = np.einsum("eq,eq,qn->en", lw, gy, tr)
                nodes3 = np.column_stack([edges_n[mask][:, 0], edges_n[mask][:, 1],
                                          mids_n[mask]])
                np.add.at(G, 2 * nodes3.ravel(), contrib_x.ravel())
                np.add.at(G, 2 * nodes3.ravel() + 1, contrib_y.ravel())

    # outer Dirichlet values
    dir_nodes = dofmap.nodes_of_class(DIRICHLET)
    u_d = np.zeros(2 * len(dir_nodes))
    xy = dofmap.node_coords[dir_nodes]
    for tid in np.unique(dofmap.node_tag[dir_nodes]) if len(dir_nodes) else []:
        mask = dofmap.node_tag[dir_nodes] == tid
        name = mesh.tags[tid].name
        vx, vy = params.bc_value(name, t, xy[mask, 0], xy[mask, 1])
        idx = np.flatnonzero(mask)
        u_d[2 * idx] = vx
        u_d[2 * idx + 1] = vy

    if not np.isfinite(G).all():
        raise AssemblyError("non-finite right-hand side entries")
    return SystemBlocks(dofmap, A, B, G, u_d, t)


# ---------------------------------------------------------------------------
# solvers

def _apply_identity_rows(K: sp.csr_matrix, rhs: np.ndarray, rows: np.ndarray):
    keep = np.ones(K.shape[0])
    keep[rows] = 0.0
    Dk = sp.diags(keep)
    Df = sp.diags(1.0 - keep)
    K2 = (Dk @ K @ Dk + Df).tocsc()
    rhs = rhs.copy()
    rhs[rows] = 0.0
    return K2, rhs


def _lu_solve_refined(K: sp.spmatrix, rhs: np.ndarray, tol: float = 1e-10,
                      cause_probe=None) -> np.ndarray:
    Kc = K.tocsc()
    try:
        lu = spla.splu(Kc)
    except RuntimeError as exc:
        hint = cause_probe() if cause_probe else ""
        raise SingularSystemError(f"sparse factorization failed: {exc}", hint) from exc
    x = lu.solve(rhs)
    if not np.isfinite(x).all():
        hint = cause_probe() if cause_probe else ""
        raise SingularSystemError("solver produced non-finite values", hint)
    norm_b = np.linalg.norm(rhs)
    if norm_b == 0.0:
        return np.zeros_like(rhs)
    for _ in range(3):
        r = rhs - Kc @ x
        if np.linalg.norm(r) <= tol * norm_b:
            return x
        x = x + lu.solve(r)
    if np.linalg.norm(rhs - Kc @ x) > tol * norm_b:
        raise SolverError(
            f"relative residual {np.linalg.norm(rhs - Kc @ x) / norm_b:.3e} "
            f"exceeds {tol:.1e} after refinement")
    return x


@dataclass
class FlowSolution:
    u: np.ndarray           # all velocity dofs (2 * n_nodes,)
    p: np.ndarray           # pressure dofs (n_vertices,)
    divergence_inf: float


def solve_saddle_point(system: SystemBlocks, fix_pressure: bool | None = None) -> FlowSolution:
    """Direct solve of the (bodies-free) velocity-pressure system.

    A single pressure dof is pinned to zero when the problem has no
    Neumann boundary (pure Dirichlet flow determines pressure only up to
    a constant). Pass ``fix_pressure=False`` to disable the gauge.
    """
    if len(system.gamma):
        raise ValueError("mesh has body-surface dofs; use the coupled rigid-body solver")
    nI = len(system.free)
    npr = system.dofmap.n_pressure_dofs
    K = sp.bmat([[system.A_II, system.B_I.T], [system.B_I, None]], format="csr")
    rhs = np.concatenate([system.G_I, system.C0])
    if fix_pressure is None:
        fix_pressure = not system.has_neumann
    if fix_pressure:
        K, rhs = _apply_identity_rows(K, rhs, np.array([nI]))

    def probe():
        if not system.has_neumann and not fix_pressure:
            return "no pressure gauge (pure Dirichlet boundary)"
        from scipy.sparse.csgraph import connected_components
        mesh = system.dofmap.mesh
        nv = mesh.n_vertices
        adj = sp.coo_matrix((np.ones(3 * mesh.n_cells),
                             (np.concatenate([mesh.cells[:, 0], mesh.cells[:, 1], mesh.cells[:, 2]]),
                              np.concatenate([mesh.cells[:, 1], mesh.cells[:, 2], mesh.cells[:, 0]]))),
                            shape=(nv, nv))
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp > 1:
            return "disconnected mesh"
        return "unknown"

    x = _lu_solve_refined(K, rhs, cause_probe=probe)
    u_full = system.full_velocity(x[:nI])
    p = x[nI:nI + npr]
    return FlowSolution(u_full, p, system.divergence_inf_norm(u_full))


# ---------------------------------------------------------------------------
# validation harness

@dataclass
class ManufacturedStokes:
    """Closed-form (u, p) pair with matching volume force for testing."""

    u: object   # u(x, y) -> (ux, uy)
    p: object   # p(x, y) -> p
    f: object   # f(t, x, y) -> (fx, fy)


@dataclass
class ConvergenceResult:
    u_errors: list
    p_errors: list
    u_order: float
    p_order: float
    exact: bool

    @property
    def order_label(self) -> str:
        return "exact" if self.exact else f"u: {self.u_order:.2f}, p: {self.p_order:.2f}"


def l2_errors(mesh: Mesh, dofmap: DofMap, u: np.ndarray, p: np.ndarray,
              exact: ManufacturedStokes):
    """L2 errors of a discrete solution against closed forms (deg-6 rule)."""
    area, gradL = _cell_geometry(mesh)
    cn = cell_node_ids(dofmap)
    Nq, _ = p2_shape(TRI_QUAD6_BARY)
    w = TRI_QUAD6_W
    xq = np.einsum("qm,cmd->cqd", TRI_QUAD6_BARY, mesh.vertices[mesh.cells])
    ux_h = np.einsum("qi,ci->cq", Nq, u[2 * cn])
    uy_h = np.einsum("qi,ci->cq", Nq, u[2 * cn + 1])
    p_h = np.einsum("qm,cm->cq", TRI_QUAD6_BARY, p[mesh.cells])
    ux_e, uy_e = exact.u(xq[:, :, 0], xq[:, :, 1])
    p_e = exact.p(xq[:, :, 0], xq[:, :, 1])
    # compare pressures mean-free: a pure Dirichlet solve fixes the gauge
    # arbitrarily
    total = area.sum()
    mean_h = np.einsum("q,cq,c->", w, p_h, area) / total
    mean_e = np.einsum("q,cq,c->", w, p_e * np.ones_like(p_h), area) / total
    du2 = (ux_h - ux_e) ** 2 + (uy_h - uy_e) ** 2
    dp2 = ((p_h - mean_h) - (p_e - mean_e)) ** 2
    err_u = float(np.sqrt(np.einsum("q,cq,c->", w, du2, area)))
    err_p = float(np.sqrt(np.einsum("q,cq,c->", w, dp2, area)))
    return err_u, err_p


def convergence_study(exact_solution: ManufacturedStokes, mesh_sequence,
                      mu: float = 1.0) -> ConvergenceResult:
    """Observed L2 convergence orders on a refinement sequence.

    Solves steady Stokes with full Dirichlet data taken from the exact
    velocity on each mesh and reports orders from consecutive error
    ratios. Requires at least 3 meshes.
    """
    meshes = list(mesh_sequence)
    if len(meshes) < 3:
        raise ValueError("need at least 3 meshes for a convergence study")
    errs_u, errs_p, hs = [], [], []
    for mesh in meshes:
        dm = build_taylor_hood(mesh)
        bc = {t.name: ("dirichlet",
                       lambda tt, x, y: exact_solution.u(x, y))
              for t in mesh.tags}
        params = FluidParams(mu=mu, rho_f=0.0, f=exact_solution.f, bc=bc)
        blocks = assemble_blocks(dm, params)
        sol = solve_saddle_point(blocks)
        eu, ep = l2_errors(mesh, dm, sol.u, sol.p, exact_solution)
        errs_u.append(eu)
        errs_p.append(ep)
        hs.append(float(np.median(mesh.edge_lengths())))
    if max(errs_u) < 1e-10:
        return ConvergenceResult(errs_u, errs_p, float("inf"), float("inf"), True)

    def last_pair_order(errs):
        return float(np.log(errs[-2] / errs[-1]) / np.log(hs[-2] / hs[-1]))

    return ConvergenceResult(errs_u, errs_p, last_pair_order(errs_u),
                             last_pair_order(errs_p), False)
