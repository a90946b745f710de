"""Edge-element discretization and solve of the time-harmonic A/V problem.

Unknowns: lowest-order edge functions for the vector potential A on the
whole domain, piecewise-linear nodal values for the scaled scalar potential
v = V/(i*omega) on conductors, and one scalar per non-ground terminal (the
constant-potential lift).  With that scaling the block system

    (mu^-1 curl A, curl A') + i*omega*(sigma (A + grad v), A') = 0
    i*omega*(sigma (A + grad v), grad w_k)                     = I_k

is complex symmetric (transpose-symmetric, not Hermitian).  I_k is the
current entering terminal k and sits in the right-hand side row of the
terminal unknown; interior conductor rows get 0.

Gauge: A x n = 0 on the whole outer boundary removes every boundary-edge
DOF; the remaining gradient nullspace is killed by zeroing the A DOFs on a
spanning tree of the vertex graph (tree-cotree).  The tree prefers boundary
edges, which are constrained anyway, so only its interior edges cost DOFs.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import ConfigError, DriveSpec, MaterialTable
from .mesh import DomainPartition, EdgeSet


class DofMapError(ValueError):
    """Raised when no well-posed unknown numbering exists for the inputs."""


class AssemblyError(ValueError):
    """Raised when the system cannot be assembled from the given data."""


class SolveError(RuntimeError):
    """Solver failure; carries iteration count and last residual."""

    def __init__(self, message: str, iterations: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class SolverOptions:
    """Strategy selection: 'auto' uses the direct factorization up to
    direct_limit unknowns, then falls back to the iterative method
    (conjugate-orthogonal CG with diagonal scaling)."""

    method: str = "auto"
    tol: float = 1e-10
    max_iterations: int = 10_000
    direct_limit: int = 300_000

    def __post_init__(self) -> None:
        if self.method not in ("auto", "direct", "iterative"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not (self.tol > 0.0):
            raise ValueError(f"solver tol must be > 0, got {self.tol}")


@dataclass(frozen=True, eq=False)
class DofMap:
    """Numbering of the unknowns: free A edges first, then interior conductor
    nodes, then the terminal lifts (ground is fixed to 0 and has none).

    edge_dof[e] / node_dof[n] give global indices, -1 where constrained
    (boundary or tree edges; non-conductor, ground-terminal or pinned nodes).
    All nodes of terminal k share the single index terminal_dof[k].
    """

    partition: DomainPartition
    edges: EdgeSet
    edge_dof: np.ndarray
    node_dof: np.ndarray
    terminal_dof: np.ndarray
    n_edge_dofs: int
    n_interior_nodes: int
    tree_edges: np.ndarray
    pinned_nodes: np.ndarray
    gauge_seed: int

    @property
    def n_dofs(self) -> int:
        return self.n_edge_dofs + self.n_interior_nodes + len(self.terminal_dof)

    @property
    def n_terminals(self) -> int:
        return self.partition.n_terminals


def _spanning_tree(edges: EdgeSet, n_vertices: int, used: np.ndarray,
                   seed: int) -> np.ndarray:
    """Spanning tree (edge indices) of the graph on the used vertices,
    grown breadth-first from boundary edges outward.

    Boundary edges are explored first (per boundary component, from a
    seed-chosen root), then a multi-source sweep claims the interior, so
    interior tree edges are as few as possible.  The seed permutes neighbor
    order and root choice, producing genuinely different trees.
    """
    rng = np.random.RandomState(seed)
    e = edges.edges

    def adjacency(edge_ids: np.ndarray):
        perm = rng.permutation(edge_ids) if len(edge_ids) else edge_ids
        src = np.concatenate([e[perm, 0], e[perm, 1]])
        dst = np.concatenate([e[perm, 1], e[perm, 0]])
        eid = np.concatenate([perm, perm])
        order = np.argsort(src, kind="stable")
        src, dst, eid = src[order], dst[order], eid[order]
        starts = np.searchsorted(src, np.arange(n_vertices + 1))
        return dst, eid, starts

    visited = np.zeros(n_vertices, dtype=bool)
    tree: list[int] = []

    boundary_ids = np.flatnonzero(edges.on_boundary)
    if len(boundary_ids):
        dst, eid, starts = adjacency(boundary_ids)
        boundary_verts = np.unique(e[boundary_ids])
        todo = boundary_verts[rng.permutation(len(boundary_verts))]
        for root in todo:
            if visited[root]:
                continue
            visited[root] = True
            queue = deque([root])
            while queue:
                u = queue.popleft()
                for k in range(starts[u], starts[u + 1]):
                    w = dst[k]
                    if not visited[w]:
                        visited[w] = True
                        tree.append(int(eid[k]))
                        queue.append(w)

    dst, eid, starts = adjacency(np.arange(edges.n_edges))
    queue = deque(np.flatnonzero(visited[:n_vertices]))
    if not queue and used.any():
        root = int(np.flatnonzero(used)[0])
        visited[root] = True
        queue.append(root)
    while queue:
        u = queue.popleft()
        for k in range(starts[u], starts[u + 1]):
            w = dst[k]
            if not visited[w]:
                visited[w] = True
                tree.append(int(eid[k]))
                queue.append(w)

    if np.any(used & ~visited):
        raise DofMapError("disconnected mesh graph")
    return np.asarray(sorted(tree), dtype=np.int64)


def build_dofmap(part: DomainPartition, edges: EdgeSet, gauge_seed: int = 0) -> DofMap:
    """Number the unknowns.

    Free A DOFs = edges - boundary edges - interior tree edges.
    Free v DOFs = conductor nodes - terminal nodes - pinned nodes
    + one terminal unknown per non-ground terminal; one node is pinned per
    terminal-free conductor component (removes the floating constant).
    All driven terminals must live on the ground's conductor component,
    otherwise their potential offset would be indeterminate.
    """
    mesh = part.mesh
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[np.unique(mesh.tets)] = True
    tree = _spanning_tree(edges, mesh.n_vertices, used, gauge_seed)

    edge_dof = np.full(edges.n_edges, -1, dtype=np.int64)
    constrained = edges.on_boundary.copy()
    constrained[tree] = True
    free_edges = np.flatnonzero(~constrained)
    edge_dof[free_edges] = np.arange(len(free_edges))
    n_edge = len(free_edges)

    n_term = part.n_terminals
    node_dof = np.full(mesh.n_vertices, -1, dtype=np.int64)
    pinned: list[int] = []
    if n_term:
        ground_comp = part.terminal_component[n_term - 1]
        bad = [k + 1 for k in range(n_term - 1)
               if part.terminal_component[k] != ground_comp]
        if bad:
            raise DofMapError(
                f"terminal(s) {bad} lie on a conductor component with no path "
                "to the ground terminal; their potential would be indeterminate"
            )
    terminal_node_set = (np.concatenate(part.terminal_nodes)
                         if n_term else np.empty(0, dtype=np.int64))
    interior_mask = np.zeros(mesh.n_vertices, dtype=bool)
    interior_mask[part.conductor_nodes] = True
    interior_mask[terminal_node_set] = False
    for comp in range(part.n_components):
        if part.component_has_terminal[comp]:
            continue
        comp_nodes = np.unique(mesh.tets[part.tet_component == comp])
        pin = int(comp_nodes[0])
        pinned.append(pin)
        interior_mask[pin] = False
    interior_nodes = np.flatnonzero(interior_mask)
    node_dof[interior_nodes] = n_edge + np.arange(len(interior_nodes))
    n_interior = len(interior_nodes)

    terminal_dof = np.full(max(n_term - 1, 0), -1, dtype=np.int64)
    for k in range(n_term - 1):
        terminal_dof[k] = n_edge + n_interior + k
        node_dof[part.terminal_nodes[k]] = terminal_dof[k]
    # ground-terminal nodes stay at -1: V = 0 there

    for arr in (edge_dof, node_dof, terminal_dof, tree):
        arr.setflags(write=False)
    pinned_arr = np.asarray(pinned, dtype=np.int64)
    pinned_arr.setflags(write=False)
    return DofMap(
        partition=part, edges=edges, edge_dof=edge_dof, node_dof=node_dof,
        terminal_dof=terminal_dof, n_edge_dofs=n_edge,
        n_interior_nodes=n_interior, tree_edges=tree,
        pinned_nodes=pinned_arr, gauge_seed=gauge_seed,
    )


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Assembled complex-symmetric sparse system and its right-hand side."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    omega: float
    materials: MaterialTable
    drive: DriveSpec | None


def _geometry(vertices: np.ndarray, tets: np.ndarray):
    """Barycentric gradients (m,4,3) and positive volumes (m,)."""
    p = vertices[tets]
    jac = (p[:, 1:] - p[:, :1]).transpose(0, 2, 1)
    vol = np.linalg.det(jac.transpose(0, 2, 1)) / 6.0
    inv = np.linalg.inv(jac)
    g = np.empty((len(tets), 4, 3))
    g[:, 1:, :] = inv
    g[:, 0, :] = -inv.sum(axis=1)
    return g, vol


def _edge_vertex_grads(g: np.ndarray, edges: EdgeSet, tet_ids: np.ndarray):
    """Gradients g_a, g_b of the low/high vertex of each local edge, plus the
    local vertex index arrays (m,6)."""
    a = edges.first_local[tet_ids].astype(np.int64)
    b = edges.second_local[tet_ids].astype(np.int64)
    gt = g[tet_ids]
    ga = np.take_along_axis(gt, a[:, :, None], axis=1)
    gb = np.take_along_axis(gt, b[:, :, None], axis=1)
    return ga, gb, a, b


def _material_arrays(materials: MaterialTable, tet_tags: np.ndarray):
    try:
        table = {tag: (materials.sigma(tag), materials.mu(tag))
                 for tag in np.unique(tet_tags).tolist()}
    except ConfigError as exc:
        raise AssemblyError(str(exc)) from exc
    sigma = np.array([table[t][0] for t in tet_tags.tolist()])
    mu = np.array([table[t][1] for t in tet_tags.tolist()])
    return sigma, mu


def assemble(part: DomainPartition, edges: EdgeSet, dofmap: DofMap,
             materials: MaterialTable, drive: DriveSpec | None) -> LinearSystem:
    """Assemble the gauged block system.

    drive = None assembles the source-free omega = 0 case (curl-curl block
    only; meaningful for dielectric-only diagnostics).  Closed-form element
    integrals are used throughout (the integrands are at most quadratic), so
    assembly is exact and bitwise deterministic.
    """
    mesh = part.mesh
    if drive is not None:
        if drive.n_terminals != part.n_terminals:
            raise AssemblyError(
                f"drive prescribes {len(drive.terminal_currents)} currents but the "
                f"partition has {part.n_terminals} terminals")
        omega = drive.omega
    else:
        if part.n_terminals:
            raise AssemblyError("a mesh with terminals needs a DriveSpec")
        omega = 0.0

    sigma, mu = _material_arrays(materials, mesh.tet_tags)
    for k in range(part.n_terminals):
        comp = part.terminal_component[k]
        comp_sigma = sigma[part.tet_component == comp]
        if np.any(comp_sigma <= 0.0):
            raise AssemblyError(
                f"zero conductivity inside the conductor component of terminal {k + 1}")

    g, vol = _geometry(mesh.vertices, mesh.tets)
    ga, gb, a_loc, b_loc = _edge_vertex_grads(g, edges, np.arange(mesh.n_tets))
    ge = dofmap.edge_dof[edges.tet_edges]  # (m,6) global dof or -1

    rows_list, cols_list, data_list = [], [], []

    def add_block(r, c, v):
        mask = (r >= 0) & (c >= 0)
        rows_list.append(r[mask])
        cols_list.append(c[mask])
        data_list.append(v[mask])

    # curl-curl over all tets
    ce = 2.0 * np.cross(ga, gb)
    kmat = np.einsum("mld,mnd->mln", ce, ce) * (vol / mu)[:, None, None]
    add_block(np.broadcast_to(ge[:, :, None], kmat.shape).ravel(),
              np.broadcast_to(ge[:, None, :], kmat.shape).ravel(),
              kmat.astype(np.complex128).ravel())

    cond = part.conductor_tets
    if len(cond) and omega != 0.0:
        jw = 1j * omega
        s_c = sigma[cond]
        v_c = vol[cond]
        ga_c, gb_c = ga[cond], gb[cond]
        a_c, b_c = a_loc[cond], b_loc[cond]
        g_c = g[cond]
        ge_c = ge[cond]
        gn_c = dofmap.node_dof[mesh.tets[cond]]  # (mc,4)

        # edge-edge mass: int N_e . N_f with int lam_i lam_j = vol(1+delta)/20
        scale = (s_c * v_c / 20.0)[:, None, None]
        dot = lambda x, y: np.einsum("mld,mnd->mln", x, y)
        same = lambda x, y: (x[:, :, None] == y[:, None, :])
        mass = (dot(gb_c, gb_c) * (1.0 + same(a_c, a_c))
                - dot(gb_c, ga_c) * (1.0 + same(a_c, b_c))
                - dot(ga_c, gb_c) * (1.0 + same(b_c, a_c))
                + dot(ga_c, ga_c) * (1.0 + same(b_c, b_c))) * scale
        add_block(np.broadcast_to(ge_c[:, :, None], mass.shape).ravel(),
                  np.broadcast_to(ge_c[:, None, :], mass.shape).ravel(),
                  (jw * mass).astype(np.complex128).ravel())

        # edge-node coupling: int N_e . grad(lam_i) = vol/4 (g_b - g_a) . g_i
        coup = np.einsum("mld,mid->mli", gb_c - ga_c, g_c) \
            * (s_c * v_c / 4.0)[:, None, None]
        cdata = (jw * coup).astype(np.complex128)
        add_block(np.broadcast_to(ge_c[:, :, None], coup.shape).ravel(),
                  np.broadcast_to(gn_c[:, None, :], coup.shape).ravel(),
                  cdata.ravel())
        add_block(np.broadcast_to(gn_c[:, None, :], coup.shape).transpose(0, 2, 1).ravel(),
                  np.broadcast_to(ge_c[:, :, None], coup.shape).transpose(0, 2, 1).ravel(),
                  cdata.transpose(0, 2, 1).ravel())

        # node-node: int grad(lam_i) . grad(lam_j) = vol g_i . g_j
        lap = np.einsum("mid,mjd->mij", g_c, g_c) * (s_c * v_c)[:, None, None]
        add_block(np.broadcast_to(gn_c[:, :, None], lap.shape).ravel(),
                  np.broadcast_to(gn_c[:, None, :], lap.shape).ravel(),
                  (jw * lap).astype(np.complex128).ravel())

    n = dofmap.n_dofs
    matrix = sp.coo_matrix(
        (np.concatenate(data_list),
         (np.concatenate(rows_list), np.concatenate(cols_list))),
        shape=(n, n), dtype=np.complex128).tocsr()

    rhs = np.zeros(n, dtype=np.complex128)
    if drive is not None:
        for k, current in enumerate(drive.terminal_currents):
            rhs[dofmap.terminal_dof[k]] = current.to_complex()
    return LinearSystem(matrix=matrix, rhs=rhs, dofmap=dofmap, omega=omega,
                        materials=materials, drive=drive)


@dataclass(frozen=True, eq=False)
class FieldSolution:
    """Solved potentials plus everything needed to post-process them.

    edge_coeffs holds A for every mesh edge (zero on constrained edges);
    node_potential holds the physical V = i*omega*v per node (zero outside
    conductors and on ground); terminal_potentials are V_1..V_N with the
    ground entry exactly 0.  Every node of terminal k carries exactly the
    terminal value by construction.
    """

    dofmap: DofMap
    materials: MaterialTable
    drive: DriveSpec | None
    omega: float
    edge_coeffs: np.ndarray
    node_potential: np.ndarray
    terminal_potentials: np.ndarray
    residual: float
    iterations: int | None
    method: str

    @property
    def partition(self) -> DomainPartition:
        return self.dofmap.partition

    @property
    def edges(self) -> EdgeSet:
        return self.dofmap.edges


def _cocg(A: sp.csr_matrix, b: np.ndarray, tol: float, maxiter: int):
    """Conjugate-orthogonal CG for complex-symmetric A, Jacobi preconditioned.

    Uses the unconjugated bilinear form (r, z) = sum r_i z_i, the Krylov
    method matched to transpose-symmetry.
    """
    diag = A.diagonal()
    diag = np.where(np.abs(diag) > 0.0, diag, 1.0)
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    z = r / diag
    p = z.copy()
    rz = np.sum(r * z)
    for it in range(1, maxiter + 1):
        Ap = A @ p
        pAp = np.sum(p * Ap)
        if pAp == 0.0:
            raise SolveError("iterative solver breakdown (p^T A p = 0)",
                             iterations=it, residual=float(np.linalg.norm(r) / bnorm))
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r) / bnorm)
        if res <= tol:
            return x, it, res
        z = r / diag
        rz_new = np.sum(r * z)
        if rz == 0.0:
            raise SolveError("iterative solver breakdown (r^T z = 0)",
                             iterations=it, residual=res)
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = float(np.linalg.norm(r) / bnorm)
    raise SolveError(
        f"iterative solver did not reach tol={tol:g} in {maxiter} iterations "
        f"(residual {res:.3e})", iterations=maxiter, residual=res)


def solve(system: LinearSystem, options: SolverOptions = SolverOptions()) -> FieldSolution:
    """Solve the assembled system and unpack potentials.

    Direct route: sparse LU with iterative refinement until the relative
    residual meets options.tol.  Iterative route: conjugate-orthogonal CG
    with diagonal scaling.  Both report failures with iteration count and
    final residual.
    """
    A, b = system.matrix, system.rhs
    dofmap = system.dofmap
    n = A.shape[0]
    bnorm = np.linalg.norm(b)

    if n == 0 or bnorm == 0.0:
        x = np.zeros(n, dtype=np.complex128)
        residual, iterations, method = 0.0, 0, "trivial"
    elif options.method == "iterative" or (
            options.method == "auto" and n > options.direct_limit):
        x, iterations, residual = _cocg(A, b, options.tol, options.max_iterations)
        method = "iterative"
    else:
        try:
            lu = spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise SolveError(f"direct factorization failed: {exc}") from exc
        x = lu.solve(b)
        residual = float(np.linalg.norm(b - A @ x) / bnorm)
        for _ in range(3):
            if residual <= options.tol:
                break
            x = x + lu.solve(b - A @ x)
            residual = float(np.linalg.norm(b - A @ x) / bnorm)
        if not math.isfinite(residual) or residual > options.tol:
            raise SolveError(
                f"direct solve residual {residual:.3e} exceeds tol {options.tol:g}",
                iterations=0, residual=residual)
        iterations, method = 0, "direct"

    edge_coeffs = np.zeros(dofmap.edges.n_edges, dtype=np.complex128)
    free = dofmap.edge_dof >= 0
    edge_coeffs[free] = x[dofmap.edge_dof[free]]

    jw = 1j * system.omega
    node_potential = np.zeros(len(dofmap.node_dof), dtype=np.complex128)
    has = dofmap.node_dof >= 0
    node_potential[has] = jw * x[dofmap.node_dof[has]]

    n_term = dofmap.n_terminals
    terminal_potentials = np.zeros(max(n_term, 0), dtype=np.complex128)
    for k in range(n_term - 1):
        terminal_potentials[k] = jw * x[dofmap.terminal_dof[k]]

    for arr in (edge_coeffs, node_potential, terminal_potentials):
        arr.setflags(write=False)
    return FieldSolution(
        dofmap=dofmap, materials=system.materials, drive=system.drive,
        omega=system.omega, edge_coeffs=edge_coeffs, node_potential=node_potential,
        terminal_potentials=terminal_potentials, residual=residual,
        iterations=iterations, method=method,
    )
