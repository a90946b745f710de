"""Tetrahedral meshes: MSH 2.2 I/O, a structured rod generator, edge
enumeration for edge elements, and partitioning into conductor, dielectric
and terminal pieces.

A Mesh is watertight and fully tagged: every face belonging to exactly one
tet must appear in boundary_tris with a surface tag, and vice versa.  The
whole boundary is the truncation surface Gamma on which the tangential
vector potential is constrained; terminal patches are subsets of it.
Meshes are immutable after construction (arrays are marked read-only) and
derived structures reference, never copy, the vertex/element arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import RegionMap

# Local edge l of a tet connects local vertices LOCAL_EDGES[l]; local face i
# is the one opposite local vertex i.
LOCAL_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
LOCAL_FACES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])

_MAX_VERTICES = 2_000_000  # keeps the int64 face/edge keys below overflow


class MeshError(ValueError):
    """Raised for semantically invalid meshes (bad topology, tags, volumes)."""


class MeshFormatError(ValueError):
    """Raised for malformed or unsupported MSH input."""


def _edge_keys(pairs: np.ndarray, nv: int) -> np.ndarray:
    p = np.sort(pairs.astype(np.int64), axis=1)
    return p[:, 0] * nv + p[:, 1]


def _face_keys(tris: np.ndarray, nv: int) -> np.ndarray:
    f = np.sort(tris.astype(np.int64), axis=1)
    return (f[:, 0] * nv + f[:, 1]) * nv + f[:, 2]


def tet_volumes(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Signed volumes det([p1-p0, p2-p0, p3-p0])/6 per tet."""
    p = vertices[tets]
    d = p[:, 1:] - p[:, :1]
    return np.linalg.det(d) / 6.0


@dataclass(frozen=True, eq=False)
class Mesh:
    """Vertices (n,3) in meters, tets (m,4) with volume tags, tagged boundary tris.

    The constructor canonicalizes tet orientation (positive signed volume),
    then validates: non-degenerate tets, boundary triangles are exactly the
    faces owned by a single tet, one tag per cell.
    """

    vertices: np.ndarray
    tets: np.ndarray
    tet_tags: np.ndarray
    boundary_tris: np.ndarray
    tri_tags: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.asarray(self.tets, dtype=np.int64).copy()
        tt = np.ascontiguousarray(np.asarray(self.tet_tags, dtype=np.int64))
        b = np.ascontiguousarray(np.asarray(self.boundary_tris, dtype=np.int64))
        bt = np.ascontiguousarray(np.asarray(self.tri_tags, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if len(v) > _MAX_VERTICES:
            raise MeshError(f"mesh exceeds supported size ({len(v)} vertices)")
        if t.ndim != 2 or t.shape[1] != 4:
            raise MeshError(f"tets must be (m, 4), got {t.shape}")
        if b.ndim != 2 or (len(b) and b.shape[1] != 3):
            raise MeshError(f"boundary_tris must be (k, 3), got {b.shape}")
        if len(tt) != len(t):
            raise MeshError("one volume tag per tet required")
        if len(bt) != len(b):
            raise MeshError("one surface tag per boundary triangle required")
        for arr, name in ((t, "tet"), (b, "triangle")):
            if len(arr) and (arr.min() < 0 or arr.max() >= len(v)):
                raise MeshError(f"{name} vertex index out of range")
        if len(t) == 0:
            raise MeshError("mesh has no tets")

        vol = tet_volumes(v, t)
        flip = vol < 0.0
        t[flip, 2], t[flip, 3] = t[flip, 3], t[flip, 2].copy()
        vol = np.abs(vol)
        if np.any(vol == 0.0):
            bad = int(np.flatnonzero(vol == 0.0)[0])
            raise MeshError(f"non-positive volume in tet {bad}: {t[bad].tolist()}")

        nv = len(v)
        fk = _face_keys(t[:, LOCAL_FACES].reshape(-1, 3), nv)
        uniq, counts = np.unique(fk, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("a triangular face is shared by more than two tets")
        surface = uniq[counts == 1]
        bk = _face_keys(b, nv) if len(b) else np.empty(0, dtype=np.int64)
        if len(np.unique(bk)) != len(bk):
            raise MeshError("duplicate boundary triangle (a face may carry only one tag)")
        bk_sorted = np.sort(bk)
        if len(bk_sorted) != len(surface) or np.any(bk_sorted != surface):
            extra = np.setdiff1d(bk_sorted, surface)
            if len(extra):
                raise MeshError(
                    "boundary triangle is not a face of exactly one tet "
                    f"(first bad face key {int(extra[0])})"
                )
            raise MeshError(
                f"{len(surface) - len(bk_sorted)} boundary face(s) carry no surface tag"
            )

        for arr in (v, t, tt, b, bt):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "tets", t)
        object.__setattr__(self, "tet_tags", tt)
        object.__setattr__(self, "boundary_tris", b)
        object.__setattr__(self, "tri_tags", bt)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_tets(self) -> int:
        return len(self.tets)


def simplex_counts(mesh: Mesh) -> tuple[int, int, int, int]:
    """(vertices, edges, faces, cells); V - E + F - C = 1 for a 3-ball."""
    nv = mesh.n_vertices
    ek = _edge_keys(mesh.tets[:, LOCAL_EDGES].reshape(-1, 2), nv)
    fk = _face_keys(mesh.tets[:, LOCAL_FACES].reshape(-1, 3), nv)
    return nv, len(np.unique(ek)), len(np.unique(fk)), mesh.n_tets


@dataclass(frozen=True, eq=False)
class EdgeSet:
    """Unique mesh edges (low vertex first, sorted lexicographically) plus
    per-tet incidence.

    ``tet_edges[m, l]`` is the global edge index of local edge l in tet m.
    ``first_local``/``second_local`` give, per (tet, local edge), the local
    vertex indices ordered so the first one has the LOWER global index: the
    edge basis function is oriented low -> high global vertex everywhere,
    making coefficients independent of element ordering.
    ``on_boundary[e]`` marks edges lying in some boundary triangle.
    """

    edges: np.ndarray
    tet_edges: np.ndarray
    first_local: np.ndarray
    second_local: np.ndarray
    on_boundary: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def extract_edges(mesh: Mesh) -> EdgeSet:
    """Enumerate unique edges and build the oriented tet->edge incidence."""
    nv = mesh.n_vertices
    pairs = mesh.tets[:, LOCAL_EDGES].reshape(-1, 2)
    keys = _edge_keys(pairs, nv)
    uniq, inverse = np.unique(keys, return_inverse=True)
    tet_edges = inverse.reshape(mesh.n_tets, 6).astype(np.int64)
    edges = np.column_stack(divmod(uniq, nv)).astype(np.int64)

    glob = mesh.tets[:, LOCAL_EDGES]  # (m, 6, 2) global vertex ids
    swap = glob[:, :, 0] > glob[:, :, 1]
    first = np.where(swap, LOCAL_EDGES[:, 1], LOCAL_EDGES[:, 0])
    second = np.where(swap, LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1])

    on_boundary = np.zeros(len(uniq), dtype=bool)
    if len(mesh.boundary_tris):
        tri_pairs = mesh.boundary_tris[:, [[0, 1], [0, 2], [1, 2]]].reshape(-1, 2)
        tri_keys = _edge_keys(tri_pairs, nv)
        on_boundary[np.searchsorted(uniq, np.unique(tri_keys))] = True

    for arr in (edges, tet_edges, first, second, on_boundary):
        arr.setflags(write=False)
    return EdgeSet(edges, tet_edges, first.astype(np.int8), second.astype(np.int8), on_boundary)


# ---------------------------------------------------------------------------
# MSH 2.2 ASCII subset: $MeshFormat / $Nodes / $Elements, element types
# 2 (triangle) and 4 (tet), physical tags required.

_MSH_TRI = 2
_MSH_TET = 4


def load_msh(stream, region_map: RegionMap) -> Mesh:
    """Read a Gmsh MSH 2.2 ASCII file whose tags are covered by region_map.

    Volume tags must be declared conductor or dielectric; surface tags must
    be the outer tag or a terminal tag.  Unsupported versions and element
    types are rejected, as are meshes failing Mesh validation.
    """
    if hasattr(stream, "read"):
        text = stream.read()
    else:
        text = stream
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    pos = 0

    def next_line() -> str:
        nonlocal pos
        while pos < len(lines):
            line = lines[pos].strip()
            pos += 1
            if line:
                return line
        raise MeshFormatError("unexpected end of MSH file")

    sections: dict[str, list[str]] = {}
    while pos < len(lines):
        line = lines[pos].strip()
        pos += 1
        if not line:
            continue
        if not line.startswith("$") or line.startswith("$End"):
            raise MeshFormatError(f"expected a section header, got {line!r}")
        name = line[1:]
        body = []
        while True:
            entry = next_line()
            if entry == f"$End{name}":
                break
            body.append(entry)
        sections[name] = body

    for required in ("MeshFormat", "Nodes", "Elements"):
        if required not in sections:
            raise MeshFormatError(f"missing ${required} section")

    fmt = sections["MeshFormat"]
    if not fmt:
        raise MeshFormatError("empty $MeshFormat section")
    parts = fmt[0].split()
    if len(parts) < 3 or parts[0] != "2.2":
        raise MeshFormatError(f"unsupported MSH version {parts[0] if parts else '?'} (need 2.2)")
    if parts[1] != "0":
        raise MeshFormatError("binary MSH is not supported (file-type must be 0)")

    nodes = sections["Nodes"]
    try:
        n_nodes = int(nodes[0])
    except (IndexError, ValueError):
        raise MeshFormatError("malformed $Nodes count") from None
    if len(nodes) - 1 != n_nodes:
        raise MeshFormatError(f"$Nodes declares {n_nodes} nodes, found {len(nodes) - 1}")
    ids = np.empty(n_nodes, dtype=np.int64)
    coords = np.empty((n_nodes, 3), dtype=np.float64)
    for i, line in enumerate(nodes[1:]):
        parts = line.split()
        if len(parts) != 4:
            raise MeshFormatError(f"malformed node line: {line!r}")
        ids[i] = int(parts[0])
        coords[i] = [float(p) for p in parts[1:]]
    id_to_row = {int(node_id): i for i, node_id in enumerate(ids)}
    if len(id_to_row) != n_nodes:
        raise MeshFormatError("duplicate node id in $Nodes")

    elements = sections["Elements"]
    try:
        n_elem = int(elements[0])
    except (IndexError, ValueError):
        raise MeshFormatError("malformed $Elements count") from None
    if len(elements) - 1 != n_elem:
        raise MeshFormatError(f"$Elements declares {n_elem} elements, found {len(elements) - 1}")
    tets, tet_tags, tris, tri_tags = [], [], [], []
    for line in elements[1:]:
        parts = [int(p) for p in line.split()]
        if len(parts) < 3:
            raise MeshFormatError(f"malformed element line: {line!r}")
        etype, ntags = parts[1], parts[2]
        if etype not in (_MSH_TRI, _MSH_TET):
            raise MeshFormatError(f"unsupported element type {etype} (only 2 and 4)")
        if ntags < 1:
            raise MeshFormatError(f"element {parts[0]} carries no physical tag")
        tag = parts[3]
        conn = parts[3 + ntags:]
        want = 3 if etype == _MSH_TRI else 4
        if len(conn) != want:
            raise MeshFormatError(f"element {parts[0]} has {len(conn)} nodes, expected {want}")
        try:
            rows = [id_to_row[c] for c in conn]
        except KeyError as exc:
            raise MeshFormatError(f"element {parts[0]} references unknown node {exc}") from None
        if etype == _MSH_TET:
            tets.append(rows)
            tet_tags.append(tag)
        else:
            tris.append(rows)
            tri_tags.append(tag)

    if not tets:
        raise MeshFormatError("no tetrahedra in $Elements")
    bad_vol = sorted(set(tet_tags) - set(region_map.volume_tags))
    if bad_vol:
        raise MeshError(f"volume tag {bad_vol[0]} not in region_map")
    bad_surf = sorted(set(tri_tags) - set(region_map.surface_tags))
    if bad_surf:
        raise MeshError(f"surface tag {bad_surf[0]} not in region_map")
    return Mesh(coords, np.array(tets), np.array(tet_tags),
                np.array(tris, dtype=np.int64).reshape(-1, 3), np.array(tri_tags, dtype=np.int64))


def save_msh(mesh: Mesh, stream) -> None:
    """Write MSH 2.2 ASCII; output is byte-reproducible for a given mesh.

    Nodes are written 1-based in array order with shortest round-trip float
    formatting; boundary triangles precede tets, both with the tag repeated
    as (physical, elementary).
    """
    out = []
    out.append("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
    out.append(f"$Nodes\n{mesh.n_vertices}\n")
    for i, (x, y, z) in enumerate(mesh.vertices, start=1):
        out.append(f"{i} {float(x)!r} {float(y)!r} {float(z)!r}\n")
    out.append("$EndNodes\n")
    n_elem = len(mesh.boundary_tris) + mesh.n_tets
    out.append(f"$Elements\n{n_elem}\n")
    eid = 1
    for tri, tag in zip(mesh.boundary_tris, mesh.tri_tags):
        a, b, c = (int(v) + 1 for v in tri)
        out.append(f"{eid} 2 2 {tag} {tag} {a} {b} {c}\n")
        eid += 1
    for tet, tag in zip(mesh.tets, mesh.tet_tags):
        a, b, c, d = (int(v) + 1 for v in tet)
        out.append(f"{eid} 4 2 {tag} {tag} {a} {b} {c} {d}\n")
        eid += 1
    out.append("$EndElements\n")
    text = "".join(out)
    if hasattr(stream, "write"):
        stream.write(text)
    else:
        with open(stream, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Structured rod generator.

ROD_CONDUCTOR_TAG = 1
ROD_LATERAL_TAG = 10
ROD_TOP_TAG = 11  # terminal 1 (z = L)
ROD_BOTTOM_TAG = 12  # terminal 2, ground (z = 0)


def _split_prism(b0, b1, b2, t0, t1, t2) -> list[tuple[int, int, int, int]]:
    """Split a triangular prism into 3 tets with globally consistent diagonals.

    Every quad face takes the diagonal through its lowest-numbered corner, so
    two prisms sharing a quad always agree.  Achieved by rotating/flipping the
    prism until the overall lowest-numbered vertex sits at bottom position 0,
    then splitting the one quad not touching it by its own lowest corner.
    """
    bottom = [b0, b1, b2]
    top = [t0, t1, t2]
    vals = bottom + top
    m = vals.index(min(vals))
    if m >= 3:
        # flip upside down; reversing both triangles keeps the prism
        # right-handed so the same splitting tables apply
        bottom, top = [top[0], top[2], top[1]], [bottom[0], bottom[2], bottom[1]]
        m = {3: 0, 4: 2, 5: 1}[m]
    bottom = bottom[m:] + bottom[:m]
    top = top[m:] + top[:m]
    b0, b1, b2 = bottom
    t0, t1, t2 = top
    tets = [(b0, t0, t1, t2)]
    if min(b1, t2) < min(b2, t1):
        tets += [(b0, b1, b2, t2), (b0, b1, t2, t1)]
    else:
        tets += [(b0, b1, b2, t1), (b0, b2, t2, t1)]
    return tets


def generate_rod_mesh(length: float, radius: float, n_r: int, n_theta: int,
                      n_z: int) -> Mesh:
    """Structured tet mesh of a solid cylinder, axis along z from 0 to length.

    Construction: n_z layers of n_theta*(2*n_r - 1) triangular prisms (rings
    of quads split radially, a triangle fan at the axis), each prism cut into
    3 tets by the lowest-global-index diagonal rule, hence
        vertices = (n_z + 1) * (1 + n_r * n_theta)
        tets     = 3 * n_theta * (2*n_r - 1) * n_z.
    Ring radii are scaled by sqrt((2*pi/n_theta)/sin(2*pi/n_theta)) so the
    polygonal cross-section area equals pi*radius^2 exactly, removing the
    area deficit of inscribing the polygon.
    Edge lengths lie between the inner chord, the radial step and the axial
    step, so the per-tet longest/shortest edge ratio never exceeds
        sqrt(dz^2 + dr^2 + c_max^2) / min(dz, dr, c_min)
    with dz = length/n_z, dr = r_eff/n_r, c_i = 2*sin(pi/n_theta)*i*dr
    (see rod_aspect_bound).
    Tags: conductor volume 1; lateral surface 10; z=length cap 11
    (terminal 1); z=0 cap 12 (terminal 2, ground).
    """
    if not (length > 0.0 and radius > 0.0):
        raise ValueError(f"rod dimensions must be positive, got L={length}, a={radius}")
    if n_r < 1 or n_theta < 3 or n_z < 1:
        raise ValueError(f"need n_r >= 1, n_theta >= 3, n_z >= 1, got {(n_r, n_theta, n_z)}")

    alpha = 2.0 * math.pi / n_theta
    r_eff = radius * math.sqrt(alpha / math.sin(alpha))
    zs = np.linspace(0.0, length, n_z + 1)
    layer = 1 + n_r * n_theta

    verts = np.empty(((n_z + 1) * layer, 3), dtype=np.float64)
    angles = np.arange(n_theta) * alpha
    ring_xy = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    for iz, z in enumerate(zs):
        base = iz * layer
        verts[base] = (0.0, 0.0, z)
        for i in range(1, n_r + 1):
            r_i = r_eff * i / n_r
            rows = base + 1 + (i - 1) * n_theta
            verts[rows:rows + n_theta, :2] = r_i * ring_xy
            verts[rows:rows + n_theta, 2] = z

    def node(iz: int, ring: int, j: int) -> int:
        if ring == 0:
            return iz * layer
        return iz * layer + 1 + (ring - 1) * n_theta + (j % n_theta)

    tets = []
    for iz in range(n_z):
        for j in range(n_theta):
            tri = [(0, 0), (1, j), (1, j + 1)]
            bot = [node(iz, r, jj) for r, jj in tri]
            top = [node(iz + 1, r, jj) for r, jj in tri]
            tets += _split_prism(*bot, *top)
        for ring in range(2, n_r + 1):
            for j in range(n_theta):
                quad = [(ring - 1, j), (ring, j), (ring, j + 1), (ring - 1, j + 1)]
                for tri in (quad[:3], [quad[0], quad[2], quad[3]]):
                    bot = [node(iz, r, jj) for r, jj in tri]
                    top = [node(iz + 1, r, jj) for r, jj in tri]
                    tets += _split_prism(*bot, *top)
    tets = np.array(tets, dtype=np.int64)

    fk = _face_keys(tets[:, LOCAL_FACES].reshape(-1, 3), len(verts))
    uniq, counts = np.unique(fk, return_counts=True)
    surface_keys = uniq[counts == 1]
    k1 = surface_keys // (len(verts) ** 2)
    rem = surface_keys % (len(verts) ** 2)
    tris = np.column_stack([k1, rem // len(verts), rem % len(verts)])

    z_tri = verts[tris, 2]
    bottom = np.all(z_tri == 0.0, axis=1)
    top = np.all(z_tri == length, axis=1)
    tri_tags = np.full(len(tris), ROD_LATERAL_TAG, dtype=np.int64)
    tri_tags[bottom] = ROD_BOTTOM_TAG
    tri_tags[top] = ROD_TOP_TAG

    return Mesh(verts, tets, np.full(len(tets), ROD_CONDUCTOR_TAG, dtype=np.int64),
                tris, tri_tags)


def rod_region_map(n_terminals: int = 2) -> RegionMap:
    """RegionMap matching generate_rod_mesh tags.

    n_terminals = 2: caps only (top drives, bottom grounds).
    n_terminals = 3: additionally expects a lateral band retagged to 13 via
    retag_boundary_band (terminal 2), ground stays the bottom cap.
    """
    if n_terminals == 2:
        terminals = (ROD_TOP_TAG, ROD_BOTTOM_TAG)
    elif n_terminals == 3:
        terminals = (ROD_TOP_TAG, 13, ROD_BOTTOM_TAG)
    else:
        raise ValueError(f"rod fixture supports 2 or 3 terminals, got {n_terminals}")
    return RegionMap(
        conductor_tags=frozenset({ROD_CONDUCTOR_TAG}),
        dielectric_tags=frozenset(),
        heater_tags=frozenset({ROD_CONDUCTOR_TAG}),
        outer_tag=ROD_LATERAL_TAG,
        terminal_tags=terminals,
    )


def rod_aspect_bound(length: float, radius: float, n_r: int, n_theta: int,
                     n_z: int) -> float:
    """Documented upper bound on longest/shortest edge over all generated tets."""
    alpha = 2.0 * math.pi / n_theta
    r_eff = radius * math.sqrt(alpha / math.sin(alpha))
    dz = length / n_z
    dr = r_eff / n_r
    c_min = 2.0 * math.sin(alpha / 2.0) * dr
    c_max = 2.0 * math.sin(alpha / 2.0) * r_eff
    return math.sqrt(dz**2 + dr**2 + c_max**2) / min(dz, dr, c_min)


def aspect_ratios(mesh: Mesh) -> np.ndarray:
    """Per-tet longest/shortest edge length ratio."""
    p = mesh.vertices[mesh.tets]
    d = p[:, LOCAL_EDGES[:, 0]] - p[:, LOCAL_EDGES[:, 1]]
    lengths = np.linalg.norm(d, axis=2)
    return lengths.max(axis=1) / lengths.min(axis=1)


def retag_boundary_band(mesh: Mesh, z_lo: float, z_hi: float, old_tag: int,
                        new_tag: int) -> Mesh:
    """New mesh with old_tag boundary tris lying entirely in [z_lo, z_hi] retagged.

    Used to carve an extra terminal out of the rod's lateral surface.
    """
    z = mesh.vertices[mesh.boundary_tris, 2]
    inside = np.all((z >= z_lo) & (z <= z_hi), axis=1) & (mesh.tri_tags == old_tag)
    if not np.any(inside):
        raise MeshError(f"no tag-{old_tag} boundary triangles inside [{z_lo}, {z_hi}]")
    tags = mesh.tri_tags.copy()
    tags[inside] = new_tag
    return Mesh(mesh.vertices, mesh.tets, mesh.tet_tags, mesh.boundary_tris, tags)


def concatenate(a: Mesh, b: Mesh) -> Mesh:
    """Disjoint union of two meshes (b's vertex indices are offset)."""
    off = a.n_vertices
    return Mesh(
        np.vstack([a.vertices, b.vertices]),
        np.vstack([a.tets, b.tets + off]),
        np.concatenate([a.tet_tags, b.tet_tags]),
        np.vstack([a.boundary_tris, b.boundary_tris + off]),
        np.concatenate([a.tri_tags, b.tri_tags]),
    )


def translate(mesh: Mesh, offset) -> Mesh:
    """New mesh rigidly shifted by a 3-vector."""
    return Mesh(mesh.vertices + np.asarray(offset, dtype=np.float64),
                mesh.tets, mesh.tet_tags, mesh.boundary_tris, mesh.tri_tags)


def surface_area(mesh: Mesh, tri_ids: np.ndarray) -> float:
    """Total area of the given boundary triangles."""
    p = mesh.vertices[mesh.boundary_tris[tri_ids]]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return float(np.linalg.norm(cross, axis=1).sum() / 2.0)


# ---------------------------------------------------------------------------
# Domain partitioning.


@dataclass(frozen=True, eq=False)
class DomainPartition:
    """Mesh split into the model's regions.

    conductor/dielectric/heater tet ids; outer and per-terminal boundary
    triangle ids; the residual conductor boundary (conductor faces carrying
    the natural no-current condition, i.e. all of the conductor surface
    except terminals) as vertex triples; conductor connectivity by shared
    faces, with a has-terminal flag and per-terminal component id.
    """

    mesh: Mesh
    region_map: RegionMap
    conductor_tets: np.ndarray
    dielectric_tets: np.ndarray
    heater_tets: np.ndarray
    outer_tris: np.ndarray
    terminal_tris: tuple[np.ndarray, ...]
    residual_conductor_faces: np.ndarray
    n_components: int
    tet_component: np.ndarray  # full-length; -1 on dielectric tets
    component_has_terminal: np.ndarray
    terminal_component: np.ndarray
    conductor_nodes: np.ndarray
    terminal_nodes: tuple[np.ndarray, ...]

    @property
    def n_terminals(self) -> int:
        return len(self.terminal_tris)


def partition(mesh: Mesh, region_map: RegionMap) -> DomainPartition:
    """Classify tets and boundary faces by role and compute conductor
    connectivity (face adjacency)."""
    tags = mesh.tet_tags
    unknown = sorted(set(np.unique(tags).tolist()) - set(region_map.volume_tags))
    if unknown:
        raise MeshError(f"volume tag {unknown[0]} not in region_map")
    unknown_s = sorted(set(np.unique(mesh.tri_tags).tolist()) - set(region_map.surface_tags))
    if unknown_s:
        raise MeshError(f"surface tag {unknown_s[0]} not in region_map")

    cond_mask = np.isin(tags, list(region_map.conductor_tags))
    conductor_tets = np.flatnonzero(cond_mask)
    dielectric_tets = np.flatnonzero(~cond_mask)
    heater_tets = np.flatnonzero(np.isin(tags, list(region_map.heater_tags)))

    outer_tris = np.flatnonzero(mesh.tri_tags == region_map.outer_tag)
    terminal_tris = tuple(
        np.flatnonzero(mesh.tri_tags == t) for t in region_map.terminal_tags
    )

    # owner tet of every boundary face
    nv = mesh.n_vertices
    fk = _face_keys(mesh.tets[:, LOCAL_FACES].reshape(-1, 3), nv)
    owner = np.repeat(np.arange(mesh.n_tets), 4)
    order = np.argsort(fk, kind="stable")
    fk_sorted, owner_sorted = fk[order], owner[order]
    bk = _face_keys(mesh.boundary_tris, nv)
    tri_owner = owner_sorted[np.searchsorted(fk_sorted, bk)]

    for k, tris_k in enumerate(terminal_tris):
        if len(tris_k) == 0:
            raise MeshError(f"terminal {k + 1} (tag {region_map.terminal_tags[k]}) "
                            "has no boundary triangles")
        if not np.all(cond_mask[tri_owner[tris_k]]):
            raise MeshError(f"terminal {k + 1} surface is adjacent to a dielectric tet")

    terminal_nodes = tuple(
        np.unique(mesh.boundary_tris[tris_k]) for tris_k in terminal_tris
    )
    for i in range(len(terminal_nodes)):
        for j in range(i + 1, len(terminal_nodes)):
            if len(np.intersect1d(terminal_nodes[i], terminal_nodes[j])):
                raise MeshError(f"terminal surfaces {i + 1} and {j + 1} overlap")

    conductor_nodes = np.unique(mesh.tets[conductor_tets])

    # conductor components by face adjacency
    tet_component = np.full(mesh.n_tets, -1, dtype=np.int64)
    n_components = 0
    if len(conductor_tets):
        cfk = _face_keys(mesh.tets[conductor_tets][:, LOCAL_FACES].reshape(-1, 3), nv)
        cowner = np.repeat(np.arange(len(conductor_tets)), 4)
        corder = np.argsort(cfk, kind="stable")
        cfk_s, cowner_s = cfk[corder], cowner[corder]
        same = np.flatnonzero(cfk_s[:-1] == cfk_s[1:])
        rows, cols = cowner_s[same], cowner_s[same + 1]
        adj = coo_matrix(
            (np.ones(len(rows)), (rows, cols)),
            shape=(len(conductor_tets), len(conductor_tets)),
        )
        n_components, labels = connected_components(adj, directed=False)
        tet_component[conductor_tets] = labels

        # residual conductor boundary: faces of exactly one conductor tet
        # that are not terminal faces
        uniq_c, counts_c = np.unique(cfk_s, return_counts=True)
        skin = uniq_c[counts_c == 1]
        term_keys = np.concatenate(
            [bk[t] for t in terminal_tris]) if terminal_tris else np.empty(0, np.int64)
        resid_keys = np.setdiff1d(skin, term_keys)
        k1 = resid_keys // (nv * nv)
        rem = resid_keys % (nv * nv)
        residual = np.column_stack([k1, rem // nv, rem % nv])
    else:
        residual = np.empty((0, 3), dtype=np.int64)

    component_has_terminal = np.zeros(n_components, dtype=bool)
    terminal_component = np.empty(len(terminal_tris), dtype=np.int64)
    for k, tris_k in enumerate(terminal_tris):
        comps = np.unique(tet_component[tri_owner[tris_k]])
        if len(comps) != 1:
            raise MeshError(f"terminal {k + 1} touches {len(comps)} conductor components")
        terminal_component[k] = comps[0]
        component_has_terminal[comps[0]] = True

    for arr in (conductor_tets, dielectric_tets, heater_tets, outer_tris,
                residual, tet_component, component_has_terminal,
                terminal_component, conductor_nodes):
        arr.setflags(write=False)
    return DomainPartition(
        mesh=mesh,
        region_map=region_map,
        conductor_tets=conductor_tets,
        dielectric_tets=dielectric_tets,
        heater_tets=heater_tets,
        outer_tris=outer_tris,
        terminal_tris=terminal_tris,
        residual_conductor_faces=residual,
        n_components=n_components,
        tet_component=tet_component,
        component_has_terminal=component_has_terminal,
        terminal_component=terminal_component,
        conductor_nodes=conductor_nodes,
        terminal_nodes=terminal_nodes,
    )
