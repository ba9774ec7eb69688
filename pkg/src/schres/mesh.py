"""Triangular meshes of a disk with boundary-edge angular data.

The coarse mesh is a deterministic fan/ring triangulation: a central
vertex surrounded by concentric rings, ring j holding 6j vertices, which
keeps triangles close to equilateral.  Uniform (red) refinement splits
every triangle into four through the edge midpoints; midpoints of
boundary edges are projected radially back onto the circle, so the
geometric boundary error decreases at second order.  Parent vertices
keep their indices across a refinement.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParamError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation of the disk of the given radius.

    vertices: (V, 2) coordinates; triangles: (T, 3) CCW vertex triples;
    boundary_loop: boundary vertex indices ordered by polar angle;
    boundary_angles: (K+1,) angles with boundary_angles[K] equal to
    boundary_angles[0] + 2*pi, so edge i spans
    [boundary_angles[i], boundary_angles[i+1]].
    """

    radius: float
    level: int
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_loop: np.ndarray
    boundary_angles: np.ndarray
    h: float = field(default=0.0)

    def __post_init__(self):
        if self.h == 0.0:
            object.__setattr__(self, "h", float(longest_edge(self.vertices, self.triangles)))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_boundary(self):
        return len(self.boundary_loop)

    def boundary_edges(self):
        """Edge records (vertex_a, vertex_b, theta_a, theta_b) ordered by theta_a."""
        k = len(self.boundary_loop)
        out = []
        for i in range(k):
            out.append((int(self.boundary_loop[i]),
                        int(self.boundary_loop[(i + 1) % k]),
                        float(self.boundary_angles[i]),
                        float(self.boundary_angles[i + 1])))
        return out


def triangle_areas(vertices, triangles):
    p0 = vertices[triangles[:, 0]]
    a = vertices[triangles[:, 1]] - p0
    b = vertices[triangles[:, 2]] - p0
    return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


def longest_edge(vertices, triangles):
    h = 0.0
    for a, b in ((0, 1), (1, 2), (2, 0)):
        d = vertices[triangles[:, a]] - vertices[triangles[:, b]]
        h = max(h, float(np.max(np.hypot(d[:, 0], d[:, 1]))))
    return h


def _unique_edges(triangles):
    """Sorted unique edges and the per-triangle edge index map.

    Returns (edges (E,2), tri_edge (T,3)) where tri_edge[t, i] is the edge
    opposite corner pattern (01, 12, 20) of triangle t.
    """
    raw = np.concatenate([triangles[:, (0, 1)], triangles[:, (1, 2)], triangles[:, (2, 0)]])
    raw = np.sort(raw, axis=1)
    edges, inverse = np.unique(raw, axis=0, return_inverse=True)
    tri_edge = inverse.reshape(3, -1).T
    return edges, tri_edge


def _boundary_data(vertices, triangles, radius):
    """Order the single-triangle edges of the mesh into the circle loop."""
    edges, tri_edge = _unique_edges(triangles)
    counts = np.bincount(tri_edge.ravel(), minlength=len(edges))
    boundary = edges[counts == 1]
    verts = np.unique(boundary)
    theta = np.mod(np.arctan2(vertices[verts, 1], vertices[verts, 0]), TWO_PI)
    order = np.argsort(theta)
    loop = verts[order]
    angles = np.concatenate([theta[order], [theta[order][0] + TWO_PI]])
    # consecutive-by-angle vertices must be joined by boundary edges
    edge_set = {tuple(e) for e in boundary}
    k = len(loop)
    for i in range(k):
        a, b = int(loop[i]), int(loop[(i + 1) % k])
        if (min(a, b), max(a, b)) not in edge_set:
            raise ParamError("boundary loop is not a single circle")
    return loop, angles


def generate_disk_mesh(radius: float, target_h: float) -> Mesh:
    """Fan/ring triangulation of the disk with mesh size close to target_h."""
    if not (0 < target_h < radius):
        raise ParamError(f"target_h must lie in (0, {radius}), got {target_h}")
    n_rings = max(2, int(np.ceil(radius / target_h - 1e-9)))
    dr = radius / n_rings
    verts = [np.zeros((1, 2))]
    for j in range(1, n_rings + 1):
        ang = TWO_PI * np.arange(6 * j) / (6 * j)
        verts.append(np.column_stack([j * dr * np.cos(ang), j * dr * np.sin(ang)]))
    vertices = np.concatenate(verts)

    def ring_start(j):
        return 1 + 3 * j * (j - 1) if j > 0 else 0

    tris = []
    for m in range(6):  # innermost fan around the center vertex
        tris.append((0, 1 + m, 1 + (m + 1) % 6))
    for j in range(2, n_rings + 1):
        si, so = ring_start(j - 1), ring_start(j)
        ni, no = 6 * (j - 1), 6 * j
        for s in range(6):
            for t in range(j):
                i_t = si + (s * (j - 1) + t) % ni
                o_t = so + (s * j + t) % no
                o_t1 = so + (s * j + t + 1) % no
                tris.append((i_t, o_t, o_t1))
                if t < j - 1:
                    i_t1 = si + (s * (j - 1) + t + 1) % ni
                    tris.append((i_t, o_t1, i_t1))
    triangles = np.array(tris, dtype=np.int64)
    loop, angles = _boundary_data(vertices, triangles, radius)
    mesh = Mesh(radius, 1, vertices, triangles, loop, angles)
    if not (0.5 * target_h <= mesh.h <= 1.5 * target_h):
        raise ParamError(f"achieved h = {mesh.h:.4g} outside [0.5, 1.5] * target_h")
    return mesh


def refine(mesh: Mesh) -> Mesh:
    """Red refinement; boundary-edge midpoints projected back to the circle."""
    tri = mesh.triangles
    edges, tri_edge = _unique_edges(tri)
    counts = np.bincount(tri_edge.ravel(), minlength=len(edges))
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    on_boundary = counts == 1
    norm = np.hypot(mid[on_boundary, 0], mid[on_boundary, 1])
    mid[on_boundary] *= (mesh.radius / norm)[:, None]
    vertices = np.concatenate([mesh.vertices, mid])

    nv = mesh.n_vertices
    m01 = nv + tri_edge[:, 0]
    m12 = nv + tri_edge[:, 1]
    m20 = nv + tri_edge[:, 2]
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    triangles = np.concatenate([
        np.column_stack([v0, m01, m20]),
        np.column_stack([m01, v1, m12]),
        np.column_stack([m20, m12, v2]),
        np.column_stack([m01, m12, m20]),
    ])
    loop, angles = _boundary_data(vertices, triangles, mesh.radius)
    return Mesh(mesh.radius, mesh.level + 1, vertices, triangles, loop, angles)


def mesh_at_level(radius: float, base_h: float, level: int) -> Mesh:
    """Level 1 mesh refined level-1 times (paper-style refinement ladder)."""
    mesh = generate_disk_mesh(radius, base_h)
    for _ in range(level - 1):
        mesh = refine(mesh)
    return mesh


def mesh_stats(mesh: Mesh) -> dict:
    """Basic quality numbers: longest edge, minimum corner angle, counts."""
    p0 = mesh.vertices[mesh.triangles[:, 0]]
    p1 = mesh.vertices[mesh.triangles[:, 1]]
    p2 = mesh.vertices[mesh.triangles[:, 2]]
    min_angle = np.inf
    for a, b, c in ((p0, p1, p2), (p1, p2, p0), (p2, p0, p1)):
        u = b - a
        v = c - a
        cosang = np.sum(u * v, axis=1) / (np.hypot(u[:, 0], u[:, 1]) * np.hypot(v[:, 0], v[:, 1]))
        min_angle = min(min_angle, float(np.min(np.arccos(np.clip(cosang, -1, 1)))))
    return {
        "h": mesh.h,
        "min_angle": min_angle,
        "n_vertices": mesh.n_vertices,
        "n_triangles": mesh.n_triangles,
        "n_boundary": mesh.n_boundary,
    }


def validate_mesh(mesh: Mesh, tol: float = 1e-12):
    """Raise AssertionError when a Mesh invariant is violated."""
    areas = triangle_areas(mesh.vertices, mesh.triangles)
    assert np.all(areas > 0), "non-positive triangle area"
    edges, _ = _unique_edges(mesh.triangles)
    euler = mesh.n_vertices - len(edges) + mesh.n_triangles
    assert euler == 1, f"Euler characteristic {euler} != 1 for a disk"
    r = np.hypot(mesh.vertices[mesh.boundary_loop, 0], mesh.vertices[mesh.boundary_loop, 1])
    assert np.all(np.abs(r - mesh.radius) <= tol * mesh.radius), "boundary vertex off circle"
    gaps = np.diff(mesh.boundary_angles)
    assert np.all(gaps > 0), "boundary angles not strictly increasing"
    assert abs(mesh.boundary_angles[-1] - mesh.boundary_angles[0] - TWO_PI) < 1e-14
    assert np.all(gaps <= np.pi / 4 + 1e-12), "boundary edge angular width > pi/4"


def export_text(mesh: Mesh) -> str:
    """Plain-text dump: header then coordinate/connectivity/boundary records."""
    lines = [f"vertices {mesh.n_vertices} / triangles {mesh.n_triangles} / boundary {mesh.n_boundary}",
             f"radius {mesh.radius!r} level {mesh.level}"]
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r}")
    for a, b, c in mesh.triangles:
        lines.append(f"{a} {b} {c}")
    for a, b, ta, tb in mesh.boundary_edges():
        lines.append(f"{a} {b} {float(ta)!r} {float(tb)!r}")
    return "\n".join(lines) + "\n"


def import_text(text: str) -> Mesh:
    lines = text.strip().split("\n")
    head = lines[0].split()
    nv, nt, nb = int(head[1]), int(head[4]), int(head[7])
    meta = lines[1].split()
    radius, level = float(meta[1]), int(meta[3])
    row = 2
    vertices = np.array([[float(u) for u in ln.split()] for ln in lines[row:row + nv]])
    row += nv
    triangles = np.array([[int(u) for u in ln.split()] for ln in lines[row:row + nt]], dtype=np.int64)
    row += nt
    loop = []
    angles = []
    for ln in lines[row:row + nb]:
        parts = ln.split()
        loop.append(int(parts[0]))
        angles.append(float(parts[2]))
    angles.append(angles[0] + TWO_PI)
    return Mesh(radius, level, vertices, triangles,
                np.array(loop, dtype=np.int64), np.array(angles))
