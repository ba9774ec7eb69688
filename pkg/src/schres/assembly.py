"""Linear-Lagrange FEM operators on the disk and the DtN closure.

Builds the stiffness, mass and potential matrices, the boundary Fourier
mode vectors c_n, s_n (hat-function traces integrated against cos/sin in
the polar angle, closed form per edge), and materializes

    F(k) = S + M_V - k^2 M - E(k),
    E(k) = sum'_n  R (k/pi) (H'_n/H_n)(kR) (c_n c_n^T + s_n s_n^T),

where the primed sum halves the n = 0 term and the factor R comes from
ds = R dtheta in the boundary pairing.  E(k) is kept as (coefficients,
shared modes) and only scattered into the sparse matrix on demand; the
per-k work is a handful of Hankel ratios plus a rank-(2N+1) update.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ParamError
from .mesh import Mesh, triangle_areas
from .potential import PotentialSpec, eval_potential_grid
from .specfun import dtn_symbols

DEFAULT_TRUNCATION = 20

# symmetric triangle quadrature rules in barycentric coordinates
_QUAD_3 = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.array([1.0, 1.0, 1.0]) / 3.0,
)
_A1 = (6.0 + np.sqrt(15.0)) / 21.0
_A2 = (6.0 - np.sqrt(15.0)) / 21.0
_W1 = (155.0 + np.sqrt(15.0)) / 1200.0
_W2 = (155.0 - np.sqrt(15.0)) / 1200.0
_QUAD_7 = (
    np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
        [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
    ]),
    np.array([9 / 40, _W1, _W1, _W1, _W2, _W2, _W2]),
)


def _accumulate(mesh, local):
    """Scatter per-triangle 3x3 blocks into a CSR matrix."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)),
                        shape=(mesh.n_vertices, mesh.n_vertices))
    return mat.tocsr()


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """S_ij = integral grad(phi_j) . grad(phi_i); exact per-element formula."""
    v = mesh.vertices
    tri = mesh.triangles
    # e_i = edge opposite corner i; S_local[i, j] = (e_i . e_j) / (4A)
    e = np.stack([v[tri[:, 2]] - v[tri[:, 1]],
                  v[tri[:, 0]] - v[tri[:, 2]],
                  v[tri[:, 1]] - v[tri[:, 0]]], axis=1)
    areas = triangle_areas(v, tri)
    local = np.einsum("tid,tjd->tij", e, e) / (4.0 * areas)[:, None, None]
    return _accumulate(mesh, local.astype(complex))


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    """M_ij = integral phi_j phi_i; local (A/12) [[2,1,1],[1,2,1],[1,1,2]]."""
    areas = triangle_areas(mesh.vertices, mesh.triangles)
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = areas[:, None, None] * base[None, :, :]
    return _accumulate(mesh, local.astype(complex))


def assemble_potential(mesh: Mesh, spec: PotentialSpec, quad_order: int = 7) -> sp.csr_matrix:
    """M_V,ij = integral V phi_j phi_i via a symmetric triangle rule."""
    if quad_order == 3:
        bary, weights = _QUAD_3
    elif quad_order == 7:
        bary, weights = _QUAD_7
    else:
        raise ParamError(f"quad_order must be 3 or 7, got {quad_order}")
    v = mesh.vertices
    tri = mesh.triangles
    corners = v[tri]                                # (T, 3, 2)
    points = np.einsum("qc,tcd->tqd", bary, corners)  # (T, Q, 2)
    vals = eval_potential_grid(spec, points[..., 0].ravel(), points[..., 1].ravel())
    vals = vals.reshape(points.shape[:2])           # (T, Q)
    areas = triangle_areas(v, tri)
    local = np.einsum("tq,q,qi,qj->tij", vals, weights, bary, bary)
    local *= areas[:, None, None]
    return _accumulate(mesh, local)


@dataclass(frozen=True)
class BoundaryModes:
    """Fourier moments of the boundary hat functions.

    cos_modes[n, i] = integral of hat_{loop[i]}(theta) cos(n theta) dtheta,
    sin_modes likewise (row 0 is identically zero).  Stored restricted to
    the boundary loop; expand with .vector().
    """

    order: int
    radius: float
    n_vertices: int
    boundary_loop: np.ndarray
    cos_modes: np.ndarray
    sin_modes: np.ndarray

    def vector(self, n: int, kind: str) -> np.ndarray:
        src = self.cos_modes if kind == "cos" else self.sin_modes
        out = np.zeros(self.n_vertices)
        out[self.boundary_loop] = src[n]
        return out

    def stacked(self) -> np.ndarray:
        """Rows c_0..c_N, s_1..s_N restricted to the boundary; (2N+1, K)."""
        return np.vstack([self.cos_modes, self.sin_modes[1:]])


def assemble_boundary_modes(mesh: Mesh, order: int = DEFAULT_TRUNCATION) -> BoundaryModes:
    """Closed-form edge integrals, treating hat traces as linear in theta."""
    if order < 0:
        raise ParamError("truncation order must be >= 0")
    ta = mesh.boundary_angles[:-1]
    tb = mesh.boundary_angles[1:]
    width = tb - ta
    k = mesh.n_boundary
    cos_modes = np.zeros((order + 1, k))
    sin_modes = np.zeros((order + 1, k))
    nxt = np.roll(np.arange(k), -1)  # edge i joins loop position i to nxt[i]
    cos_modes[0] += 0.5 * width
    cos_modes[0, nxt] += 0.5 * width
    for n in range(1, order + 1):
        sa, ca = np.sin(n * ta), np.cos(n * ta)
        sb, cb = np.sin(n * tb), np.cos(n * tb)
        dc = (cb - ca) / (n * n * width)
        ds = (sb - sa) / (n * n * width)
        cos_modes[n] += -sa / n - dc
        cos_modes[n, nxt] += sb / n + dc
        sin_modes[n] += ca / n - ds
        sin_modes[n, nxt] += -cb / n + ds
    return BoundaryModes(order, mesh.radius, mesh.n_vertices,
                         mesh.boundary_loop.copy(), cos_modes, sin_modes)


@dataclass(frozen=True)
class OperatorBundle:
    """Everything k-independent about the discretized problem."""

    mesh: Mesh
    radius: float
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    potential: sp.csr_matrix
    modes: BoundaryModes
    base: sp.csr_matrix        # stiffness + potential, shared across k
    mode_rows: np.ndarray      # (2N+1, K) stacked boundary-mode table

    @property
    def dimension(self):
        return self.mesh.n_vertices

    def dtn_coefficients(self, k: complex) -> np.ndarray:
        """Row coefficients of E(k) for stacked() rows, n=0 halved, R included."""
        sym = dtn_symbols(self.modes.order, k, self.radius)
        gamma = self.radius * sym
        gamma[0] *= 0.5
        return np.concatenate([gamma, gamma[1:]])

    def boundary_block(self, k: complex) -> np.ndarray:
        """Dense E(k) restricted to boundary vertices."""
        gamma = self.dtn_coefficients(k)
        return (self.mode_rows.T * gamma) @ self.mode_rows

    def sparse_without_dtn(self, k: complex) -> sp.csr_matrix:
        return (self.base - k * k * self.mass).tocsr()


def build_bundle(mesh: Mesh, spec: PotentialSpec, order: int = DEFAULT_TRUNCATION,
                 quad_order: int = 7) -> OperatorBundle:
    if spec.support_radius > mesh.radius + 1e-9:
        raise ParamError(
            f"potential support radius {spec.support_radius} exceeds mesh radius {mesh.radius}")
    stiffness = assemble_stiffness(mesh)
    mass = assemble_mass(mesh)
    potential = assemble_potential(mesh, spec, quad_order)
    modes = assemble_boundary_modes(mesh, order)
    base = (stiffness + potential).tocsr()
    return OperatorBundle(mesh, mesh.radius, stiffness, mass, potential,
                          modes, base, modes.stacked())


def assemble_F(bundle: OperatorBundle, k: complex) -> sp.csr_matrix:
    """Materialize F(k) = S + M_V - k^2 M - E(k) as one sparse matrix."""
    if k == 0:
        raise ParamError("k = 0 is outside the resonance search domain")
    block = bundle.boundary_block(k)
    loop = bundle.modes.boundary_loop
    kk = len(loop)
    e_mat = sp.coo_matrix(
        (block.ravel(), (np.repeat(loop, kk), np.tile(loop, kk))),
        shape=(bundle.dimension, bundle.dimension))
    return (bundle.sparse_without_dtn(k) - e_mat.tocsr()).tocsr()


def export_matrix_coo(matrix: sp.spmatrix) -> str:
    """Debug dump, one 'row col re im' line per stored entry."""
    coo = matrix.tocoo()
    lines = [f"{r} {c} {float(v.real)!r} {float(v.imag)!r}"
             for r, c, v in zip(coo.row, coo.col, coo.data)]
    return "\n".join(lines) + "\n"
