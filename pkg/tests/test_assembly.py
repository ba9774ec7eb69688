import numpy as np
import pytest
import scipy.sparse as sp

from schres.assembly import (
    assemble_F,
    assemble_boundary_modes,
    assemble_mass,
    assemble_potential,
    assemble_stiffness,
    build_bundle,
    export_matrix_coo,
)
from schres.errors import ParamError
from schres.mesh import Mesh, generate_disk_mesh, mesh_at_level, refine, triangle_areas
from schres.potential import parse_potential
from schres.specfun import hankel1_seq

EX4 = "support 1\npiece disk(0,0;1): exp(1/(r^2-2)) + i*exp(1/(r^2-4))\n"
FREE = "support 1\n"
CONST2 = "support 1\npiece disk(0,0;1): 2\n"


def unit_right_triangle():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2]])
    return Mesh(1.0, 1, verts, tris, np.array([0, 1, 2]),
                np.array([0.0, np.pi / 2, np.pi, 2 * np.pi]))


class TestStiffness:
    def test_reference_element(self):
        s = assemble_stiffness(unit_right_triangle()).toarray().real
        want = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
        assert np.allclose(s, want, atol=1e-14)

    def test_constants_in_kernel(self):
        mesh = mesh_at_level(1.0, 0.3, 2)
        s = assemble_stiffness(mesh)
        ones = np.ones(mesh.n_vertices)
        from schres.linalg import norm_inf
        assert np.max(np.abs(s @ ones)) <= 1e-12 * norm_inf(s)

    def test_dirichlet_energy_of_x(self):
        # integral |grad x|^2 over the mesh polygon equals its area
        mesh = mesh_at_level(1.0, 0.3, 2)
        s = assemble_stiffness(mesh)
        u = mesh.vertices[:, 0].astype(complex)
        area = np.sum(triangle_areas(mesh.vertices, mesh.triangles))
        assert abs((u @ (s @ u)).real - area) < 1e-10

    def test_symmetry(self):
        mesh = generate_disk_mesh(1.0, 0.4)
        s = assemble_stiffness(mesh)
        assert (s - s.T).nnz == 0 or np.max(np.abs((s - s.T).data)) < 1e-14


class TestMass:
    def test_single_triangle_sum(self):
        m = assemble_mass(unit_right_triangle()).toarray().real
        assert abs(m.sum() - 0.5) < 1e-14

    def test_total_mass_converges_to_area(self):
        mesh = generate_disk_mesh(1.0, 0.4)
        errs = []
        for _ in range(3):
            m = assemble_mass(mesh)
            errs.append(abs(m.sum().real - np.pi))
            mesh = refine(mesh)
        assert errs[1] < 0.3 * errs[0] and errs[2] < 0.3 * errs[1]

    def test_positive_definite(self):
        from schres.linalg import lu_factor

        mesh = generate_disk_mesh(1.0, 0.4)
        m = assemble_mass(mesh)
        # SPD: Cholesky-like check via quadratic forms on random vectors
        rng = np.random.default_rng(0)
        for _ in range(5):
            v = rng.standard_normal(mesh.n_vertices)
            assert (v @ (m @ v)).real > 0
        lu_factor(m)  # factorization must succeed


class TestPotentialMatrix:
    def test_constant_potential_is_scaled_mass(self):
        mesh = mesh_at_level(1.0, 0.3, 2)
        spec = parse_potential(CONST2)
        for order in (3, 7):
            mv = assemble_potential(mesh, spec, order)
            m = assemble_mass(mesh)
            diff = (mv - 2.0 * m).tocoo()
            assert np.max(np.abs(diff.data)) < 1e-12 if diff.nnz else True

    def test_zero_potential(self):
        mesh = generate_disk_mesh(1.0, 0.4)
        mv = assemble_potential(mesh, parse_potential(FREE))
        assert mv.nnz == 0 or np.max(np.abs(mv.data)) == 0.0

    def test_example4_integral_richardson(self):
        spec = parse_potential(EX4)
        mesh = generate_disk_mesh(1.0, 0.2)
        totals = []
        for _ in range(3):
            mv = assemble_potential(mesh, spec)
            ones = np.ones(mesh.n_vertices)
            totals.append(ones @ (mv @ ones))
            mesh = refine(mesh)
        # successive differences shrink ~4x for the smooth complex potential
        d1 = abs(totals[1] - totals[0])
        d2 = abs(totals[2] - totals[1])
        assert d2 < 0.35 * d1

    def test_bad_quad_order(self):
        with pytest.raises(ParamError):
            assemble_potential(generate_disk_mesh(1.0, 0.4), parse_potential(CONST2), 5)


class TestBoundaryModes:
    def test_partition_of_unity(self):
        mesh = mesh_at_level(1.0, 0.3, 2)
        modes = assemble_boundary_modes(mesh, 6)
        assert abs(np.sum(modes.cos_modes[0]) - 2 * np.pi) < 1e-12
        assert np.all(modes.sin_modes[0] == 0.0)

    def test_full_period_integrals_vanish(self):
        mesh = mesh_at_level(1.0, 0.3, 2)
        modes = assemble_boundary_modes(mesh, 8)
        for n in range(1, 9):
            assert abs(np.sum(modes.cos_modes[n])) < 1e-12
            assert abs(np.sum(modes.sin_modes[n])) < 1e-12

    def test_against_brute_force_quadrature(self):
        mesh = generate_disk_mesh(1.0, 0.3)
        modes = assemble_boundary_modes(mesh, 5)
        angles = mesh.boundary_angles
        k = mesh.n_boundary
        # dense trapezoid quadrature of hat_i(theta) cos(n theta)
        for pos in (0, 3, k - 1):
            lo, hi = angles[pos - 1] if pos > 0 else angles[k - 1] - 2 * np.pi, angles[pos + 1]
            mid = angles[pos]
            t1 = np.linspace(lo, mid, 20001)
            t2 = np.linspace(mid, hi, 20001)
            hat1 = (t1 - lo) / (mid - lo)
            hat2 = (hi - t2) / (hi - mid)
            for n in (1, 4):
                brute = np.trapezoid(hat1 * np.cos(n * t1), t1) + np.trapezoid(
                    hat2 * np.cos(n * t2), t2)
                assert abs(modes.cos_modes[n][pos] - brute) < 1e-8
                brute_s = np.trapezoid(hat1 * np.sin(n * t1), t1) + np.trapezoid(
                    hat2 * np.sin(n * t2), t2)
                assert abs(modes.sin_modes[n][pos] - brute_s) < 1e-8

    def test_mode_near_orthogonality(self):
        # |c_n^T W^-1 c_m| <= C h^2 |c_n| |c_m| with W the 1D boundary mass;
        # our boundary grids are equiangular, so the modes are orthogonal to
        # machine precision at every level (stronger than the h^2 bound)
        mesh = generate_disk_mesh(1.0, 0.3)
        for _ in range(3):
            modes = assemble_boundary_modes(mesh, 6)
            k = mesh.n_boundary
            width = np.diff(mesh.boundary_angles)
            nxt = np.roll(np.arange(k), -1)
            w = sp.lil_matrix((k, k))
            for i in range(k):
                d = width[i]
                w[i, i] += d / 3
                w[nxt[i], nxt[i]] += d / 3
                w[i, nxt[i]] += d / 6
                w[nxt[i], i] += d / 6
            winv_c3 = np.linalg.solve(w.toarray(), modes.cos_modes[3])
            num = abs(modes.cos_modes[5] @ winv_c3)
            den = np.linalg.norm(modes.cos_modes[5]) * np.linalg.norm(modes.cos_modes[3])
            assert num / den < 1e-12
            mesh = refine(mesh)


class TestOperatorF:
    def setup_method(self):
        self.mesh = mesh_at_level(1.0, 0.3, 2)
        self.bundle = build_bundle(self.mesh, parse_potential(CONST2), order=8)

    def test_symmetric(self):
        f = assemble_F(self.bundle, 1.5 - 1.0j)
        diff = (f - f.T).tocoo()
        assert diff.nnz == 0 or np.max(np.abs(diff.data)) < 1e-13

    def test_dtn_block_rank(self):
        n = 8
        block = self.bundle.boundary_block(2.0 - 1.0j)
        rank = np.linalg.matrix_rank(block, tol=1e-11 * np.linalg.norm(block, 2))
        assert rank <= 2 * n + 1

    def test_interior_rows_untouched(self):
        f = assemble_F(self.bundle, 1.5 - 1.0j)
        a = self.bundle.sparse_without_dtn(1.5 - 1.0j)
        diff = abs(f - a).tocsr()
        interior = np.setdiff1d(np.arange(self.bundle.dimension),
                                self.bundle.modes.boundary_loop)
        assert diff[interior].nnz == 0

    def test_holomorphy_proxy(self):
        # v^T F(k) u obeys Cauchy-Riemann at random k away from Hankel zeros
        rng = np.random.default_rng(4)
        u = rng.standard_normal(self.bundle.dimension) + 1j * rng.standard_normal(self.bundle.dimension)
        v = rng.standard_normal(self.bundle.dimension) + 1j * rng.standard_normal(self.bundle.dimension)

        def g(k):
            return v @ (assemble_F(self.bundle, k) @ u)

        for _ in range(20):
            k = complex(rng.uniform(-4, 4), rng.uniform(-4, -0.5))
            eps = 1e-6
            gx = (g(k + eps) - g(k - eps)) / (2 * eps)
            gy = (g(k + 1j * eps) - g(k - 1j * eps)) / (2 * eps)
            dbar = 0.5 * (gx + 1j * gy)
            assert abs(dbar) <= 1e-6 * max(abs(gx), 1.0)

    def test_outgoing_mode_residual_trend(self):
        # V = 0: F(k) applied to the interpolant of H_0(kr) leaves a residual
        # (tested away from the r = 0 log singularity) that shrinks with h
        k = 1.0 - 0.8j
        resid = []
        mesh = generate_disk_mesh(1.0, 0.3)
        for _ in range(3):
            bundle = build_bundle(mesh, parse_potential(FREE), order=12)
            r = np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1])
            u = np.zeros(mesh.n_vertices, dtype=complex)
            for i, ri in enumerate(r):
                u[i] = hankel1_seq(0, k * max(ri, 1e-8))[0] if ri > 0 else 0.0
            f = assemble_F(bundle, k)
            res = f @ u
            keep = r >= 0.35
            resid.append(np.linalg.norm(res[keep]))
            mesh = refine(mesh)
        assert resid[1] < 0.75 * resid[0]
        assert resid[2] < 0.75 * resid[1]

    def test_coo_export_parses(self):
        f = assemble_F(self.bundle, 1.0 - 1.0j)
        text = export_matrix_coo(f)
        first = text.splitlines()[0].split()
        assert len(first) == 4
        int(first[0]), int(first[1]), float(first[2]), float(first[3])
