import numpy as np
import pytest

from schres.errors import ParamError
from schres.mesh import (
    Mesh,
    export_text,
    generate_disk_mesh,
    import_text,
    mesh_at_level,
    mesh_stats,
    refine,
    triangle_areas,
    validate_mesh,
)


class TestGenerate:
    def test_coarse_mesh_invariants(self):
        mesh = generate_disk_mesh(1.0, 0.5)
        assert mesh.n_triangles >= 4
        validate_mesh(mesh)

    def test_target_h_hit(self):
        mesh = generate_disk_mesh(1.0, 0.05)
        assert mesh.h <= 0.075
        assert mesh.n_triangles >= 2000
        validate_mesh(mesh)

    def test_boundary_on_circle(self):
        mesh = generate_disk_mesh(2.0, 0.1)
        r = np.hypot(*mesh.vertices[mesh.boundary_loop].T)
        assert np.max(np.abs(r - 2.0)) <= 1e-12 * 2.0

    def test_bad_target(self):
        with pytest.raises(ParamError):
            generate_disk_mesh(1.0, 0.0)
        with pytest.raises(ParamError):
            generate_disk_mesh(1.0, 2.0)


class TestRefine:
    def test_counts(self):
        mesh = generate_disk_mesh(1.0, 0.3)
        fine = refine(mesh)
        assert fine.n_triangles == 4 * mesh.n_triangles
        # V' = V + E with E from Euler: E = V + T - 1
        n_edges = mesh.n_vertices + mesh.n_triangles - 1
        assert fine.n_vertices == mesh.n_vertices + n_edges
        validate_mesh(fine)

    def test_h_roughly_halves(self):
        mesh = generate_disk_mesh(1.0, 0.2)
        fine = refine(mesh)
        assert 0.45 * mesh.h <= fine.h <= 0.55 * mesh.h

    def test_parent_vertices_stable(self):
        mesh = generate_disk_mesh(1.0, 0.3)
        fine = refine(mesh)
        assert np.allclose(fine.vertices[: mesh.n_vertices], mesh.vertices)

    def test_area_second_order(self):
        # inscribed-polygon area converges to pi at O(h^2)
        mesh = generate_disk_mesh(1.0, 0.4)
        errs = []
        hs = []
        for _ in range(5):
            errs.append(abs(np.sum(triangle_areas(mesh.vertices, mesh.triangles)) - np.pi))
            hs.append(mesh.h)
            mesh = refine(mesh)
        fitted_c = [e / h ** 2 for e, h in zip(errs, hs)]
        assert max(fitted_c) / min(fitted_c) < 1.5

    def test_conformity(self):
        from schres.mesh import _unique_edges

        mesh = refine(generate_disk_mesh(1.0, 0.35))
        edges, tri_edge = _unique_edges(mesh.triangles)
        counts = np.bincount(tri_edge.ravel(), minlength=len(edges))
        assert set(np.unique(counts)) <= {1, 2}
        assert np.sum(counts == 1) == mesh.n_boundary


class TestAngularData:
    def test_partition_of_circle(self):
        mesh = mesh_at_level(1.0, 0.3, 2)
        gaps = np.diff(mesh.boundary_angles)
        assert np.all(gaps > 0)
        assert np.all(gaps <= np.pi / 4 + 1e-12)
        assert abs(np.sum(gaps) - 2 * np.pi) < 1e-12

    def test_angles_match_coordinates(self):
        mesh = mesh_at_level(1.0, 0.3, 3)
        xy = mesh.vertices[mesh.boundary_loop]
        theta = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2 * np.pi)
        assert np.allclose(theta, mesh.boundary_angles[:-1])


class TestStats:
    def test_equilateral_reference(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
        tris = np.array([[0, 1, 2]])
        mesh = Mesh(1.0, 1, verts, tris, np.array([0, 1, 2]),
                    np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3, 2 * np.pi]))
        stats = mesh_stats(mesh)
        assert abs(stats["min_angle"] - np.pi / 3) < 1e-12

    def test_min_angle_stable_under_refinement(self):
        mesh = generate_disk_mesh(1.0, 0.3)
        prev = mesh_stats(mesh)["min_angle"]
        for _ in range(4):
            mesh = refine(mesh)
            cur = mesh_stats(mesh)["min_angle"]
            assert cur >= 0.8 * prev
            prev = cur

    def test_vertex_recurrence_level5(self):
        mesh = generate_disk_mesh(1.0, 0.4)
        for _ in range(4):
            n_edges = mesh.n_vertices + mesh.n_triangles - 1
            fine = refine(mesh)
            assert fine.n_vertices == mesh.n_vertices + n_edges
            mesh = fine
        assert mesh.level == 5


class TestExport:
    def test_round_trip(self):
        mesh = mesh_at_level(1.5, 0.4, 2)
        back = import_text(export_text(mesh))
        assert np.array_equal(back.triangles, mesh.triangles)
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.boundary_loop, mesh.boundary_loop)
        assert np.allclose(back.boundary_angles, mesh.boundary_angles, rtol=0, atol=0)
        assert back.h == mesh.h
        validate_mesh(back)
