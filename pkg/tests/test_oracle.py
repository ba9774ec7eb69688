import numpy as np
import pytest

from schres.errors import DomainError, ParamError
from schres.oracle import (
    DiskProblem,
    Rectangle,
    contour_map,
    d_n,
    d_n_grid,
    map_csv,
    oracle_roots,
    roots_csv,
)

THETA = Rectangle(-4.0, 4.0, -4.0, -0.5)
PAPER_K1 = -0.846466 - 1.337685j
PAPER_K2 = 0.698717 - 2.337097j


def free_identity_target(n, k):
    # with the principal branch w = sqrt(k^2) equals -k on Re k < 0,
    # which flips d_n by (-1)^n; the Wronskian value is 2i/pi either way
    w = np.sqrt(complex(k) ** 2)
    sign = 1.0 if abs(w - k) < abs(w + k) else (-1.0) ** n
    return sign * 2j / np.pi


class TestDeterminant:
    def test_free_potential_collapses(self):
        prob = DiskProblem(1.0, 0.0, 10)
        rng = np.random.default_rng(0)
        for _ in range(100):
            k = complex(rng.uniform(-4, 4), rng.uniform(-4, -0.5))
            n = int(rng.integers(0, 11))
            val = d_n(prob, n, k)
            assert abs(val - free_identity_target(n, k)) < 1e-10 * (2 / np.pi)

    def test_branch_invariance_of_magnitude(self):
        # replacing w by -w multiplies d_n by (-1)^n only; check |d_n|
        # against an explicit minus-branch evaluation
        from schres.specfun import bessel_j_table, hankel1_table

        prob = DiskProblem(1.0, 2.0 + 0.5j, 10)
        rng = np.random.default_rng(1)
        for _ in range(200):
            k = complex(rng.uniform(-4, 4), rng.uniform(-4, -0.3))
            n = int(rng.integers(0, 11))
            w = np.sqrt(k * k - prob.v0)
            j = bessel_j_table(n + 1, -w * prob.r0)
            h = hankel1_table(n + 1, k * prob.r0)
            other = -w * j[n + 1] * h[n] - k * h[n + 1] * j[n]
            mine = d_n(prob, n, k)
            assert abs(abs(mine) - abs(other)) < 1e-12 * max(abs(mine), 1e-30)

    def test_known_zero_exists(self):
        prob = DiskProblem(1.0, 2.0, 10)
        vals = [abs(d_n(prob, n, -0.8465 - 1.3377j)) for n in range(11)]
        assert min(vals) < 2e-3

    def test_zero_k_rejected(self):
        with pytest.raises(DomainError):
            d_n(DiskProblem(1.0, 2.0), 0, 0.0)

    def test_grid_matches_scalar(self):
        prob = DiskProblem(1.0, 2.0 - 1.0j, 5)
        ks = np.array([1 - 1j, -2 - 0.7j, 3.5 - 3.9j])
        grid = d_n_grid(prob, 3, ks)
        for i, k in enumerate(ks):
            assert grid[i] == d_n(prob, 3, complex(k))


class TestRoots:
    def test_example1_paper_values(self):
        roots, dropped = oracle_roots(DiskProblem(1.0, 2.0, 10), THETA)
        ks = [r.k for r in roots]
        for paper in (PAPER_K1, PAPER_K2):
            assert min(abs(k - paper) / abs(paper) for k in ks) < 5e-3

    def test_free_potential_no_roots(self):
        roots, dropped = oracle_roots(DiskProblem(1.0, 0.0, 10), THETA, grid_step=0.1)
        assert roots == []

    def test_roots_verified_and_in_region(self):
        roots, _ = oracle_roots(DiskProblem(1.0, 2.0, 6), THETA)
        for r in roots:
            assert r.residual < 1e-9
            assert THETA.contains(r.k)

    def test_lower_half_plane_and_cross_sheet_symmetry(self):
        # real V0: every root sits strictly below the real axis, and the
        # mirror -conj(k) is a resonance one sheet away (even-dimensional
        # scattering pairs k <-> -conj(k) across adjacent sheets of the
        # logarithmic continuation, not within the principal sheet)
        prob = DiskProblem(1.0, 2.0, 10)
        roots, _ = oracle_roots(prob, THETA)
        assert all(r.k.imag < 0 for r in roots)
        for r in roots:
            mirror = -np.conj(r.k)
            scale = abs(d_n(prob, r.order, mirror + 0.3, sheet=1))
            assert abs(d_n(prob, r.order, mirror, sheet=1)) < 1e-8 * scale
            # and the same-sheet determinant does NOT vanish there
            assert abs(d_n(prob, r.order, mirror)) > 0.01

    def test_newton_stability_under_reseed(self):
        from schres.oracle import _newton_polish

        prob = DiskProblem(1.0, 2.0, 10)
        root = _newton_polish(prob, 1, -0.85 - 1.34j)
        again = _newton_polish(prob, 1, root + 1e-3 * (1 + 1j) / np.sqrt(2))
        assert abs(root - again) < 1e-9


class TestContourMap:
    def test_free_map_constant(self):
        re, im, vals = contour_map(DiskProblem(1.0, 0.0, 4), THETA, 16)
        assert vals.shape == (16, 16)
        assert np.max(np.abs(vals - np.log10(2 / np.pi))) < 1e-9

    def test_minima_near_roots(self):
        prob = DiskProblem(1.0, 2.0, 10)
        region = Rectangle(-1.2, -0.5, -1.7, -1.0)
        re, im, vals = contour_map(prob, region, 64)
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        k_min = re[j] + 1j * im[i]
        cell = max(re[1] - re[0], im[1] - im[0])
        assert abs(k_min - PAPER_K1) < 2 * cell

    def test_resolution_validation(self):
        with pytest.raises(ParamError):
            contour_map(DiskProblem(1.0, 2.0), THETA, 8)

    def test_csv_shapes(self):
        re, im, vals = contour_map(DiskProblem(1.0, 0.0, 2), THETA, 16)
        lines = map_csv(re, im, vals).strip().split("\n")
        assert lines[0] == "re, im, value"
        assert len(lines) == 1 + 16 * 16
        roots, _ = oracle_roots(DiskProblem(1.0, 2.0, 3), Rectangle(-1.5, 0, -2, -1))
        text = roots_csv(roots)
        assert text.startswith("n, re, im, residual")
