import numpy as np
import pytest
import scipy.sparse as sp

from schres.errors import DimensionError, SingularError
from schres.linalg import inverse_iteration, lu_factor, norm_inf, solve


def random_sparse(rng, n, density=0.02, dominant=True):
    m = sp.random(n, n, density=density, random_state=np.random.RandomState(1),
                  format="csr", dtype=float)
    m = m.astype(complex) + 1j * sp.random(
        n, n, density=density, random_state=np.random.RandomState(2), format="csr")
    if dominant:
        m = m + sp.diags(np.full(n, n * 0.5 + 0j))
    return m.tocsr()


class TestFactor:
    def test_identity(self):
        fact = lu_factor(sp.eye(5, dtype=complex, format="csr"))
        b = np.arange(5) + 1j
        assert np.allclose(fact.solve(b), b, rtol=0, atol=0)

    def test_permutation_pivoting(self):
        a = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex))
        fact = lu_factor(a)
        x = fact.solve(np.array([1.0, 2.0], dtype=complex))
        assert np.allclose(x, [2.0, 1.0])

    def test_random_sparse_residual(self):
        rng = np.random.default_rng(0)
        a = random_sparse(rng, 500)
        fact = lu_factor(a)
        b = rng.standard_normal(500) + 1j * rng.standard_normal(500)
        x, resid = fact.solve_checked(b)
        assert resid <= 1e-12

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(1)
        n = 200
        a = random_sparse(rng, n, density=0.05)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x = solve(lu_factor(a), b)
        x_dense = np.linalg.solve(a.toarray(), b)
        assert np.linalg.norm(x - x_dense) <= 1e-10 * np.linalg.norm(x_dense)

    def test_diagonal(self):
        d = np.array([2.0, 1j, -3.0 + 1j])
        fact = lu_factor(sp.diags(d).tocsr())
        b = np.array([2.0, 2.0, 2.0], dtype=complex)
        assert np.allclose(fact.solve(b), b / d)

    def test_singular_raises(self):
        a = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]], dtype=complex))
        with pytest.raises(SingularError):
            lu_factor(a)

    def test_dimension_mismatch(self):
        fact = lu_factor(sp.eye(4, dtype=complex, format="csr"))
        with pytest.raises(DimensionError):
            fact.solve(np.ones(5, dtype=complex))


class TestInverseIteration:
    def test_diagonal(self):
        a = sp.diags(np.array([3.0, 1e-6, 2.0], dtype=complex)).tocsr()
        res = inverse_iteration(a, tol=1e-12, seed=3)
        assert res.converged
        assert abs(res.value - 1e-6) < 1e-9
        assert abs(abs(res.vector[1]) - 1.0) < 1e-6

    def test_matches_dense_eigensolver(self):
        rng = np.random.default_rng(5)
        h = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
        h = h + h.conj().T
        a = sp.csr_matrix(h)
        res = inverse_iteration(a, tol=1e-12, seed=1)
        eigvals = np.linalg.eigvalsh(h)
        smallest = eigvals[np.argmin(np.abs(eigvals))]
        assert res.converged
        assert abs(res.value - smallest) < 1e-8 * max(abs(smallest), 1.0)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(7)
        a = random_sparse(rng, 80, density=0.1)
        r1 = inverse_iteration(a, seed=11)
        r2 = inverse_iteration(a, seed=11)
        assert r1.iterations == r2.iterations
        assert r1.value == r2.value
        assert np.array_equal(r1.vector, r2.vector)

    def test_unit_norm_and_residual_contract(self):
        # spread spectrum with an isolated smallest eigenvalue, the regime
        # inverse iteration is used in (F(k) near a resonance)
        rng = np.random.default_rng(9)
        n = 120
        d = rng.uniform(0.5, 10, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        d[17] = 1e-5 * (1.0 - 0.4j)
        noise = sp.random(n, n, density=0.03, random_state=np.random.RandomState(3),
                          format="csr").astype(complex) * 1e-6
        a = (sp.diags(d) + noise).tocsr()
        res = inverse_iteration(a, tol=1e-10, seed=2)
        assert res.converged
        assert abs(np.linalg.norm(res.vector) - 1.0) < 1e-12
        assert res.residual <= 1e-10 * norm_inf(a)
