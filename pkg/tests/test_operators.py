"""Step operator, transformed operator, preconditioner: oracle and structure."""

import math
import time

import numpy as np
import pytest

from fnls import (
    DimensionError,
    Grid,
    build_symbol,
    dft_forward,
    dft_inverse,
    make_preconditioner,
    precond_solve,
    rhs_build,
    step_apply,
    step_operator,
    step_operator_from_density,
    transform_operator,
    transformed_apply,
)
from fnls.operators import jacobi_preconditioner


def dense_step_matrix(op):
    """Column-by-column assembly oracle (N, N) of the step operator."""
    n = op.grid.N
    return np.column_stack([step_apply(op, e) for e in np.eye(n, dtype=complex)])


def random_operator(rng, N=15, dt=None, alpha=None, grid=None):
    g = grid or Grid(L=20.0, N=N)
    u = rng.standard_normal(g.N) + 1j * rng.standard_normal(g.N)
    return step_operator(
        g,
        alpha if alpha is not None else float(rng.uniform(1.01, 2.0)),
        dt if dt is not None else float(rng.uniform(0.001, 10.0)),
        u,
    )


class TestStepApply:
    def test_zero_dt_is_identity(self):
        rng = np.random.default_rng(1)
        g = Grid(L=20.0, N=31)
        u = rng.standard_normal(31) + 1j * rng.standard_normal(31)
        op = step_operator(g, 1.5, 0.0, u)
        v = rng.standard_normal(31) + 1j * rng.standard_normal(31)
        np.testing.assert_allclose(step_apply(op, v), v, atol=1e-15)

    def test_single_mode_with_zero_density(self):
        g = Grid(L=20.0, N=31)
        alpha, dt, k = 1.6, 0.07, 3
        op = step_operator_from_density(g, alpha, dt, np.zeros(31))
        v = np.exp(1j * g.mu * k * g.nodes)
        expected = (1 + 1j * dt * abs(g.mu * k) ** alpha) * v
        np.testing.assert_allclose(step_apply(op, v), expected, rtol=1e-11)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            op = random_operator(rng)
            A = dense_step_matrix(op)
            v = rng.standard_normal(15) + 1j * rng.standard_normal(15)
            np.testing.assert_allclose(
                step_apply(op, v), A @ v, rtol=1e-12, atol=1e-12
            )

    def test_dimension_error(self):
        rng = np.random.default_rng(3)
        op = random_operator(rng)
        with pytest.raises(DimensionError):
            step_apply(op, np.zeros(14))

    def test_negative_density_rejected(self):
        g = Grid(L=20.0, N=15)
        with pytest.raises(ValueError):
            step_operator_from_density(g, 1.5, 0.1, -np.ones(15))


class TestRhs:
    def test_zero_dt(self):
        rng = np.random.default_rng(4)
        g = Grid(L=20.0, N=31)
        op = step_operator_from_density(g, 1.5, 0.0, np.zeros(31))
        u = rng.standard_normal(31) + 1j * rng.standard_normal(31)
        np.testing.assert_allclose(rhs_build(op, u), u, atol=1e-15)

    def test_two_u_minus_au_identity(self):
        rng = np.random.default_rng(5)
        op = random_operator(rng, dt=0.3)
        u = rng.standard_normal(15) + 1j * rng.standard_normal(15)
        lhs = rhs_build(op, u)
        rhs = 2 * u - step_apply(op, u)
        assert np.max(np.abs(lhs - rhs)) < 1e-13 * max(1.0, np.max(np.abs(rhs)))

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(6)
        op = random_operator(rng)
        B = np.column_stack([rhs_build(op, e) for e in np.eye(15, dtype=complex)])
        A = dense_step_matrix(op)
        np.testing.assert_allclose(B, 2 * np.eye(15) - A, rtol=1e-12, atol=1e-12)


class TestTransformed:
    def test_pure_diagonal_when_density_zero(self):
        rng = np.random.default_rng(7)
        g = Grid(L=20.0, N=31)
        dt = 0.12
        op = step_operator_from_density(g, 1.7, dt, np.zeros(31))
        top = transform_operator(op)
        y = rng.standard_normal(31) + 1j * rng.standard_normal(31)
        expected = (1 + 1j * dt * op.symbol.entries) * y
        np.testing.assert_allclose(transformed_apply(top, y), expected, rtol=1e-12)

    def test_similarity_with_original(self):
        rng = np.random.default_rng(8)
        op = random_operator(rng, N=31)
        top = transform_operator(op)
        v = rng.standard_normal(31) + 1j * rng.standard_normal(31)
        lhs = transformed_apply(top, dft_forward(v))
        rhs = dft_forward(step_apply(op, v))
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(rhs)))

    def test_matches_dense_conjugated_oracle(self):
        rng = np.random.default_rng(9)
        op = random_operator(rng)
        n = op.grid.N
        A = dense_step_matrix(op)
        F = np.column_stack([dft_forward(e) for e in np.eye(n, dtype=complex)])
        dense_transformed = F @ A @ np.conj(F).T
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        top = transform_operator(op)
        np.testing.assert_allclose(
            transformed_apply(top, y), dense_transformed @ y, rtol=1e-11, atol=1e-11
        )

    def test_residual_norm_equivalence(self):
        # relative residuals of the original and transformed systems coincide
        rng = np.random.default_rng(10)
        op = random_operator(rng, N=31, dt=0.05)
        top = transform_operator(op)
        u_prev = rng.standard_normal(31) + 1j * rng.standard_normal(31)
        b = rhs_build(op, u_prev)
        b_hat = dft_forward(b)
        for _ in range(20):
            x = rng.standard_normal(31) + 1j * rng.standard_normal(31)
            r_orig = np.linalg.norm(b - step_apply(op, x)) / np.linalg.norm(b)
            y = dft_forward(x)
            r_tran = np.linalg.norm(b_hat - transformed_apply(top, y)) / np.linalg.norm(
                b_hat
            )
            assert abs(r_orig - r_tran) < 1e-12 * max(1.0, r_orig)


class TestPreconditioner:
    def test_zero_dt_identity(self):
        g = Grid(L=20.0, N=31)
        M = make_preconditioner(build_symbol(g, 1.5), 0.0)
        z = np.arange(31, dtype=complex)
        np.testing.assert_allclose(precond_solve(M, z), z, atol=1e-15)

    def test_solve_then_multiply_roundtrip(self):
        rng = np.random.default_rng(11)
        g = Grid(L=20.0, N=31)
        M = make_preconditioner(build_symbol(g, 1.9), 0.37)
        z = rng.standard_normal(31) + 1j * rng.standard_normal(31)
        back = precond_solve(M, z) * M.entries
        assert np.max(np.abs(back - z)) < 1e-15 * max(1.0, np.max(np.abs(z)))

    def test_divisor_values(self):
        g = Grid(L=2 * math.pi, N=5)
        M = make_preconditioner(build_symbol(g, 2.0), 0.1)
        np.testing.assert_allclose(
            M.entries,
            [1.0, 1.0 + 0.1j, 1.0 + 0.4j, 1.0 + 0.4j, 1.0 + 0.1j],
            rtol=1e-14,
        )

    def test_entries_have_unit_real_part(self):
        g = Grid(L=20.0, N=101)
        M = make_preconditioner(build_symbol(g, 1.2), 5.0)
        np.testing.assert_array_equal(M.entries.real, np.ones(101))
        assert np.all(np.abs(M.entries) >= 1.0)

    def test_jacobi_variant_is_invertible(self):
        rng = np.random.default_rng(12)
        op = random_operator(rng, N=31)
        M = jacobi_preconditioner(op)
        assert np.all(np.abs(M.entries) >= 1.0)
        z = rng.standard_normal(31) + 1j * rng.standard_normal(31)
        np.testing.assert_allclose(precond_solve(M, z) * M.entries, z, rtol=1e-14)


class TestStructure:
    def test_complex_symmetric_not_hermitian(self):
        rng = np.random.default_rng(13)
        op = random_operator(rng)
        A = dense_step_matrix(op)
        assert np.max(np.abs(A - A.T)) < 1e-12
        assert np.max(np.abs(A - np.conj(A).T)) > 1e-3

    def test_unconditional_nonsingularity(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            op = random_operator(rng)
            A = dense_step_matrix(op)
            assert np.min(np.linalg.svd(A, compute_uv=False)) > 0.0
            assert np.max(np.abs(np.linalg.eigvals(A).real - 1.0)) < 1e-8

    def test_coupling_term_is_skew_hermitian(self):
        rng = np.random.default_rng(15)
        g = Grid(L=20.0, N=15)
        u = rng.standard_normal(15) + 1j * rng.standard_normal(15)
        density = np.abs(u) ** 2
        dt = 0.3
        n = 15
        cols = []
        for e in np.eye(n, dtype=complex):
            cols.append(-1j * dt * dft_forward(density * dft_inverse(e)))
        B = np.column_stack(cols)
        assert np.max(np.abs(np.conj(B).T + B)) < 1e-12

    @pytest.mark.xfail(
        strict=False,
        reason="sanity bound only: N=4001 is prime, so the FFT backend falls "
        "back to Bluestein and may exceed the 6x ratio",
    )
    def test_apply_cost_scales_like_n_log_n(self):
        rng = np.random.default_rng(16)
        times = {}
        for n in (1001, 4001):
            g = Grid(L=20.0, N=n)
            u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            op = step_operator(g, 2.0, 0.02, u)
            v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            for _ in range(20):
                step_apply(op, v)
            best = math.inf
            for _ in range(5):
                t0 = time.perf_counter()
                for _ in range(50):
                    step_apply(op, v)
                best = min(best, (time.perf_counter() - t0) / 50)
            times[n] = best
        assert times[4001] / times[1001] < 6.0
