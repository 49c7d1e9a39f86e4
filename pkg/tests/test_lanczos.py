import numpy as np
import pytest

from blws_nnm.core import DenseOperator
from blws_nnm.lanczos import (Reorth, TridiagonalMatrix, _LanczosRun, default_schedule, lanczos_partial_evd,
                              lanczos_partial_svd, lanczos_procedure)
from oracles import max_angle, orth_err


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return A + A.T


def _unit(rng, n):
    q = rng.standard_normal(n)
    return q / np.linalg.norm(q)


def test_tridiagonal_validation():
    T = TridiagonalMatrix([1.0, 2.0], [0.5])
    np.testing.assert_array_equal(T.to_dense(), [[1.0, 0.5], [0.5, 2.0]])
    with pytest.raises(ValueError):
        TridiagonalMatrix([1.0, 2.0], [-0.5])
    with pytest.raises(ValueError):
        TridiagonalMatrix([1.0, 2.0], [])


def test_identity_terminates_immediately(rng):
    res = lanczos_procedure(DenseOperator(np.eye(6)), _unit(rng, 6), 3)
    assert res.terminated_early
    assert res.T.k == 1
    np.testing.assert_allclose(res.T.alpha, [1.0])
    assert res.residual_norm == pytest.approx(0.0, abs=1e-14)


def test_eigenvector_start_terminates():
    res = lanczos_procedure(DenseOperator(np.diag([2.0, 1.0])), np.array([1.0, 0.0]), 2)
    assert res.terminated_early
    assert res.T.alpha[0] == 2.0


def test_procedure_input_checks(rng):
    op = DenseOperator(np.eye(4))
    with pytest.raises(ValueError):
        lanczos_procedure(op, np.ones(4), 2)
    with pytest.raises(ValueError):
        lanczos_procedure(op, _unit(rng, 4), 0)


def test_full_reorth_orthogonality_and_recurrence(rng):
    W = _sym(rng, 30)
    res = lanczos_procedure(DenseOperator(W), _unit(rng, 30), 10, Reorth.FULL)
    Q, T = res.Q, res.T.to_dense()
    assert orth_err(Q) <= 1e-10
    e_k = np.zeros(10)
    e_k[-1] = 1.0
    resid = W @ Q - Q @ T - np.outer(res.residual, e_k)
    assert np.linalg.norm(resid) <= 1e-10 * np.linalg.norm(T)


def test_three_term_identity_each_step(rng):
    W = _sym(rng, 25)
    res = lanczos_procedure(DenseOperator(W), _unit(rng, 25), 8, Reorth.NONE)
    Q, a, b = res.Q, res.T.alpha, res.T.beta
    scale = abs(a[0]) + abs(b[0])
    for l in range(7):
        rhs = a[l] * Q[:, l] + b[l] * Q[:, l + 1] + (b[l - 1] * Q[:, l - 1] if l else 0.0)
        assert np.linalg.norm(W @ Q[:, l] - rhs) <= 1e-10 * scale


def test_ritz_monotone_in_k(rng):
    W = _sym(rng, 40)
    run = _LanczosRun(DenseOperator(W), _unit(rng, 40))
    top = []
    for k in range(1, 15):
        run.extend(k)
        top.append(np.linalg.eigvalsh(run.tridiagonal().to_dense())[-1])
    assert np.all(np.diff(top) >= -1e-12 * abs(top[-1]))


def test_full_k_recovers_spectrum(rng):
    W = _sym(rng, 20)
    res = lanczos_procedure(DenseOperator(W), _unit(rng, 20), 20, Reorth.FULL)
    ritz = np.sort(np.linalg.eigvalsh(res.T.to_dense()))
    exact = np.sort(np.linalg.eigvalsh(W))
    np.testing.assert_allclose(ritz, exact, rtol=1e-9, atol=1e-9 * np.abs(exact).max())


def test_default_schedule():
    assert default_schedule(1, 1000) == (10, 30)
    assert default_schedule(50, 1000) == (100, 520)
    assert default_schedule(50, 80) == (80, 80)


def test_partial_evd_diagonal():
    U, lam, stats = lanczos_partial_evd(DenseOperator(np.diag([5.0, 4, 3, 2, 1])), 2, rng=0)
    np.testing.assert_allclose(lam, [5.0, 4.0], atol=1e-12)
    assert max_angle(U, np.eye(5)[:, :2]) <= 1e-8
    assert stats.converged


def test_partial_evd_identity_degenerate():
    U, lam, stats = lanczos_partial_evd(DenseOperator(np.eye(10)), 3, rng=1)
    np.testing.assert_allclose(lam, [1.0, 1.0, 1.0], atol=1e-12)
    assert orth_err(U) <= 1e-10
    assert stats.restarts >= 2


def test_partial_evd_dense_oracle(rng):
    W = _sym(rng, 100)
    _, lam, stats = lanczos_partial_evd(DenseOperator(W), 5, tol=1e-8, rng=rng)
    exact = np.sort(np.linalg.eigvalsh(W))[::-1][:5]
    np.testing.assert_allclose(lam, exact, rtol=1e-7)
    assert stats.converged


def test_partial_evd_deflation_after_small_invariant_subspace(rng):
    # start vector inside a 2-dimensional invariant subspace, 4 pairs wanted
    W = np.diag([9.0, 8.0, 7.0, 6.0, 1.0, 0.5])
    q1 = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]) / np.sqrt(2)
    U, lam, stats = lanczos_partial_evd(DenseOperator(W), 4, q1=q1, rng=rng)
    np.testing.assert_allclose(lam, [9.0, 8.0, 7.0, 6.0], atol=1e-10)
    assert stats.restarts >= 1


def test_partial_evd_errors():
    with pytest.raises(ValueError):
        lanczos_partial_evd(DenseOperator(np.eye(3)), 4)


def test_partial_svd_examples():
    U, S, V, _ = lanczos_partial_svd(DenseOperator(np.diag([3.0, 1.0])), 1, rng=0)
    assert S[0] == pytest.approx(3.0, abs=1e-12)
    assert abs(U[0, 0]) == pytest.approx(1.0) and abs(V[0, 0]) == pytest.approx(1.0)

    rng = np.random.default_rng(4)
    a, b = _unit(rng, 9), _unit(rng, 6)
    U, S, V, _ = lanczos_partial_svd(DenseOperator(7.0 * np.outer(a, b)), 1, rng=rng)
    assert S[0] == pytest.approx(7.0, rel=1e-12)
    assert abs(U[:, 0] @ a) == pytest.approx(1.0, abs=1e-10)
    assert abs(V[:, 0] @ b) == pytest.approx(1.0, abs=1e-10)


def test_partial_svd_dense_oracle(rng):
    W = rng.standard_normal((80, 60))
    op = DenseOperator(W)
    U, S, V, stats = lanczos_partial_svd(op, 8, tol=1e-8, rng=rng)
    Ue, Se, Vte = np.linalg.svd(W)
    np.testing.assert_allclose(S, Se[:8], rtol=1e-7)
    assert max_angle(U, Ue[:, :8]) <= 1e-6
    assert max_angle(V, Vte[:8].T) <= 1e-6
    assert orth_err(U) <= 1e-8 and orth_err(V) <= 1e-8
    assert np.all(np.linalg.norm(W @ V - U * S, axis=0) <= 1e-8 * S[0] * 10)
    # structured start: every step touches only one half, so one count per step
    assert op.counter == stats.steps


def test_partial_svd_rank_check():
    with pytest.raises(ValueError):
        lanczos_partial_svd(DenseOperator(np.ones((3, 2))), 3)
