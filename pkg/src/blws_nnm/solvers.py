"""Host algorithms: Robust PCA by inexact ADM and matrix completion by SVT.

Both take an :class:`~blws_nnm.prox.SvdBackend`, so the plain and the
warm-started variants of a solver differ only in the backend passed in.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import DenseOperator, SparseOperator, as_finite_matrix, sparse_from_triplets
from .lanczos import lanczos_partial_svd
from .prox import RankPredictor, SvdBackend, make_backend, shrink, svt

logger = logging.getLogger(__name__)


@dataclass
class RpcaProblem:
    D: np.ndarray
    lam: float | None = None

    def __post_init__(self):
        self.D = as_finite_matrix(self.D, "D")
        if self.lam is None:
            self.lam = 1.0 / math.sqrt(max(self.D.shape))
        if self.lam <= 0:
            raise ValueError("lambda must be positive")


@dataclass
class McProblem:
    """Observed entries ``values`` at ``(rows, cols)`` of an m x n matrix."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    shape: tuple
    tau: float | None = None
    delta: float | None = None

    def __post_init__(self):
        m, n = self.shape
        # canonical row-major order so the values line up with a CSR data array
        op = sparse_from_triplets(self.rows, self.cols, self.values, (m, n)).tocoo()
        if op.nnz == 0:
            raise ValueError("at least one observed entry is needed")
        self.rows, self.cols, self.values = op.row.astype(np.int64), op.col.astype(np.int64), op.data
        if self.tau is None:
            self.tau = 5.0 * math.sqrt(m * n)
        if self.delta is None:
            self.delta = 1.2 * m * n / self.values.size
        if self.tau <= 0 or self.delta <= 0:
            raise ValueError("tau and delta must be positive")

    @classmethod
    def from_instance(cls, inst, **kwargs) -> "McProblem":
        return cls(inst.rows, inst.cols, inst.values, (inst.m, inst.m), **kwargs)


@dataclass
class SolverStats:
    iterations: int = 0
    wall_time: float = 0.0
    matvec_count: int = 0
    rel_err: float | None = None
    rank_hat: int = 0
    e_l0: int | None = None
    converged: bool = False
    rank_history: list = field(default_factory=list)
    predicted_ranks: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    matvec_history: list = field(default_factory=list)
    svd_failures: int = 0


@dataclass
class RpcaResult:
    A: np.ndarray
    E: sp.csr_matrix
    stats: SolverStats


@dataclass
class McResult:
    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    stats: SolverStats

    def to_dense(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.T


def _spectral_norm(op, rng) -> float:
    _, S, _, _ = lanczos_partial_svd(op, 1, tol=1e-10, max_k=sum(op.shape), rng=rng)
    return float(S[0])


def _rel_err(A_hat, A_true) -> float:
    return float(np.linalg.norm(A_hat - A_true) / np.linalg.norm(A_true))


def rpca_adm(problem: RpcaProblem, backend: SvdBackend | str = "blws", *, tol: float = 1e-7,
             max_iter: int = 1000, rho: float = 1.5, mu: float | None = None,
             init_rank: int = 10, rank_increment: int = 5, A_true=None, seed=None,
             l0_tol: float = 1e-8, e_first: bool = True) -> RpcaResult:
    """Split ``D`` into low-rank ``A`` plus sparse ``E`` (inexact ALM / ADM).

    Per iteration: ``A = T_{1/mu}(D - E + Y/mu)``,
    ``E = shrink(D - A + Y/mu, lam/mu)``, ``Y += mu (D - A - E)`` and
    ``mu = min(rho mu, mu_max)``. Stops when ``||D - A - E||_F / ||D||_F <= tol``.
    """
    if isinstance(backend, str):
        backend = make_backend(backend, rng=seed)
    D, lam = problem.D, problem.lam
    rng = np.random.default_rng(seed)
    op = DenseOperator(D)
    start = time.perf_counter()

    norm_two = _spectral_norm(op, rng)
    norm_fro = np.linalg.norm(D)
    Y = D / max(norm_two, np.abs(D).max() / lam)
    mu = 1.25 / norm_two if mu is None else mu
    mu_max = mu * 1e7
    E = np.zeros_like(D)
    A = np.zeros_like(D)
    predictor = RankPredictor(r=init_rank, increment=rank_increment)
    stats = SolverStats()

    for it in range(1, max_iter + 1):
        used = op.counter
        if e_first:
            E = shrink(D - A + Y / mu, lam / mu)
        op.matrix = D - E + Y / mu
        res = svt(op, 1.0 / mu, backend, predictor)
        A = res.to_dense()
        if not e_first:
            E = shrink(D - A + Y / mu, lam / mu)
        Z = D - A - E
        Y += mu * Z
        mu = min(rho * mu, mu_max)
        err = float(np.linalg.norm(Z) / norm_fro)
        stats.rank_history.append(res.rank)
        stats.predicted_ranks.append(predictor.r)
        stats.residual_history.append(err)
        stats.matvec_history.append(op.counter - used)
        logger.debug("ADM iter %d: rank %d, residual %.3e", it, res.rank, err)
        stats.iterations = it
        if err <= tol:
            stats.converged = True
            break

    stats.wall_time = time.perf_counter() - start
    stats.matvec_count = op.counter
    stats.rank_hat = stats.rank_history[-1] if stats.rank_history else 0
    E_sparse = sp.csr_matrix(E)
    E_sparse.eliminate_zeros()
    stats.e_l0 = int(np.count_nonzero(np.abs(E_sparse.data) > l0_tol * np.abs(D).max()))
    stats.svd_failures = getattr(backend, "failures", 0)
    if A_true is not None:
        stats.rel_err = _rel_err(A, A_true)
    if not stats.converged:
        logger.warning("ADM did not reach tol %.1e in %d iterations", tol, max_iter)
    return RpcaResult(A, E_sparse, stats)


def mc_svt(problem: McProblem, backend: SvdBackend | str = "blws", *, tol: float = 1e-4,
           max_iter: int = 500, init_rank: int = 10, rank_increment: int = 5,
           A_true=None, seed=None) -> McResult:
    """Singular value thresholding for matrix completion.

    ``Y`` lives on the observed pattern only. Each iteration computes
    ``A = T_tau(Y)`` through the backend, stops once
    ``||P(A - D)||_F / ||P(D)||_F <= tol`` and otherwise takes
    ``Y += delta * P(D - A)``. ``Y`` starts at ``k0 * delta * P(D)`` with
    ``k0 = ceil(tau / (delta * ||P(D)||_2))``.
    """
    if isinstance(backend, str):
        backend = make_backend(backend, rng=seed)
    rng = np.random.default_rng(seed)
    rows, cols, d = problem.rows, problem.cols, problem.values
    tau, delta = problem.tau, problem.delta
    op = SparseOperator.from_triplets(rows, cols, d, problem.shape)
    if not (np.array_equal(op.pattern_rows, rows) and np.array_equal(op.pattern_cols, cols)):
        raise RuntimeError("observed pattern is not in canonical row-major order")
    start = time.perf_counter()

    norm_d = np.linalg.norm(d)
    k0 = math.ceil(tau / (delta * _spectral_norm(op, rng)))
    y = k0 * delta * d
    predictor = RankPredictor(r=init_rank, increment=rank_increment)
    stats = SolverStats()
    res = None

    for it in range(1, max_iter + 1):
        used = op.counter
        op.set_values(y)
        res = svt(op, tau, backend, predictor)
        a = res.values_at(rows, cols)
        err = float(np.linalg.norm(a - d) / norm_d)
        stats.rank_history.append(res.rank)
        stats.predicted_ranks.append(predictor.r)
        stats.residual_history.append(err)
        stats.matvec_history.append(op.counter - used)
        logger.debug("SVT iter %d: rank %d, residual %.3e", it, res.rank, err)
        stats.iterations = it
        if err <= tol:
            stats.converged = True
            break
        y += delta * (d - a)

    stats.wall_time = time.perf_counter() - start
    stats.matvec_count = op.counter
    stats.rank_hat = res.rank
    stats.svd_failures = getattr(backend, "failures", 0)
    result = McResult(res.U, res.s, res.V, stats)
    if A_true is not None:
        stats.rel_err = _rel_err(result.to_dense(), A_true)
    if not stats.converged:
        logger.warning("SVT did not reach tol %.1e in %d iterations", tol, max_iter)
    return result
