"""Single-vector Lanczos for partial EVD/SVD (the baseline the block method is compared to)."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import LinearOperator, augment, sym_evd_small, thin_qr

BREAK_TOL = 1e-12


class Reorth(str, enum.Enum):
    NONE = "none"
    FULL = "full"


@dataclass
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix stored as its diagonal and off-diagonal."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.size != max(self.alpha.size - 1, 0):
            raise ValueError("beta must have len(alpha) - 1 entries")
        if np.any(self.beta < 0):
            raise ValueError("off-diagonal entries must be nonnegative")

    @property
    def k(self) -> int:
        return self.alpha.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.alpha) + np.diag(self.beta, 1) + np.diag(self.beta, -1)


@dataclass
class LanczosResult:
    Q: np.ndarray
    T: TridiagonalMatrix
    residual: np.ndarray
    residual_norm: float
    terminated_early: bool


@dataclass
class LanczosStats:
    steps: int = 0
    restarts: int = 0
    converged: bool = False
    max_residual: float = np.inf
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))


class _LanczosRun:
    """Resumable Lanczos recurrence; ``extend`` adds steps to an existing run.

    On breakdown (an invariant subspace was found) the run either stops or,
    with ``restart=True``, continues from a random vector orthogonal to the
    basis built so far. The coupling coefficient is then zero, so T becomes
    block diagonal.
    """

    def __init__(self, op: LinearOperator, q1, reorth=Reorth.FULL, rng=None):
        self.op = op
        self.dim = op.shape[0]
        self.reorth = Reorth(reorth)
        self.rng = np.random.default_rng(rng)
        self.Q = np.empty((self.dim, 0))
        self.alpha: list[float] = []
        self.beta: list[float] = []
        self.scale = 0.0
        self.restarts = 0
        self.terminated_early = False
        self._r = np.asarray(q1, dtype=float).copy()
        self._beta_next = 1.0  # q1 arrives normalized
        self._q_prev = np.zeros(self.dim)

    @property
    def k(self) -> int:
        return len(self.alpha)

    @property
    def residual(self) -> np.ndarray:
        return self._r

    @property
    def residual_norm(self) -> float:
        return self._beta_next

    def _grow_basis(self, q):
        if self.Q.shape[1] == 0 or self.k == self.Q.shape[1]:
            cap = max(16, 2 * self.Q.shape[1])
            Q = np.empty((self.dim, min(cap, self.dim)))
            Q[:, : self.k] = self.Q[:, : self.k]
            self.Q = Q
        self.Q[:, self.k] = q

    def _orthogonalize(self, v):
        Qk = self.Q[:, : self.k]
        for _ in range(2):
            v = v - Qk @ (Qk.T @ v)
        return v

    def extend(self, k_total: int, restart: bool = False) -> None:
        k_total = min(k_total, self.dim)
        while self.k < k_total:
            if self.k == 0:
                q, coupling = self._r / self._beta_next, 0.0
            elif self._beta_next < BREAK_TOL * self.scale:
                if not restart:
                    self.terminated_early = True
                    return
                q = self._orthogonalize(self.rng.standard_normal(self.dim))
                q /= np.linalg.norm(q)
                coupling = 0.0
                self.restarts += 1
            else:
                q, coupling = self._r / self._beta_next, self._beta_next
            if self.k > 0:
                self.beta.append(coupling)
            self._grow_basis(q)
            w = self.op.apply(q)
            a = float(q @ w)
            r = w - a * q - coupling * self._q_prev
            self.alpha.append(a)
            if self.reorth is Reorth.FULL:
                r = self._orthogonalize(r)
            self._q_prev = q
            self._r = r
            self._beta_next = float(np.linalg.norm(r))
            self.scale = max(self.scale, abs(a), coupling)
        if self.k < self.dim and self._beta_next < BREAK_TOL * self.scale:
            self.terminated_early = True

    def tridiagonal(self) -> TridiagonalMatrix:
        return TridiagonalMatrix(np.array(self.alpha), np.array(self.beta))

    def basis(self) -> np.ndarray:
        return self.Q[:, : self.k]


def _check_unit(q1, dim):
    q1 = np.asarray(q1, dtype=float)
    if q1.shape != (dim,):
        raise ValueError(f"q1 must have shape ({dim},), got {q1.shape}")
    if abs(np.linalg.norm(q1) - 1.0) > 1e-12:
        raise ValueError("q1 must be a unit vector")
    return q1


def lanczos_procedure(W: LinearOperator, q1, k: int, reorth=Reorth.FULL) -> LanczosResult:
    """Run ``k`` Lanczos steps on the symmetric operator ``W`` from ``q1``.

    Produces ``Q_k`` and ``T_k`` with ``W Q_k = Q_k T_k + r_k e_k^T``. Stops
    early, with ``terminated_early`` set, when an off-diagonal coefficient
    falls below ``1e-12`` times the largest coefficient seen so far.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    q1 = _check_unit(q1, W.shape[0])
    run = _LanczosRun(W, q1, reorth)
    run.extend(k, restart=False)
    return LanczosResult(run.basis().copy(), run.tridiagonal(), run.residual.copy(),
                         run.residual_norm, run.terminated_early)


def _ritz(run: _LanczosRun, r: int):
    S, lam = sym_evd_small(run.tridiagonal().to_dense())
    S, lam = S[:, :r], lam[:r]
    res = run.residual_norm * np.abs(S[-1, :])
    return S, lam, res


def default_schedule(r: int, dim: int) -> tuple[int, int]:
    """Start size and cap for the doubling schedule: max(2r, 10) up to 10r + 20."""
    max_k = min(dim, 10 * r + 20)
    return min(max(2 * r, 10), max_k), max_k


def lanczos_partial_evd(W: LinearOperator, r: int, tol: float = 1e-8, max_k: int | None = None,
                        q1=None, rng=None, reorth=Reorth.FULL, k0: int | None = None):
    """Leading ``r`` eigenpairs of a symmetric operator.

    The Krylov basis is extended (never restarted) along a doubling schedule
    until every wanted Ritz pair has residual ``<= tol * |lambda_1|`` or
    ``max_k`` steps are reached.

    Returns ``(U, lam, stats)`` with ``lam`` descending.
    """
    dim = W.shape[0]
    if not 1 <= r <= dim:
        raise ValueError(f"r must lie in [1, {dim}], got {r}")
    start, default_cap = default_schedule(r, dim)
    max_k = default_cap if max_k is None else min(max_k, dim)
    if not r <= max_k:
        raise ValueError(f"need r <= max_k, got r={r}, max_k={max_k}")
    k = min(max(k0 or start, r), max_k)
    rng = np.random.default_rng(rng)
    if q1 is None:
        q1 = rng.standard_normal(dim)
        q1 /= np.linalg.norm(q1)
    q1 = _check_unit(q1, dim)

    run = _LanczosRun(W, q1, reorth, rng)
    stats = LanczosStats()
    while True:
        run.extend(k, restart=True)
        S, lam, res = _ritz(run, r)
        scale = abs(lam[0]) if lam.size else 0.0
        converged = run.k >= r and bool(np.all(res <= tol * scale))
        if converged or run.k >= max_k:
            break
        k = min(2 * k, max_k)
    stats.steps = run.k
    stats.restarts = run.restarts
    stats.converged = converged
    stats.residuals = res
    stats.max_residual = float(res.max()) if res.size else 0.0
    U = run.basis() @ S
    return U, lam, stats


def lanczos_partial_svd(W: LinearOperator, r: int, tol: float = 1e-8, max_k: int | None = None,
                        q1_seed=None, rng=None, reorth=Reorth.FULL):
    """Leading ``r`` singular triplets of ``W`` via Lanczos on the augmented operator.

    The start vector is ``(u1; 0)``, which makes the recurrence alternate
    between the row and column spaces. Each Ritz vector splits into
    ``(u; v) / sqrt(2)``.

    Returns ``(U, S, V, stats)``.
    """
    m, n = W.shape
    if not 1 <= r <= min(m, n):
        raise ValueError(f"r must lie in [1, {min(m, n)}], got {r}")
    rng = np.random.default_rng(rng)
    if q1_seed is None:
        u1 = rng.standard_normal(m)
    else:
        u1 = np.asarray(q1_seed, dtype=float)
    q1 = np.concatenate([u1 / np.linalg.norm(u1), np.zeros(n)])
    Y, lam, stats = lanczos_partial_evd(augment(W), r, tol=tol, max_k=max_k, q1=q1,
                                        rng=rng, reorth=reorth)
    S = np.maximum(lam, 0.0)
    U = thin_qr(np.sqrt(2.0) * Y[:m])[0]
    V = thin_qr(np.sqrt(2.0) * Y[m:])[0]
    return U, S, V, stats
