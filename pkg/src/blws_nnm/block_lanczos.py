"""Block Lanczos partial EVD and its warm-started partial SVD (BLWS).

The warm-started SVD runs a few block Lanczos steps on the augmented operator
[[0, W], [W^T, 0]] starting from the previous iteration's singular subspaces,
stacked as (U; V) / sqrt(2). Because the start is already close to the wanted
invariant subspace, ``k = 2`` steps are enough and no reorthogonalization
between blocks is performed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import LinearOperator, augment, sym_evd_small, thin_qr

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-8
POSITIVE_TOL = 1e-12


@dataclass
class BlockTridiagonal:
    """Diagonal blocks ``M`` (symmetric) and sub-diagonal blocks ``B`` (upper triangular)."""

    M: list = field(default_factory=list)
    B: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.M)

    @property
    def sizes(self) -> list[int]:
        return [Mi.shape[0] for Mi in self.M]

    def to_dense(self) -> np.ndarray:
        offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        T = np.zeros((offsets[-1], offsets[-1]))
        for l, Ml in enumerate(self.M):
            s = slice(offsets[l], offsets[l + 1])
            T[s, s] = 0.5 * (Ml + Ml.T)
        for l, Bl in enumerate(self.B):
            rows = slice(offsets[l + 1], offsets[l + 2])
            cols = slice(offsets[l], offsets[l + 1])
            T[rows, cols] = Bl
            T[cols, rows] = Bl.T
        return T


@dataclass
class BlockLanczosResult:
    Q: np.ndarray
    T: BlockTridiagonal
    terminated_early: bool
    residual: np.ndarray  # R_k = W X_k - X_k M_k - X_{k-1} B_{k-1}^T


@dataclass(frozen=True)
class WarmStart:
    """Leading singular subspaces carried from one solver iteration to the next.

    ``n_padded`` counts trailing columns that were filled with random
    directions because the Lanczos step could not supply them.
    """

    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    n_padded: int = 0

    @property
    def r(self) -> int:
        return self.U.shape[1]

    def check(self, tol: float = ORTHO_TOL) -> None:
        r = self.r
        if self.V.shape[1] != r or self.sigma.shape != (r,):
            raise ValueError("inconsistent WarmStart dimensions")
        eye = np.eye(r)
        if np.linalg.norm(self.U.T @ self.U - eye) > tol or np.linalg.norm(self.V.T @ self.V - eye) > tol:
            raise ValueError("WarmStart subspaces are not orthonormal")
        if np.any(self.sigma < 0) or np.any(np.diff(self.sigma) > 0):
            raise ValueError("WarmStart singular values must be nonnegative and descending")


def _check_orthonormal(X, tol=ORTHO_TOL):
    if np.linalg.norm(X.T @ X - np.eye(X.shape[1])) > tol:
        raise ValueError("X1 must have orthonormal columns")


def block_lanczos_procedure(W: LinearOperator, X1, k: int) -> BlockLanczosResult:
    """``k`` steps of block Lanczos from the orthonormal block ``X1``.

    ``M_l = X_l^T W X_l``; ``R_l = W X_l - X_l M_l - X_{l-1} B_{l-1}^T``;
    ``(X_{l+1}, B_l) = qr(R_l)``. Stops early when ``R_l`` is numerically rank
    deficient relative to ``||W X_l||_F`` (an invariant subspace has been
    reached). Each step costs one block application of ``W``.
    """
    X = np.asarray(X1, dtype=float)
    dim, b = X.shape
    if W.shape != (dim, dim):
        raise ValueError(f"X1 has {dim} rows but W is {W.shape}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k * b > dim:
        raise ValueError(f"k*b = {k * b} exceeds operator dimension {dim}")
    _check_orthonormal(X)

    WX = W.apply(X)
    T = BlockTridiagonal([X.T @ WX], [])
    blocks = [X]
    X_prev = B_prev = None
    terminated = False
    R = None
    for _ in range(k):
        M = T.M[-1]
        R = WX - X @ M
        if X_prev is not None:
            R -= X_prev @ B_prev.T
        if len(blocks) == k:
            break
        X_next, B, rank = thin_qr(R, scale=np.linalg.norm(WX))
        if rank < b:
            terminated = True
            break
        X_prev, B_prev, X = X, B, X_next
        WX = W.apply(X)
        T.M.append(X.T @ WX)
        T.B.append(B)
        blocks.append(X)
    return BlockLanczosResult(np.hstack(blocks), T, terminated, R)


def bl_evd(W: LinearOperator, X1, k: int, r: int | None = None):
    """Leading Ritz pairs from ``k`` block Lanczos steps.

    Returns ``(U, lam, info)`` where ``info`` holds ``terminated_early``,
    ``available`` (dimension actually built) and ``short`` (fewer than ``r``
    pairs could be returned).
    """
    res = block_lanczos_procedure(W, X1, k)
    S, lam = sym_evd_small(res.T.to_dense())
    available = lam.size
    r = available if r is None else r
    n_out = min(r, available)
    U = res.Q @ S[:, :n_out]
    info = {"terminated_early": res.terminated_early, "available": available,
            "short": n_out < r, "Q": res.Q}
    return U, lam[:n_out], info


def _random_orthonormal(rows, cols, rng):
    return thin_qr(rng.standard_normal((rows, cols)))[0]


def adapt_subspace(warm: WarmStart | None, r_new: int, m: int, n: int, rng=None) -> WarmStart:
    """Resize a warm start to ``r_new`` columns.

    Empty start: random orthonormal bases. Shrinking keeps the leading
    columns. Growing appends random columns and re-orthonormalizes, which
    leaves the span of the existing columns unchanged.
    """
    if not 1 <= r_new <= min(m, n):
        raise ValueError(f"r_new must lie in [1, {min(m, n)}], got {r_new}")
    rng = np.random.default_rng(rng)
    if warm is None:
        return WarmStart(_random_orthonormal(m, r_new, rng), _random_orthonormal(n, r_new, rng),
                         np.zeros(r_new), n_padded=r_new)
    if warm.U.shape[0] != m or warm.V.shape[0] != n:
        raise ValueError("warm start does not match the operator shape")
    if r_new == warm.r:
        return warm
    if r_new < warm.r:
        return WarmStart(warm.U[:, :r_new], warm.V[:, :r_new], warm.sigma[:r_new],
                         n_padded=max(0, warm.n_padded - (warm.r - r_new)))
    extra = r_new - warm.r
    U = thin_qr(np.hstack([warm.U, rng.standard_normal((m, extra))]))[0]
    V = thin_qr(np.hstack([warm.V, rng.standard_normal((n, extra))]))[0]
    sigma = np.concatenate([warm.sigma, np.zeros(extra)])
    return WarmStart(U, V, sigma, n_padded=warm.n_padded + extra)


def blws_svd(W: LinearOperator, warm: WarmStart, k: int = 2, r: int | None = None, rng=None) -> WarmStart:
    """Warm-started partial SVD of ``W``; returns the next iteration's warm start.

    ``r`` defaults to the width of ``warm``. If ``r`` exceeds ``k`` times that
    width, ``k`` is raised just enough to build that many Ritz pairs.
    """
    if warm is None or warm.r == 0:
        raise ValueError("blws_svd needs a seeded warm start (see adapt_subspace)")
    m, n = W.shape
    b = warm.r
    r = b if r is None else r
    if not 1 <= r <= min(m, n):
        raise ValueError(f"r must lie in [1, {min(m, n)}], got {r}")
    if r > k * b:
        k_new = math.ceil(r / b)
        logger.info("raising block Lanczos steps from %d to %d to serve r=%d with b=%d", k, k_new, r, b)
        k = k_new
    k = max(1, min(k, (m + n) // b))

    X1, _, _ = thin_qr(np.vstack([warm.U, warm.V]) / np.sqrt(2.0))
    Y, lam, _ = bl_evd(augment(W), X1, k)
    positive = lam > POSITIVE_TOL * max(lam[0], 0.0) if lam.size else lam.astype(bool)
    idx = np.flatnonzero(positive)[:r]
    sigma = lam[idx]
    U = np.sqrt(2.0) * Y[:m, idx]
    V = np.sqrt(2.0) * Y[m:, idx]
    if idx.size:
        U = thin_qr(U)[0]
        V = thin_qr(V)[0]
    result = WarmStart(U, V, sigma)
    if idx.size < r:
        rng = np.random.default_rng(rng)
        if idx.size == 0:
            result = adapt_subspace(None, r, m, n, rng)
        else:
            result = adapt_subspace(result, r, m, n, rng)
        logger.info("block Lanczos produced %d of %d positive Ritz values; padded", idx.size, r)
    return result
