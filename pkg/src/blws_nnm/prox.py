"""Singular value thresholding with interchangeable partial-SVD backends."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .block_lanczos import WarmStart, adapt_subspace, blws_svd
from .core import LinearOperator, aslinearoperator, full_svd_small
from .lanczos import Reorth, lanczos_partial_svd


class SvdConvergenceWarning(UserWarning):
    """A Lanczos partial SVD hit its step cap before reaching its tolerance."""


def shrink(x, eps: float):
    """Soft thresholding ``sgn(x) * max(|x| - eps, 0)``, elementwise for arrays."""
    if eps < 0:
        raise ValueError(f"threshold must be nonnegative, got {eps}")
    return np.sign(x) * np.maximum(np.abs(x) - eps, 0.0)


# ----------------------------------------------------------------------------
# Backends
# ----------------------------------------------------------------------------


class SvdBackend:
    """Computes (at least) the ``r`` leading singular triplets of an operator."""

    name = "abstract"

    def partial_svd(self, op: LinearOperator, r: int):
        raise NotImplementedError

    def reset(self) -> None:
        pass


class FullSvd(SvdBackend):
    """Dense SVD of the whole matrix; returns every triplet regardless of ``r``."""

    name = "full"

    def partial_svd(self, op, r):
        return full_svd_small(op.to_dense(), limit=np.iinfo(np.int64).max)


class LanczosSvd(SvdBackend):
    """Cold-started Lanczos on the augmented operator with full reorthogonalization."""

    name = "lanczos"

    def __init__(self, tol: float = 1e-8, max_k: int | None = None, reorth=Reorth.FULL, rng=None):
        self.tol = tol
        self.max_k = max_k
        self.reorth = reorth
        self.rng = np.random.default_rng(rng)
        self.failures = 0

    def partial_svd(self, op, r):
        U, S, V, stats = lanczos_partial_svd(op, r, tol=self.tol, max_k=self.max_k,
                                             rng=self.rng, reorth=self.reorth)
        if not stats.converged:
            self.failures += 1
            warnings.warn(
                f"Lanczos partial SVD stopped at {stats.steps} steps with max residual "
                f"{stats.max_residual:.3e} (r={r}, tol={self.tol:g})",
                SvdConvergenceWarning, stacklevel=2)
        return U, S, V


class BlwsSvd(SvdBackend):
    """Block Lanczos warm-started from the subspaces of the previous call.

    While the requested rank is still moving, the block carries
    ``oversample`` guard columns beyond it. They keep directions that are
    about to cross the threshold inside the warm subspace. Once the same rank
    is requested twice in a row the block shrinks back to exactly ``r``
    columns, so the steady state costs ``2 r`` applications per call at
    ``k = 2``.

    The first call has nothing to warm start from. ``cold_start="lanczos"``
    seeds it with a converged Lanczos partial SVD; ``"random"`` starts the
    block recurrence from random orthonormal subspaces.
    """

    name = "blws"

    def __init__(self, k: int = 2, cold_start: str = "lanczos", tol: float = 1e-8,
                 oversample: int = 10, rng=None):
        if cold_start not in ("lanczos", "random"):
            raise ValueError(f"unknown cold_start {cold_start!r}")
        if k < 1 or oversample < 0:
            raise ValueError("k must be >= 1 and oversample >= 0")
        self.k = k
        self.cold_start = cold_start
        self.tol = tol
        self.oversample = oversample
        self.rng = np.random.default_rng(rng)
        self.warm: WarmStart | None = None
        self.calls = 0
        self._last_r = None

    def reset(self):
        self.warm = None
        self.calls = 0
        self._last_r = None

    def block_width(self, r: int, shape) -> int:
        guard = 0 if r == self._last_r else self.oversample
        return min(r + guard, min(shape))

    def partial_svd(self, op, r):
        m, n = op.shape
        self.calls += 1
        b = self.block_width(r, op.shape)
        self._last_r = r
        if self.warm is None and self.cold_start == "lanczos":
            U, S, V, _ = lanczos_partial_svd(op, r, tol=self.tol, rng=self.rng)
            self.warm = WarmStart(U, V, S)
        else:
            warm = adapt_subspace(self.warm, b, m, n, self.rng)
            self.warm = blws_svd(op, warm, k=self.k, r=b, rng=self.rng)
        return self.warm.U[:, :r], self.warm.sigma[:r], self.warm.V[:, :r]


_ALIASES = {
    "full": FullSvd, "exact": FullSvd, "exact-full": FullSvd,
    "lanczos": LanczosSvd, "lanczos-baseline": LanczosSvd,
    "blws": BlwsSvd,
}


def make_backend(name: str, **kwargs) -> SvdBackend:
    """Build a backend from its name; unknown keyword arguments are dropped per backend."""
    try:
        cls = _ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown SVD backend {name!r}; choose from {sorted(_ALIASES)}") from None
    accepted = {"full": (), "lanczos": ("tol", "max_k", "reorth", "rng"),
                "blws": ("k", "cold_start", "tol", "oversample", "rng")}[cls.name]
    return cls(**{key: val for key, val in kwargs.items() if key in accepted and val is not None})


# ----------------------------------------------------------------------------
# Rank prediction and thresholding
# ----------------------------------------------------------------------------


@dataclass
class RankPredictor:
    r: int = 10
    increment: int = 5
    history: list = field(default_factory=list)

    def __post_init__(self):
        if self.r < 1 or self.increment < 1:
            raise ValueError("rank and increment must be >= 1")


def predict_rank(predictor: RankPredictor, achieved_rank: int, all_above_threshold: bool,
                 max_rank: int | None = None) -> RankPredictor:
    """Next rank guess: achieved + 1 when a value fell below threshold, else achieved + increment."""
    step = predictor.increment if all_above_threshold else 1
    r = achieved_rank + step
    if max_rank is not None:
        r = min(r, max_rank)
    predictor.r = max(1, r)
    predictor.history.append(predictor.r)
    return predictor


@dataclass
class SvtResult:
    """Low-rank factors of ``T_eps(W)`` = U diag(s) V^T, with ``s`` already shrunk."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    sigma: np.ndarray  # raw singular values that were computed
    grew: bool

    @property
    def rank(self) -> int:
        return self.s.size

    def to_dense(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.T

    def values_at(self, rows, cols) -> np.ndarray:
        """Entries of the thresholded matrix at the given index pairs."""
        return np.einsum("ij,ij->i", self.U[rows] * self.s, self.V[cols])


def svt(W, eps: float, backend: SvdBackend | None = None, predictor: RankPredictor | None = None) -> SvtResult:
    """Singular value thresholding ``T_eps(W)`` using a partial SVD.

    Starting from the predicted rank, the number of computed triplets grows by
    ``predictor.increment`` until one singular value is at or below ``eps``
    (or all of them are computed). The predictor is then updated in place.
    """
    if eps < 0:
        raise ValueError(f"threshold must be nonnegative, got {eps}")
    op = aslinearoperator(W)
    backend = FullSvd() if backend is None else backend
    predictor = RankPredictor() if predictor is None else predictor
    p = min(op.shape)
    r = min(predictor.r, p)
    grew = False
    while True:
        U, sigma, V = backend.partial_svd(op, r)
        if sigma.size == 0 or sigma[-1] <= eps or sigma.size >= p:
            break
        grew = True
        r = min(r + predictor.increment, p)
    keep = sigma > eps
    result = SvtResult(U[:, keep], sigma[keep] - eps, V[:, keep], sigma, grew)
    predict_rank(predictor, result.rank, grew, p)
    return result


def svt_dense(W, eps: float) -> np.ndarray:
    """Exact singular value thresholding from a full dense SVD."""
    U, S, V = full_svd_small(W, limit=np.iinfo(np.int64).max)
    return (U * shrink(S, eps)) @ V.T
