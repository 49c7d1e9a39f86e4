"""scikit-learn style wrappers around the Robust PCA and matrix completion solvers."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import full_svd_small
from .prox import make_backend
from .solvers import McProblem, RpcaProblem, mc_svt, rpca_adm


def _backend(name, k, seed):
    return make_backend(name, k=k, rng=seed)


class RobustPCA(TransformerMixin, BaseEstimator):
    """Low-rank plus sparse decomposition ``X = L + S`` by inexact ADM.

    After ``fit``, ``low_rank_`` and ``sparse_`` hold the two parts and
    ``components_`` the right singular vectors of ``low_rank_``.
    ``transform`` projects rows onto that subspace, as PCA would.

    Parameters
    ----------
    lam : float, optional
        Weight of the l1 term; ``1/sqrt(max(X.shape))`` when omitted.
    backend : {"blws", "lanczos", "full"}
        Partial SVD used inside the thresholding step.
    k : int
        Block Lanczos steps per call (blws only).
    """

    def __init__(self, lam=None, backend="blws", k=2, tol=1e-7, max_iter=1000, rho=1.5,
                 random_state=None):
        self.lam = lam
        self.backend = backend
        self.k = k
        self.tol = tol
        self.max_iter = max_iter
        self.rho = rho
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        res = rpca_adm(RpcaProblem(X, self.lam), _backend(self.backend, self.k, self.random_state),
                       tol=self.tol, max_iter=self.max_iter, rho=self.rho, seed=self.random_state)
        self.low_rank_ = res.A
        self.sparse_ = res.E
        self.stats_ = res.stats
        self.n_components_ = res.stats.rank_hat
        _, _, V = full_svd_small(res.A, limit=np.iinfo(np.int64).max)
        self.components_ = V[:, :self.n_components_].T
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        return np.asarray(Z, dtype=float) @ self.components_


def _observed_entries(X):
    """Split input into (rows, cols, values, shape); NaN marks a missing dense entry."""
    if sp.issparse(X):
        coo = sp.coo_matrix(X, dtype=float)
        coo.sum_duplicates()
        return coo.row, coo.col, coo.data, coo.shape
    X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
    rows, cols = np.nonzero(~np.isnan(X))
    return rows, cols, X[rows, cols], X.shape


class MatrixCompletion(BaseEstimator):
    """Nuclear-norm matrix completion with singular value thresholding.

    ``fit`` accepts a sparse matrix (stored entries are the observations) or
    a dense array with NaN for the missing entries.
    """

    def __init__(self, tau=None, delta=None, backend="blws", k=2, tol=1e-4, max_iter=500,
                 random_state=None):
        self.tau = tau
        self.delta = delta
        self.backend = backend
        self.k = k
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        rows, cols, values, shape = _observed_entries(X)
        problem = McProblem(rows, cols, values, shape, tau=self.tau, delta=self.delta)
        res = mc_svt(problem, _backend(self.backend, self.k, self.random_state),
                     tol=self.tol, max_iter=self.max_iter, seed=self.random_state)
        self.U_, self.s_, self.V_ = res.U, res.s, res.V
        self.stats_ = res.stats
        self.shape_ = tuple(shape)
        return self

    @property
    def completed_(self) -> np.ndarray:
        check_is_fitted(self, "U_")
        return (self.U_ * self.s_) @ self.V_.T

    def transform(self, X):
        """Fill the missing entries of ``X`` from the fitted low-rank model."""
        check_is_fitted(self, "U_")
        rows, cols, values, shape = _observed_entries(X)
        if tuple(shape) != self.shape_:
            raise ValueError(f"X has shape {tuple(shape)}, expected {self.shape_}")
        out = self.completed_
        out[rows, cols] = values
        return out

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)
