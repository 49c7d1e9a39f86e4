"""Seeded synthetic Robust PCA and matrix completion instances.

All randomness for an instance comes from ``numpy.random.SeedSequence(seed)``,
split into independent child streams (factors, support, values) so changing
one part of a protocol does not shift the others.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import thin_qr, write_mtx


@dataclass
class RpcaInstance:
    D: np.ndarray
    A_true: np.ndarray
    E_true: sp.csr_matrix
    seed: int
    m: int
    rank: int
    n_corrupt: int


@dataclass
class McInstance:
    M_L: np.ndarray
    M_R: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    seed: int
    m: int
    r: int

    @property
    def s(self) -> int:
        return self.rows.size

    @property
    def values(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.M_L[self.rows], self.M_R[self.cols])

    @property
    def A_true(self) -> np.ndarray:
        return self.M_L @ self.M_R.T

    @property
    def dof(self) -> int:
        return self.r * (2 * self.m - self.r)


def _streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _sample_positions(rng, m, count):
    """``count`` distinct flat positions in an m x m grid, sorted row-major."""
    flat = np.sort(rng.choice(m * m, size=count, replace=False))
    return flat // m, flat % m


def gen_rpca(m: int, rank_frac: float = 0.1, corrupt_frac: float = 0.1, seed: int = 0) -> RpcaInstance:
    """Low-rank plus sparse instance ``D = A + E`` of size m x m.

    ``A = U diag(s) V^T`` with orthonormalized Gaussian factors of width
    ``round(rank_frac * m)`` and ``s = |N(0, 1)| * m / sqrt(r)``. ``E`` has
    ``round(corrupt_frac * m^2)`` nonzeros at distinct uniform positions,
    valued uniformly on [-500, 500].
    """
    if not 0 < rank_frac < 1 or not 0 <= corrupt_frac < 1:
        raise ValueError("rank_frac must be in (0, 1) and corrupt_frac in [0, 1)")
    r = int(round(rank_frac * m))
    if not 1 <= r < m:
        raise ValueError(f"rank {r} must lie in [1, m)")
    f_rng, s_rng, v_rng = _streams(seed, 3)
    U = thin_qr(f_rng.standard_normal((m, r)))[0]
    V = thin_qr(f_rng.standard_normal((m, r)))[0]
    s = np.abs(f_rng.standard_normal(r)) * m / np.sqrt(r)
    A = (U * s) @ V.T
    count = int(round(corrupt_frac * m * m))
    rows, cols = _sample_positions(s_rng, m, count)
    vals = v_rng.uniform(-500.0, 500.0, size=count)
    E = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    return RpcaInstance(D=A + E.toarray(), A_true=A, E_true=E, seed=seed, m=m, rank=r, n_corrupt=count)


def mc_sample_size(m: int, r: int, ratio_s_dr: float) -> int:
    """Number of observed entries ``round(ratio * r * (2m - r))``."""
    return int(round(ratio_s_dr * r * (2 * m - r)))


def gen_mc(m: int, r: int, ratio_s_dr: float, seed: int = 0) -> McInstance:
    """Rank-r product of Gaussian factors with ``ratio * d_r`` uniformly sampled entries."""
    if not 1 <= r <= m:
        raise ValueError(f"rank {r} must lie in [1, m]")
    s = mc_sample_size(m, r, ratio_s_dr)
    if not 1 <= s <= m * m:
        raise ValueError(f"sample size {s} must lie in [1, m^2 = {m * m}]")
    f_rng, s_rng = _streams(seed, 2)
    M_L = f_rng.standard_normal((m, r))
    M_R = f_rng.standard_normal((m, r))
    rows, cols = _sample_positions(s_rng, m, s)
    return McInstance(M_L=M_L, M_R=M_R, rows=rows, cols=cols, seed=seed, m=m, r=r)


def export_instance(instance, directory: str | os.PathLike) -> list[Path]:
    """Write an instance's matrices as Matrix Market files into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(instance, RpcaInstance):
        files = {"D.mtx": instance.D, "A_true.mtx": instance.A_true, "E_true.mtx": instance.E_true}
    elif isinstance(instance, McInstance):
        observed = sp.csr_matrix((instance.values, (instance.rows, instance.cols)),
                                 shape=(instance.m, instance.m))
        files = {"observed.mtx": observed, "M_L.mtx": instance.M_L, "M_R.mtx": instance.M_R}
    else:
        raise TypeError(f"cannot export {type(instance).__name__}")
    paths = []
    for name, M in files.items():
        write_mtx(out / name, M)
        paths.append(out / name)
    return paths
