"""Benchmark scenarios, report rows and table emitters.

A scenario generates one synthetic instance, runs one solver with one SVD
backend and reports the table row for it. Only the solve is timed; instance
generation and output are not.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import ClassVar

import numpy as np

from .core import AugmentedOperator, DenseOperator, full_svd_small, sym_evd_small
from .lanczos import lanczos_partial_svd
from .prox import RankPredictor, make_backend, svt, svt_dense
from .solvers import McProblem, RpcaProblem, mc_svt, rpca_adm
from .synthdata import gen_mc, gen_rpca, mc_sample_size

PROBLEMS = ("rpca", "mc")
BACKENDS = ("full", "lanczos", "blws")
FORMATS = ("csv", "markdown")
THREADS_ENV = "BLWS_NNM_THREADS"


class ConfigError(ValueError):
    """An invalid scenario configuration."""


@dataclass
class ScenarioConfig:
    problem: str = "rpca"
    m: int = 500
    rank_frac: float = 0.1
    corrupt_frac: float = 0.1
    rank: int = 10
    ratio: float = 6.0
    backend: str = "blws"
    k: int = 2
    oversample: int = 10
    seed: int = 1
    tol: float | None = None
    max_iter: int | None = None
    out: str | None = None
    format: str = "csv"

    def validate(self) -> "ScenarioConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.problem in PROBLEMS, f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        need(self.backend in BACKENDS, f"backend must be one of {BACKENDS}, got {self.backend!r}")
        need(self.format in FORMATS, f"format must be one of {FORMATS}, got {self.format!r}")
        need(isinstance(self.m, int) and self.m >= 2, f"m must be an integer >= 2, got {self.m!r}")
        need(isinstance(self.k, int) and self.k >= 1, "k must be an integer >= 1")
        need(isinstance(self.oversample, int) and self.oversample >= 0, "oversample must be >= 0")
        need(self.tol is None or self.tol > 0, "tol must be positive")
        need(self.max_iter is None or self.max_iter >= 1, "max-iter must be >= 1")
        if self.problem == "rpca":
            need(0 < self.rank_frac < 1, "rank-frac must lie in (0, 1)")
            need(0 <= self.corrupt_frac < 1, "corrupt-frac must lie in [0, 1)")
            need(1 <= round(self.rank_frac * self.m) < self.m, "rank-frac * m must round into [1, m)")
        else:
            need(isinstance(self.rank, int) and 1 <= self.rank <= self.m, "rank must lie in [1, m]")
            need(self.ratio > 0, "ratio must be positive")
            need(mc_sample_size(self.m, self.rank, self.ratio) <= self.m ** 2,
                 "ratio * r * (2m - r) exceeds m^2 entries")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        clean = {}
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            clean[name] = value
        return cls(**clean)


# ----------------------------------------------------------------------------
# Report rows
# ----------------------------------------------------------------------------


def _sci3(x: float) -> str:
    return f"{x:.2e}"


def _round_sci3(x: float | None) -> float | None:
    return None if x is None else float(_sci3(x))


@dataclass
class ReportRow:
    """Common base: subclasses list their CSV columns in ``COLUMNS``."""

    COLUMNS: ClassVar[tuple] = ()
    LABELS: ClassVar[tuple] = ()
    problem: ClassVar[str] = ""

    def cells(self) -> list[str]:
        raise NotImplementedError


@dataclass
class RpcaRow(ReportRow):
    m: int
    method: str
    rel_err: float
    rank_hat: int
    e_l0: int
    iters: int
    time_s: float
    matvecs: int
    converged: bool = True

    COLUMNS: ClassVar[tuple] = ("m", "method", "rel_err", "rank_hat", "e_l0", "iters", "time_s", "matvecs")
    LABELS: ClassVar[tuple] = ("m", "method", "‖Â−A‖_F/‖A‖_F", "rank(Â)", "‖Ê‖_0", "#iter", "time(s)",
                               "matvecs")
    problem: ClassVar[str] = "rpca"

    def cells(self):
        return [str(self.m), self.method, _sci3(self.rel_err), str(self.rank_hat), str(self.e_l0),
                str(self.iters), f"{self.time_s:.2f}", str(self.matvecs)]


@dataclass
class McRow(ReportRow):
    m: int
    r: int
    s_dr: float
    s_m2: float
    algorithm: str
    time_s: float
    iters: int
    rel_err: float
    matvecs: int
    converged: bool = True

    COLUMNS: ClassVar[tuple] = ("m", "r", "s_dr", "s_m2", "algorithm", "time_s", "iters", "rel_err", "matvecs")
    LABELS: ClassVar[tuple] = ("m", "r", "s/d_r", "s/m²", "algorithm", "time(s)", "#iter",
                               "‖Â−A‖_F/‖A‖_F", "matvecs")
    problem: ClassVar[str] = "mc"

    def cells(self):
        return [str(self.m), str(self.r), f"{self.s_dr:g}", f"{self.s_m2:.3f}", self.algorithm,
                f"{self.time_s:.2f}", str(self.iters), _sci3(self.rel_err), str(self.matvecs)]


METHOD_NAMES = {
    "rpca": {"full": "ADM-exact", "lanczos": "ADM", "blws": "BLWS-ADM"},
    "mc": {"full": "SVT-exact", "lanczos": "SVT", "blws": "BLWS-SVT"},
}


def run_scenario(config: ScenarioConfig) -> ReportRow:
    """Generate the instance, solve it and return its report row."""
    config.validate()
    backend = make_backend(config.backend, k=config.k, oversample=config.oversample, rng=config.seed)
    opts = {}
    if config.tol is not None:
        opts["tol"] = config.tol
    if config.max_iter is not None:
        opts["max_iter"] = config.max_iter
    name = METHOD_NAMES[config.problem][config.backend]

    if config.problem == "rpca":
        inst = gen_rpca(config.m, config.rank_frac, config.corrupt_frac, seed=config.seed)
        res = rpca_adm(RpcaProblem(inst.D), backend, A_true=inst.A_true, seed=config.seed, **opts)
        st = res.stats
        return RpcaRow(m=config.m, method=name, rel_err=_round_sci3(st.rel_err), rank_hat=st.rank_hat,
                       e_l0=st.e_l0, iters=st.iterations, time_s=st.wall_time, matvecs=st.matvec_count,
                       converged=st.converged)

    inst = gen_mc(config.m, config.rank, config.ratio, seed=config.seed)
    res = mc_svt(McProblem.from_instance(inst), backend, A_true=inst.A_true, seed=config.seed, **opts)
    st = res.stats
    return McRow(m=config.m, r=config.rank, s_dr=float(config.ratio),
                 s_m2=round(inst.s / config.m ** 2, 3), algorithm=name, time_s=st.wall_time,
                 iters=st.iterations, rel_err=_round_sci3(st.rel_err), matvecs=st.matvec_count,
                 converged=st.converged)


# ----------------------------------------------------------------------------
# Tables
# ----------------------------------------------------------------------------


def _scenario_key(row: ReportRow):
    return (row.m,) if isinstance(row, RpcaRow) else (row.m, row.r, row.s_dr)


def _method(row: ReportRow) -> str:
    return row.method if isinstance(row, RpcaRow) else row.algorithm


def speedups(rows) -> list[tuple[tuple, float]]:
    """Baseline time over BLWS time for each scenario that has both rows."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(_scenario_key(row), {})[_method(row)] = row
    out = []
    for key, by_method in groups.items():
        names = METHOD_NAMES[rows[0].problem]
        blws = by_method.get(names["blws"])
        base = by_method.get(names["lanczos"]) or by_method.get(names["full"])
        if blws is not None and base is not None and blws.time_s > 0:
            out.append((key, base.time_s / blws.time_s))
    return out


def emit_table(rows, fmt: str = "csv") -> str:
    """Render homogeneous rows as CSV or a Markdown pipe table.

    A ``converged`` column is added only when some row did not converge.
    Scenarios present with both a baseline and a BLWS row get a trailing
    ``speedup=`` line (keyed by scenario when there is more than one).
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    kind = type(rows[0])
    if any(type(r) is not kind for r in rows):
        raise ValueError("cannot mix RPCA and MC rows in one table")
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    flag = not all(r.converged for r in rows)
    body = [r.cells() + ([str(r.converged).lower()] if flag else []) for r in rows]

    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(kind.COLUMNS) + (["converged"] if flag else []))
        writer.writerows(body)
        text = buf.getvalue()
    else:
        header = list(kind.LABELS) + (["converged"] if flag else [])
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(cells) + " |" for cells in body]
        text = "\n".join(lines) + "\n"

    ratios = speedups(rows)
    for key, value in ratios:
        label = "speedup" if len(ratios) == 1 else "speedup[" + ",".join(map(str, key)) + "]"
        text += f"{label}={value:.2f}\n"
    return text


def parse_csv(text: str) -> list[ReportRow]:
    """Inverse of :func:`emit_table` for CSV output (speedup lines are skipped)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("speedup")]
    reader = csv.reader(lines)
    header = next(reader)
    base = [h for h in header if h != "converged"]
    kind = {RpcaRow.COLUMNS: RpcaRow, McRow.COLUMNS: McRow}.get(tuple(base))
    if kind is None:
        raise ValueError(f"unrecognized header {header}")
    types = {f.name: f.type for f in fields(kind)}
    casts = {"int": int, "float": float, "str": str}
    rows = []
    for record in reader:
        values = dict(zip(header, record))
        kwargs = {name: casts[types[name]](values[name]) for name in base}
        if "converged" in values:
            kwargs["converged"] = values["converged"] == "true"
        rows.append(kind(**kwargs))
    return rows


def non_timing(row: ReportRow) -> dict:
    data = asdict(row)
    data.pop("time_s")
    return data


# ----------------------------------------------------------------------------
# Reproduction grid
# ----------------------------------------------------------------------------

GRIDS = {
    # (problem, m, extra) tuples; extra is (rank_frac, corrupt_frac) or (r, ratio)
    "quick": [("rpca", 100, (0.1, 0.1)), ("mc", 200, (5, 6.0))],
    "desk": [("rpca", 500, (0.1, 0.1)), ("rpca", 1000, (0.1, 0.1)), ("mc", 1000, (10, 6.0))],
}


def grid_configs(grid: str = "desk", backends=("lanczos", "blws"), **common) -> list[ScenarioConfig]:
    if grid not in GRIDS:
        raise ConfigError(f"unknown grid {grid!r}; choose from {sorted(GRIDS)}")
    configs = []
    for problem, m, extra in GRIDS[grid]:
        for backend in backends:
            if problem == "rpca":
                cfg = ScenarioConfig(problem=problem, m=m, rank_frac=extra[0], corrupt_frac=extra[1],
                                     backend=backend, **common)
            else:
                cfg = ScenarioConfig(problem=problem, m=m, rank=extra[0], ratio=extra[1],
                                     backend=backend, **common)
            configs.append(cfg.validate())
    return configs


def worker_slots(requested: int) -> int:
    """Requested worker count, capped by the BLWS_NNM_THREADS environment variable."""
    if requested < 1:
        raise ConfigError("workers must be >= 1")
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            requested = min(requested, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return requested


def run_many(configs, workers: int = 1) -> list[ReportRow]:
    if workers <= 1:
        return [run_scenario(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, configs))


# ----------------------------------------------------------------------------
# Self-checks behind the ``svd-check`` subcommand
# ----------------------------------------------------------------------------


def augmented_spectrum_check(trials: int = 100, max_dim: int = 40, seed: int = 0) -> dict:
    """Eigenvalues of [[0, W], [W^T, 0]] against +-sigma and zeros, plus unpacked orthonormality."""
    rng = np.random.default_rng(seed)
    worst_eig = worst_orth = 0.0
    for _ in range(trials):
        m, n = rng.integers(1, max_dim + 1, size=2)
        W = rng.standard_normal((m, n))
        S = full_svd_small(W)[1]
        aug = AugmentedOperator(DenseOperator(W))
        V, lam = sym_evd_small(aug.to_dense())
        expected = np.sort(np.concatenate([S, -S, np.zeros(m + n - 2 * S.size)]))[::-1]
        worst_eig = max(worst_eig, np.max(np.abs(lam - expected)) / S[0])
        p = S.size
        Y = V[:, :p]
        U_hat, V_hat = np.sqrt(2.0) * Y[:m], np.sqrt(2.0) * Y[m:]
        for X in (U_hat, V_hat):
            worst_orth = max(worst_orth, np.linalg.norm(X.T @ X - np.eye(p)))
    return {"trials": trials, "eig_err": float(worst_eig), "orth_err": float(worst_orth),
            "passed": bool(worst_eig <= 1e-10 and worst_orth <= 1e-8)}


def slowly_varying_sequence(n: int, rank: int, steps: int, rel_step: float, rng):
    """Matrices ``W_0 + i * h * Delta`` with a decaying rank-``rank`` part plus small noise.

    ``h`` is chosen so each step changes the matrix by ``rel_step * ||W_0||_2``.
    """
    U = np.linalg.qr(rng.standard_normal((n, rank)))[0]
    V = np.linalg.qr(rng.standard_normal((n, rank)))[0]
    W0 = (U * (10.0 * 0.8 ** np.arange(rank))) @ V.T + 0.01 * rng.standard_normal((n, n)) / math.sqrt(n)
    delta = rng.standard_normal((n, n))
    delta *= rel_step * np.linalg.norm(W0, 2) / np.linalg.norm(delta, 2)
    return [W0 + i * delta for i in range(steps)]


def prox_agreement_check(trials: int = 50, n: int = 200, keep: int = 10, warm_iters: int = 3,
                         rel_step: float = 1e-4, seed: int = 0) -> dict:
    """Thresholding through lanczos and blws against the dense oracle on varying sequences."""
    worst = {"lanczos": 0.0, "blws": 0.0}
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        seq = slowly_varying_sequence(n, 30, warm_iters + 1, rel_step, rng)
        for name in worst:
            backend = make_backend(name, rng=rng.integers(2 ** 32))
            predictor = RankPredictor(r=keep)
            for W in seq:
                s = np.linalg.svd(W, compute_uv=False)
                eps = 0.5 * (s[keep - 1] + s[keep])
                A = svt(W, eps, backend, predictor).to_dense()
            exact = svt_dense(seq[-1], eps)
            worst[name] = max(worst[name], np.linalg.norm(A - exact) / np.linalg.norm(exact))
    return {"trials": trials, **{f"{k}_err": float(v) for k, v in worst.items()},
            "passed": bool(max(worst.values()) <= 1e-5)}


def lanczos_oracle_check(trials: int = 10, seed: int = 0) -> dict:
    """Baseline partial SVD of random 80 x 60 matrices against the dense SVD."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        W = rng.standard_normal((80, 60))
        S = full_svd_small(W)[1]
        _, s, _, _ = lanczos_partial_svd(DenseOperator(W), 8, rng=rng)
        worst = max(worst, np.max(np.abs(s - S[:8]) / S[:8]))
    return {"trials": trials, "sigma_err": float(worst), "passed": bool(worst <= 1e-7)}
