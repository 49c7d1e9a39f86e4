"""Block Lanczos with warm start for the partial SVDs inside nuclear norm solvers."""
from .block_lanczos import WarmStart, adapt_subspace, bl_evd, block_lanczos_procedure, blws_svd
from .core import (AugmentedOperator, DenseOperator, LinearOperator, SparseOperator, augment,
                   full_svd_small, read_mtx, sym_evd_small, thin_qr, write_mtx)
from .estimators import MatrixCompletion, RobustPCA
from .lanczos import Reorth, lanczos_partial_evd, lanczos_partial_svd, lanczos_procedure
from .prox import BlwsSvd, FullSvd, LanczosSvd, RankPredictor, make_backend, predict_rank, shrink, svt
from .solvers import McProblem, RpcaProblem, SolverStats, mc_svt, rpca_adm
from .synthdata import gen_mc, gen_rpca

__version__ = "0.1.0"
