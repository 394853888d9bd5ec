"""Preconditioning of block matrices whose blocks are rectangular Toeplitz
matrices generated by (matrix-valued) symbols."""
from ._backend import BACKEND
from .analysis import (ClusterStats, SpectrumReport, cluster_stats, condition_report, eigenvalues,
                       singular_values, weyl_discrepancy)
from .assembly import (BlockLayout, BlockMatrixSpec, BlockOperator, assemble_A, assemble_A_hat,
                       assemble_A_tilde, assemble_symbol_F, group3_modify, permutation_pi)
from .krylov import KrylovConfig, SolveReport, cg, cgne, gmres, predict_pcg_iterations
from .precond import PrecondPlan, build_precond
from .presets import PRESETS, get_preset, list_presets
from .runner import emit_table, run_experiment
from .structmat import (CirculantOperator, TauOperator, ToeplitzOperator, chan_circulant, hankel,
                        strang_circulant, tau, toeplitz, toeplitz_rect)
from .symbols import Symbol, TrigPolynomial, catalog, eval_symbol, fourier_coefficient, grunwald_g

__version__ = "0.1.0"
