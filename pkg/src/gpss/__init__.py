"""Sparse recovery by gradient projection onto the l1-ball with adaptive
Barzilai-Borwein steplengths, plus ISTA, FISTA and projected steepest
descent baselines and an approximation-isochrone benchmark harness."""

from .operator import (CountingOperator, DenseOperator, GeneratedProblem, LinearOperator,
                       gen_gaussian_problem, gen_illconditioned_problem, load_problem,
                       save_problem, spectral_norm_estimate)
from .prox import (L1Ball, lambda_from_rho, lambda_max, project_l1_ball, rho_from_lambda,
                   soft_threshold)
from .solvers import (GPConfig, Objective, SolverState, StopRule, fista_solve, gpss_solve,
                      ista_solve, psd_solve)

__version__ = "0.1.0"
