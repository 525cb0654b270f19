"""Bayesian optimization that detects and removes outlier observations.

The surrogate is a Gaussian process; on a periodic schedule a Student-t
observation model (via a Laplace approximation of the latent posterior)
reclassifies every observation, and the acquisition step runs on a clean
GP fitted to the surviving points.
"""

from .acquisition import AcquisitionEval, expected_improvement, \
    maximize_acquisition
from .bench import BenchSpec, GPFunctionDraw, TrialRecord, aggregate, \
    inject_outliers, run_trials, sample_gp_function
from .bo_loop import BOConfig, BOResult, BOState, latin_hypercube, new_state, \
    replay_state, run_bo, suggest, tell
from .data import Dataset
from .gp_exact import GaussianGP, Prediction, exact_posterior, fit_exact, \
    nlml, predict, predict_batch
from .gp_laplace import LaplaceGP, StudentTLik, fit_laplace, laplace_evidence, \
    laplace_mode, predict_latent, predict_latent_batch, t_logpdf
from .kernels import KernelFamily, KernelSpec, gram, kernel_value, \
    matern52_spec, rq_spec, scaled_distance
from .linalg import NumericalError, jittered_cholesky
from .robust import Direction, OutlierFlags, Schedule, active_subset, \
    classify_outliers, should_run_detection

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
