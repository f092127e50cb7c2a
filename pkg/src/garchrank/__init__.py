"""Rank-based k-sample tests for the equality of GARCH innovation distributions."""

from .covariance import DensityEstimate, SigmaHat, assemble_sigma, kde
from .errors import DivergenceError, FitError, StudyError
from .garch import (GarchSpec, InitRule, InnovationDist, LyapunovEstimate,
                    MixtureNormal, SimulatedSample, StandardNormal, StudentT,
                    innovation_family, lyapunov_exponent, simulate,
                    volatility_gradient, volatility_recursion)
from .ksample import (BootstrapResult, RemainderDiagnostic, TestResult,
                      asymptotic_test, bootstrap_test, chi2_survival,
                      decompose_diagnostic)
from .qml import (FitResult, ModelDiagnostics, compute_A, estimate_U,
                  estimate_delta, estimate_kappa, estimate_tau, evaluate_at,
                  fit, model_diagnostics, negative_quasi_loglik)
from .ranks import (Edf, Klotz, Mood, PooledSample, Score, VanDerWaerden,
                    Wilcoxon, edf, linear_statistics, null_mean, pooled_edf,
                    score_by_name, score_eval)

__version__ = "0.1.0"
