"""Calibration, sampling and verification for matrix-valued Gaussian
differential privacy."""
from dpmc._backend import BACKEND
from dpmc.calibration import (PrivacyBound, PrivacyBudget, RdpPoint, calibrate,
                              g_eval, rdp_epsilon, solve_bound_analytic,
                              solve_bound_bisection)
from dpmc.matnorm import (CovariancePair, SingularSpectrum, delta_prime_norm,
                          frobenius_norm, make_rng, read_matrix,
                          sample_matrix_normal, sample_snd, svd, write_matrix)
from dpmc.mechanisms import (DesignResult, MechanismSpec, MvgParams,
                             UtilitySubspace, expected_error, harmonic,
                             imgm_perturb, mvg_iid_sigma, mvg_singular_bound,
                             optimal_design)
from dpmc.scalar_gauss import bisect_monotone, std_normal_cdf, std_normal_cdf_inv

__version__ = "0.1.0"
