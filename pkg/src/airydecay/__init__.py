"""
airydecay - Airy1 two-point covariance from Fredholm determinants and exponential LPP
"""

__title__ = "airydecay"
__author__ = "CheesyGamer77"
__copyright__ = "Copyright 2021-present CheesyGamer77"
__version__ = "0.1.0"

from .errors import *
from .specfun import AiryValue, airy_ai, airy_ai_scaled, airy_bound_budget
from .quad import QuadratureRule, BlockKernel, gauss_legendre, fredholm_det_scalar, fredholm_det_block, kernel_trace_product
from .airy1kernel import KernelSpec, JointCdfResult, kernel_entries, marginal_f, joint_F, excess_via_factorization, trace_K12K21, trace_asymptotic
from .covariance import CovarianceEstimate, DecayFit, hoeffding_cov, airy1_variance, lower_window_cov, cov_sweep, decay_exponent_fit, bound_envelope_check, fit_envelope_constants
