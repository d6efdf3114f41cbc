"""Identifiability certificates and spectral recovery for finite mixtures of product PMFs."""

from .identifiability import IdentifiabilityReport, certify, incoherence_profile, separating_witness
from .metrics import component_error, l2_error, slope_fit, theoretical_bounds
from .model import (
    Dataset,
    JointTensor,
    MixtureSpec,
    bernoulli_mixture_spec,
    binomial_counterexample,
    conditional_iid_spec,
    empirical_tensor,
    joint_tensor,
    marginalize,
    sample,
    sim1_spec,
    sim2_spec,
    validate_spec,
)
from .recovery import RecoveryResult, align_components, recover_all, recover_block

__version__ = "0.1.0"
