"""Generalized likelihood ``L_beta`` for mixture models with observational nonidentifiability."""
from .errors import *  # noqa: F401,F403
from .likelihood import (
    FiniteJoint,
    ObservedMarginal,
    beta_derivative,
    entropy_profile,
    expansion_estimate,
    h_likelihood,
    hellinger,
    joint_entropy,
    log_generalized_likelihood,
    log_marginal_likelihood,
    relative_entropy,
    top_u_likelihood,
    zeta_kernel,
)

__version__ = "0.1.0"
