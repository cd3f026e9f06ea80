"""Stochastic shortest path toolkit: exact DP and optimistic policy iteration."""

from .dp import (
    ContractionCertificate,
    SolveReport,
    apply_T_mu_k,
    bellman_T,
    bellman_T_mu,
    contraction_certificate,
    exact_policy_iteration,
    exact_policy_value,
    greedy_policy,
    value_iteration,
    weighted_max_norm,
)
from .mdp import (
    Policy,
    PropernessReport,
    SspMdp,
    check_all_policies_proper,
    check_policy_proper,
    enumerate_policies,
    policy_matrices,
    rho_mu,
    validate_mdp,
)

__version__ = "0.1.0"
