"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, InvalidPolicy, NotAllProper
from .mdp import Policy, SspMdp, as_policy, check_all_policies_proper, validate_mdp


def check_mdp(mdp, require_all_proper: bool = False) -> SspMdp:
    """Coerce a model description to :class:`SspMdp`, optionally enforcing properness."""
    mdp = validate_mdp(mdp)
    if require_all_proper:
        ok, witness = check_all_policies_proper(mdp)
        if not ok:
            raise NotAllProper("model admits an improper policy", witness)
    return mdp


def check_policy(mdp: SspMdp, mu) -> Policy:
    mu = as_policy(mu)
    mdp.policy_rows(mu)
    return mu


def check_value_vector(mdp: SspMdp, J) -> np.ndarray:
    J = np.asarray(J, dtype=np.float64)
    if J.shape != (mdp.n,):
        raise DimensionMismatch(f"value vector has shape {J.shape}, expected ({mdp.n},)")
    if not np.all(np.isfinite(J)):
        raise ValueError("value vector has non-finite entries")
    return J


def check_states(n: int, states) -> np.ndarray:
    """0-based indices for 1-based state labels."""
    idx = np.atleast_1d(np.asarray(states, dtype=np.int64))
    if idx.ndim != 1:
        raise ValueError("states must be a 1-d sequence of labels")
    if idx.size and (idx.min() < 1 or idx.max() > n):
        raise InvalidPolicy(f"state labels must lie in 1..{n}")
    return idx - 1
