"""Exact dynamic programming: Bellman operators, solvers and the contraction certificate.

These routines are the ground truth the stochastic algorithms are checked
against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatch,
    ImproperPolicy,
    MaxIterExceeded,
    NonpositiveWeight,
    NotAllProper,
    SingularSystem,
)
from .mdp import Policy, SspMdp, as_policy, check_all_policies_proper, check_policy_proper

logger = logging.getLogger(__name__)

DIRECT_SOLVE_LIMIT = 2000


@dataclass(frozen=True)
class SolveReport:
    value: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True)
class ContractionCertificate:
    """Weights ``xi >= 1`` and modulus ``beta < 1`` with ``||TJ - TJ'||_xi <= beta ||J - J'||_xi``."""

    xi: np.ndarray
    beta: float


def _as_value(mdp: SspMdp, J) -> np.ndarray:
    J = np.asarray(J, dtype=np.float64)
    if J.shape != (mdp.n,):
        raise DimensionMismatch(f"value vector has shape {J.shape}, expected ({mdp.n},)")
    return J


def q_values(mdp: SspMdp, J) -> np.ndarray:
    """One-step lookahead ``g(i,u) + sum_j p_ij(u) J(j)`` for every row."""
    return mdp.costs + mdp.transition_matrix @ _as_value(mdp, J)


def _padded(mdp: SspMdp, per_row: np.ndarray, fill: float) -> np.ndarray:
    out = np.full((mdp.n, mdp.max_actions), fill)
    out[mdp.row_state, mdp.row_position] = per_row
    return out


def bellman_T(mdp: SspMdp, J) -> np.ndarray:
    return _padded(mdp, q_values(mdp, J), np.inf).min(axis=1)


def bellman_T_mu(mdp: SspMdp, mu, J) -> np.ndarray:
    # one product over all rows beats slicing the sparse matrix per call
    return q_values(mdp, J)[mdp.policy_rows(mu)]


def apply_T_mu_k(mdp: SspMdp, mu, J, k: int) -> np.ndarray:
    """``T_mu`` applied ``k`` times; ``k = 0`` returns a copy of ``J``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    rows = mdp.policy_rows(mu)
    P = mdp.transition_matrix[rows]
    g = mdp.costs[rows]
    J = _as_value(mdp, J).copy()
    for _ in range(k):
        J = g + P @ J
    return J


def greedy_policy(mdp: SspMdp, J) -> Policy:
    """Argmin policy of the one-step lookahead; ties go to the lowest action id."""
    pos = _padded(mdp, q_values(mdp, J), np.inf).argmin(axis=1)
    return Policy(tuple(acts[p] for acts, p in zip(mdp.actions, pos)))


def value_iteration(mdp: SspMdp, J0=None, tol: float = 1e-10, max_iter: int = 10**6) -> SolveReport:
    """Iterate ``J <- TJ`` until ``||TJ - J|| < tol``.

    The returned value is the last iterate ``TJ``; since ``T`` is
    non-expansive in the sup-norm its own residual is also below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    J = np.zeros(mdp.n) if J0 is None else _as_value(mdp, J0).copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        TJ = bellman_T(mdp, J)
        residual = float(np.max(np.abs(TJ - J)))
        J = TJ
        if residual < tol:
            return SolveReport(J, it, residual)
    raise MaxIterExceeded(f"value iteration residual {residual:.3e} after {max_iter} iterations")


def exact_policy_value(mdp: SspMdp, mu) -> np.ndarray:
    """Solve ``(I - P_mu) J = g_mu`` by LU factorisation."""
    mu = as_policy(mu)
    report = check_policy_proper(mdp, mu)
    if not report.proper:
        raise ImproperPolicy(
            f"policy never terminates from states {sorted(report.unreachable_states)}"
        )
    if mdp.n > DIRECT_SOLVE_LIMIT:
        raise ValueError(
            f"direct solve limited to {DIRECT_SOLVE_LIMIT} states; use value_iteration"
        )
    rows = mdp.policy_rows(mu)
    A = np.eye(mdp.n) - mdp.transition_matrix[rows].toarray()
    try:
        return np.linalg.solve(A, mdp.costs[rows])
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc


def exact_policy_iteration(mdp: SspMdp, mu0=None, max_iter: int = 10_000):
    """Policy iteration with exact evaluation.

    Returns ``(policy, value, iterations)`` where iterations counts the
    policy evaluations performed.
    """
    mu = as_policy(mu0) if mu0 is not None else Policy(tuple(a[0] for a in mdp.actions))
    for it in range(1, max_iter + 1):
        J = exact_policy_value(mdp, mu)
        nxt = greedy_policy(mdp, J)
        if nxt == mu:
            return mu, J, it
        mu = nxt
    raise MaxIterExceeded(f"policy iteration did not settle in {max_iter} iterations")


def weighted_max_norm(J, xi) -> float:
    J = np.asarray(J, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if J.shape != xi.shape:
        raise DimensionMismatch(f"shapes {J.shape} and {xi.shape} differ")
    if np.any(xi <= 0):
        raise NonpositiveWeight("weights must be positive")
    if J.size == 0:
        return 0.0
    return float(np.max(np.abs(J) / xi))


def contraction_certificate(mdp: SspMdp, tol: float = 1e-10, max_iter: int = 10**6) -> ContractionCertificate:
    """Weights from the maximal expected number of steps to termination.

    ``xi`` solves ``xi(i) = 1 + max_u sum_j p_ij(u) xi(j)``.  ``beta`` is the
    larger of ``max_i (xi(i) - 1) / xi(i)`` and the modulus actually
    realised by the computed ``xi`` over all rows, so the bound stays valid
    despite the iteration tolerance.
    """
    ok, witness = check_all_policies_proper(mdp)
    if not ok:
        raise NotAllProper("model admits an improper policy", witness)
    P = mdp.transition_matrix
    xi = np.ones(mdp.n)
    for _ in range(max_iter):
        nxt = 1.0 + _padded(mdp, P @ xi, -np.inf).max(axis=1)
        done = np.max(np.abs(nxt - xi)) < tol
        xi = nxt
        if done:
            break
    else:
        raise MaxIterExceeded("hitting-time iteration did not converge")
    realised = float(np.max((P @ xi) / xi[mdp.row_state]))
    beta = max(float(np.max((xi - 1.0) / xi)), realised)
    return ContractionCertificate(xi, beta)
