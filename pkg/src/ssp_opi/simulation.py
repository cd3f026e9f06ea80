"""Reproducible episode simulation and the per-episode Monte Carlo / TD(lambda) targets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .exceptions import DimensionMismatch, LambdaOutOfRange, TruncatedSample
from .mdp import SspMdp

DEFAULT_CUTOFF = 10**6


@dataclass(frozen=True)
class RngStream:
    """Random stream identified by ``(seed, t, state)``.

    Two streams with the same triple produce the same variates on every
    platform and in every thread.
    """

    seed: int
    t: int
    state: int

    @property
    def key(self) -> np.uint64:
        # numba boxes uint64 results as Python ints; re-wrap so callers stay in uint64
        return np.uint64(K.stream_key(K.as_u64(self.seed), K.as_u64(self.t), K.as_u64(self.state)))

    def uniforms(self, count: int) -> np.ndarray:
        return K.uniforms(self.key, int(count))


@dataclass(frozen=True)
class TrajectorySample:
    """One episode; ``states`` ends in 0 unless ``truncated``."""

    states: tuple
    costs: tuple
    truncated: bool

    @property
    def steps(self) -> int:
        return len(self.costs)


def _kernel_args(mdp: SspMdp, rows):
    return (np.asarray(rows, dtype=np.int64), mdp.indptr, mdp.indices, mdp.probs,
            mdp.term_probs, mdp.costs)


def sample_trajectory(mdp: SspMdp, mu, start: int, rng: RngStream, cutoff: int = DEFAULT_CUTOFF) -> TrajectorySample:
    """Simulate ``mu`` from state ``start`` until termination or ``cutoff`` steps."""
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    if not 1 <= start <= mdp.n:
        raise ValueError(f"start state {start} outside 1..{mdp.n}")
    args = _kernel_args(mdp, mdp.policy_rows(mu))
    J = np.zeros(mdp.n)
    key = rng.key
    _, _, steps, _ = K.episode(start - 1, *args, J, 0.0, key, cutoff,
                               np.empty(0, dtype=np.int64), np.empty(0))
    states = np.empty(steps + 1, dtype=np.int64)
    costs = np.empty(steps)
    _, _, _, truncated = K.episode(start - 1, *args, J, 0.0, key, cutoff, states, costs)
    labels = tuple(int(s) + 1 for s in states)
    return TrajectorySample(labels, tuple(float(c) for c in costs), bool(truncated))


def trajectory_cost(sample: TrajectorySample) -> float:
    """Total cost of a terminated episode, an unbiased sample of ``J^mu(start)``."""
    if sample.truncated:
        raise TruncatedSample("episode was truncated before termination")
    return float(sum(sample.costs))


def td_lambda_target(sample: TrajectorySample, J, lam: float) -> float:
    """``sum_k lam^k d_k`` with ``d_k = g_k + J(i_{k+1}) - J(i_k)`` and ``J(0) = 0``."""
    if sample.truncated:
        raise TruncatedSample("episode was truncated before termination")
    if not 0.0 <= lam < 1.0:
        raise LambdaOutOfRange(f"lambda must lie in [0, 1), got {lam}")
    J = np.concatenate([[0.0], np.asarray(J, dtype=np.float64)])
    if max(sample.states) >= len(J):
        raise DimensionMismatch("value vector is shorter than the visited states")
    total = 0.0
    weight = 1.0
    for k, c in enumerate(sample.costs):
        total += weight * (c + J[sample.states[k + 1]] - J[sample.states[k]])
        weight *= lam
    return total


def sample_targets(mdp: SspMdp, mu, start: int, count: int, J=None, lam: float = 0.0,
                   seed: int = 0, cutoff: int = DEFAULT_CUTOFF):
    """Monte Carlo returns and TD(lambda) targets of ``count`` episodes from ``start``.

    Episode ``k`` uses stream ``(seed, k, start)``.  Returns ``(returns,
    td_targets, steps)``; raises TruncatedSample if any episode hit the cutoff.
    """
    if not 0.0 <= lam < 1.0:
        raise LambdaOutOfRange(f"lambda must lie in [0, 1), got {lam}")
    J = np.zeros(mdp.n) if J is None else np.asarray(J, dtype=np.float64)
    rows, *rest = _kernel_args(mdp, mdp.policy_rows(mu))
    mc, td, steps, trunc = K.repeat_from(start - 1, int(count), rows, *rest, J, float(lam),
                                         K.as_u64(seed), int(cutoff))
    if trunc.any():
        raise TruncatedSample(f"{int(trunc.sum())} of {count} episodes truncated")
    return mc, td, steps
