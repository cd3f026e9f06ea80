"""Optimistic policy iteration with Monte Carlo or TD(lambda) evaluation.

At iteration ``t`` one episode is simulated from every state under the
greedy policy ``mu_t``, all states are updated synchronously against the
same ``J_t``, and the greedy policy is recomputed from ``J_{t+1}``.
"""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

import numba
import numpy as np

from . import _kernels as K
from .diagnostics import LogRow, RunLog
from .exceptions import LambdaOutOfRange, NotAllProper, TruncatedEpisode
from .mdp import Policy, SspMdp, check_all_policies_proper
from .simulation import DEFAULT_CUTOFF

logger = logging.getLogger(__name__)

MONTE_CARLO = "monte_carlo"
TD_LAMBDA = "td_lambda"
_METHOD_ALIASES = {"mc": MONTE_CARLO, MONTE_CARLO: MONTE_CARLO, "td": TD_LAMBDA, TD_LAMBDA: TD_LAMBDA}

THREADS_ENV = "SSP_OPI_THREADS"
_AUTO_PARALLEL_MIN_STATES = 64


@dataclass(frozen=True)
class StepSchedule:
    """Polynomial step sizes ``a / (b + t + 1) ** p``.

    ``p`` in (0.5, 1] gives a divergent sum with a finite sum of squares;
    ``a <= (b + 1) ** p`` keeps every step in (0, 1].
    """

    a: float = 1.0
    b: float = 0.0
    p: float = 1.0
    family: str = "polynomial"

    def __post_init__(self):
        if self.family != "polynomial":
            raise ValueError(f"unknown step-size family {self.family!r}")
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not self.b >= 0:
            raise ValueError("b must be non-negative")
        if not 0.5 < self.p <= 1.0:
            raise ValueError("p must lie in (0.5, 1]")
        if self.a > (self.b + 1.0) ** self.p:
            raise ValueError("a must not exceed (b + 1) ** p, or the first step exceeds 1")

    def __call__(self, t: int) -> float:
        return self.a / (self.b + t + 1.0) ** self.p


def step_size(schedule: StepSchedule, t: int) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    return schedule(t)


def _check_lambda(lam) -> float:
    lam = float(lam)
    if lam == 1.0:
        raise LambdaOutOfRange("lambda = 1 is the Monte Carlo method; use method 'monte_carlo' (--method mc)")
    if not 0.0 <= lam < 1.0:
        raise LambdaOutOfRange(f"lambda must lie in [0, 1), got {lam}")
    return lam


@dataclass(frozen=True)
class OpiConfig:
    method: str = MONTE_CARLO
    lam: Optional[float] = None
    schedule: StepSchedule = field(default_factory=StepSchedule)
    iterations: int = 1000
    seed: int = 0
    cutoff: int = DEFAULT_CUTOFF
    record_every: int = 100

    def __post_init__(self):
        method = _METHOD_ALIASES.get(self.method)
        if method is None:
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "method", method)
        if method == MONTE_CARLO:
            if self.lam is not None:
                raise ValueError("lambda is only meaningful for td_lambda")
        else:
            if self.lam is None:
                raise ValueError("td_lambda requires lambda")
            object.__setattr__(self, "lam", _check_lambda(self.lam))
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = {k: d["schedule"][k] for k in ("family", "a", "b", "p")}
        return d


@dataclass(frozen=True)
class OpiState:
    """Iterate ``J_t`` together with its greedy policy ``mu_t``."""

    t: int
    J: np.ndarray
    mu: Policy

    @classmethod
    def initial(cls, mdp: SspMdp, J0=None) -> "OpiState":
        J = np.zeros(mdp.n) if J0 is None else np.asarray(J0, dtype=np.float64).copy()
        rows, _ = _greedy(mdp, J)
        return cls(0, J, mdp.policy_from_rows(rows))


def resolve_threads(threads: Optional[int] = None) -> int:
    """Thread count from the argument or ``SSP_OPI_THREADS`` (0 = auto)."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        threads = int(raw)
    if threads < 0:
        raise ValueError(f"{THREADS_ENV} must be non-negative")
    return threads


def _sweep(mdp: SspMdp, rows, J, lam, seed, t, cutoff, threads):
    threads = resolve_threads(threads)
    available = numba.config.NUMBA_NUM_THREADS
    if threads == 0:
        parallel = mdp.n >= _AUTO_PARALLEL_MIN_STATES and available > 1
        threads = available
    else:
        parallel = threads > 1
    args = (rows, mdp.indptr, mdp.indices, mdp.probs, mdp.term_probs, mdp.costs,
            J, float(lam), K.as_u64(seed), K.as_u64(t), int(cutoff))
    if parallel:
        numba.set_num_threads(min(threads, available))
        mc, td, _, trunc = K.sweep_parallel(*args)
    else:
        mc, td, _, trunc = K.sweep_serial(*args)
    if trunc.any():
        bad = [int(i) + 1 for i in np.flatnonzero(trunc)]
        raise TruncatedEpisode(
            f"iteration {t}: episodes from states {bad} reached the {cutoff}-step cutoff; "
            "the policy is probably improper"
        )
    return mc, td


def _greedy(mdp: SspMdp, J):
    return K.greedy_rows(mdp.row_start, mdp.indptr, mdp.indices, mdp.probs, mdp.costs, J)


def mc_opi_step(mdp: SspMdp, state: OpiState, schedule: StepSchedule, seed: int,
                cutoff: int = DEFAULT_CUTOFF, threads: Optional[int] = None) -> OpiState:
    """``J_{t+1}(i) = (1 - gamma_t) J_t(i) + gamma_t * (cost of one episode from i)``."""
    rows = mdp.policy_rows(state.mu)
    gamma = schedule(state.t)
    mc, _ = _sweep(mdp, rows, state.J, 0.0, seed, state.t, cutoff, threads)
    J = (1.0 - gamma) * state.J + gamma * mc
    nxt, _ = _greedy(mdp, J)
    return OpiState(state.t + 1, J, mdp.policy_from_rows(nxt))


def td_opi_step(mdp: SspMdp, state: OpiState, lam: float, schedule: StepSchedule, seed: int,
                cutoff: int = DEFAULT_CUTOFF, threads: Optional[int] = None) -> OpiState:
    """``J_{t+1}(i) = J_t(i) + gamma_t * sum_k lam^k d_k`` over one episode from ``i``."""
    lam = _check_lambda(lam)
    rows = mdp.policy_rows(state.mu)
    gamma = schedule(state.t)
    _, td = _sweep(mdp, rows, state.J, lam, seed, state.t, cutoff, threads)
    J = state.J + gamma * td
    nxt, _ = _greedy(mdp, J)
    return OpiState(state.t + 1, J, mdp.policy_from_rows(nxt))


def run_opi(mdp: SspMdp, config: OpiConfig, oracle=None, threads: Optional[int] = None) -> RunLog:
    """Run ``config.iterations`` OPI steps from ``J_0 = 0``.

    A row is recorded at ``t = 0``, after every ``record_every`` updates and
    after the last update.  ``oracle`` is ``J*``; when given, rows carry the
    sup-norm error.
    """
    ok, witness = check_all_policies_proper(mdp)
    if not ok:
        raise NotAllProper("model admits an improper policy", witness)
    oracle = None if oracle is None else np.asarray(oracle, dtype=np.float64)
    schedule = config.schedule
    td_mode = config.method == TD_LAMBDA
    lam = config.lam if td_mode else 0.0

    log = RunLog(config=config.to_dict())
    J = np.zeros(mdp.n)
    rows, TJ = _greedy(mdp, J)
    changed = False

    def record(t):
        err = None if oracle is None else float(np.max(np.abs(J - oracle)))
        log.rows.append(LogRow(t, schedule(t), float(np.max(TJ - J)), err, changed, J.copy()))

    record(0)
    for t in range(config.iterations):
        gamma = schedule(t)
        mc, td = _sweep(mdp, rows, J, lam, config.seed, t, config.cutoff, threads)
        if td_mode:
            J = J + gamma * td
        else:
            J = (1.0 - gamma) * J + gamma * mc
        new_rows, TJ = _greedy(mdp, J)
        if not np.array_equal(new_rows, rows):
            log.policy_switches += 1
            changed = True
        rows = new_rows
        if (t + 1) % config.record_every == 0 or t + 1 == config.iterations:
            record(t + 1)
            changed = False
    log.final_value = J
    log.final_policy = mdp.policy_from_rows(rows)
    logger.debug("opi finished: %d switches, final c_t %.3e", log.policy_switches, log.rows[-1].c_t)
    return log
