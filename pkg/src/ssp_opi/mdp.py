"""Finite stochastic shortest path model, policies and properness analysis.

States are labelled ``1..n``; state ``0`` is the implicit cost-free absorbing
termination state and is never stored.  Each (state, action) pair is a *row*
holding a cost, a sparse list of successors and the termination probability
(the deficit of the row sum).  Value vectors are plain float arrays where
index ``i - 1`` holds the value of state ``i``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import (
    DuplicateTarget,
    EmptyActionSet,
    InvalidPolicy,
    NegativeProbability,
    NonfiniteCost,
    RowSumExceedsOne,
    ValidationError,
)

EPS_PROB = 1e-12


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SspMdp:
    """Validated, immutable SSP model in row-compressed form.

    Build instances with :func:`validate_mdp`; the constructor trusts its
    inputs.  Actions of every state are kept in ascending id order, and that
    order is the tie-break key of every argmin in the package.
    """

    def __init__(self, n, actions, costs, indptr, indices, probs, term_probs):
        self.n = int(n)
        self.actions = tuple(tuple(int(u) for u in acts) for acts in actions)
        counts = np.array([len(a) for a in self.actions], dtype=np.int64)
        self.row_start = _readonly(np.concatenate([[0], np.cumsum(counts)]).astype(np.int64))
        self.costs = _readonly(np.asarray(costs, dtype=np.float64))
        self.indptr = _readonly(np.asarray(indptr, dtype=np.int64))
        self.indices = _readonly(np.asarray(indices, dtype=np.int64))
        self.probs = _readonly(np.asarray(probs, dtype=np.float64))
        self.term_probs = _readonly(np.asarray(term_probs, dtype=np.float64))

    @property
    def n_rows(self) -> int:
        return len(self.costs)

    @cached_property
    def n_actions(self) -> np.ndarray:
        return _readonly(np.diff(self.row_start))

    @cached_property
    def max_actions(self) -> int:
        return int(self.n_actions.max())

    @cached_property
    def row_state(self) -> np.ndarray:
        """0-based state index owning each row."""
        return _readonly(np.repeat(np.arange(self.n), self.n_actions))

    @cached_property
    def row_position(self) -> np.ndarray:
        """Position of each row within its state's action list."""
        return _readonly(np.arange(self.n_rows) - self.row_start[self.row_state])

    @cached_property
    def row_action(self) -> np.ndarray:
        return _readonly(np.array([u for acts in self.actions for u in acts], dtype=np.int64))

    @cached_property
    def transition_matrix(self) -> sp.csr_matrix:
        """Sparse ``n_rows x n`` matrix of transition probabilities among non-terminal states."""
        m = sp.csr_matrix(
            (np.array(self.probs), np.array(self.indices), np.array(self.indptr)),
            shape=(self.n_rows, self.n),
        )
        return m

    def row(self, state: int, action: int) -> int:
        """Row index of ``(state, action)`` with ``state`` a 1-based label."""
        if not 1 <= state <= self.n:
            raise InvalidPolicy(f"state {state} outside 1..{self.n}")
        try:
            pos = self.actions[state - 1].index(int(action))
        except ValueError:
            raise InvalidPolicy(f"action {action} not available in state {state}") from None
        return int(self.row_start[state - 1] + pos)

    def transitions(self, state: int, action: int) -> list[tuple[int, float]]:
        r = self.row(state, action)
        lo, hi = self.indptr[r], self.indptr[r + 1]
        return [(int(j) + 1, float(p)) for j, p in zip(self.indices[lo:hi], self.probs[lo:hi])]

    def cost(self, state: int, action: int) -> float:
        return float(self.costs[self.row(state, action)])

    def term_prob(self, state: int, action: int) -> float:
        return float(self.term_probs[self.row(state, action)])

    def policy_rows(self, mu) -> np.ndarray:
        """Row index chosen by ``mu`` in every state; raises InvalidPolicy."""
        mu = as_policy(mu)
        if len(mu.choice) != self.n:
            raise InvalidPolicy(f"policy covers {len(mu.choice)} states, model has {self.n}")
        return np.array([self.row(i + 1, u) for i, u in enumerate(mu.choice)], dtype=np.int64)

    def policy_from_rows(self, rows) -> "Policy":
        return Policy(tuple(int(u) for u in self.row_action[np.asarray(rows)]))

    def to_dict(self) -> dict:
        """JSON-ready document (see :mod:`ssp_opi.instances` for the schema)."""
        states = []
        for i in range(self.n):
            acts = []
            for pos, u in enumerate(self.actions[i]):
                r = int(self.row_start[i] + pos)
                lo, hi = self.indptr[r], self.indptr[r + 1]
                acts.append(
                    {
                        "id": u,
                        "cost": float(self.costs[r]),
                        "transitions": [
                            {"to": int(j) + 1, "p": float(p)}
                            for j, p in zip(self.indices[lo:hi], self.probs[lo:hi])
                        ],
                        "term_p": float(self.term_probs[r]),
                    }
                )
            states.append({"id": i + 1, "actions": acts})
        return {"version": 1, "n": self.n, "states": states}

    def __eq__(self, other):
        if not isinstance(other, SspMdp):
            return NotImplemented
        return (
            self.n == other.n
            and self.actions == other.actions
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in ("costs", "indptr", "indices", "probs", "term_probs")
            )
        )

    __hash__ = None

    def __repr__(self):
        return f"SspMdp(n={self.n}, rows={self.n_rows})"


@dataclass(frozen=True)
class Policy:
    """Stationary deterministic policy; ``choice[i - 1]`` is the action of state ``i``."""

    choice: tuple

    def __post_init__(self):
        object.__setattr__(self, "choice", tuple(int(u) for u in self.choice))

    def action(self, state: int) -> int:
        return self.choice[state - 1]

    def __len__(self):
        return len(self.choice)


def as_policy(mu) -> Policy:
    if isinstance(mu, Policy):
        return mu
    return Policy(tuple(mu))


@dataclass(frozen=True)
class PropernessReport:
    proper: bool
    unreachable_states: frozenset
    rho: Optional[float] = None


# --------------------------------------------------------------------------
# validation


def _parse_rows(raw) -> tuple[int, dict]:
    """Normalise either accepted input form to ``{state: [(u, cost, [(j, p)], term_p)]}``."""
    if isinstance(raw, Mapping) and "states" in raw:
        rows = {}
        for st in raw["states"]:
            i = int(st["id"])
            if i in rows:
                raise ValidationError(f"state {i} listed twice")
            acts = []
            for a in st.get("actions", []):
                trans = [(int(t["to"]), t["p"]) for t in a.get("transitions", [])]
                acts.append((int(a["id"]), a["cost"], trans, a.get("term_p")))
            rows[i] = acts
        n = int(raw["n"]) if "n" in raw else max(rows, default=0)
        return n, rows
    if isinstance(raw, Mapping):
        rows = {}
        for i, acts in raw.items():
            parsed = []
            for u, spec in acts.items():
                cost, trans = spec[0], spec[1]
                if isinstance(trans, Mapping):
                    trans = list(trans.items())
                parsed.append((int(u), cost, [(int(j), p) for j, p in trans], None))
            rows[int(i)] = parsed
        return max(rows, default=0), rows
    raise ValidationError(f"cannot interpret model description of type {type(raw).__name__}")


def validate_mdp(raw) -> SspMdp:
    """Check a model description and build an :class:`SspMdp`.

    ``raw`` is either the JSON document form ``{"n", "states": [{"id",
    "actions": [{"id", "cost", "transitions": [{"to", "p"}], "term_p"}]}]}``
    or a compact mapping ``{state: {action: (cost, {successor: p})}}``
    (successors may also be given as a list of ``(j, p)`` pairs).  Zero
    probabilities are dropped; termination probabilities are materialised
    as ``1 - sum(p)`` and snapped to 0 when within ``EPS_PROB``.
    """
    if isinstance(raw, SspMdp):
        return raw
    n, rows = _parse_rows(raw)
    if n < 1:
        raise ValidationError("model needs at least one non-terminal state")
    if set(rows) - set(range(1, n + 1)):
        raise ValidationError(f"state ids must lie in 1..{n}")

    actions, costs, indptr, indices, probs, terms = [], [], [0], [], [], []
    for i in range(1, n + 1):
        acts = sorted(rows.get(i, []), key=lambda a: a[0])
        if not acts:
            raise EmptyActionSet(f"state {i} has no actions")
        ids = [a[0] for a in acts]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate action id in state {i}")
        actions.append(ids)
        for u, cost, trans, term_p in acts:
            cost = float(cost)
            if not math.isfinite(cost):
                raise NonfiniteCost(f"cost g({i},{u}) = {cost} is not finite")
            seen = {}
            for j, p in trans:
                p = float(p)
                if not 1 <= j <= n:
                    raise ValidationError(f"transition ({i},{u}) -> {j} outside 1..{n}")
                if not math.isfinite(p) or p < 0:
                    raise NegativeProbability(f"p_{i},{j}({u}) = {p}")
                if j in seen:
                    raise DuplicateTarget(f"successor {j} repeated in row ({i},{u})")
                seen[j] = p
            row = sorted((j, p) for j, p in seen.items() if p > 0)
            total = math.fsum(p for _, p in row)
            if total > 1 + EPS_PROB:
                raise RowSumExceedsOne(f"row ({i},{u}) sums to {total!r}")
            term = 1.0 - total
            if term < EPS_PROB:
                term = 0.0
            if term_p is not None:
                term_p = float(term_p)
                if not (math.isfinite(term_p) and abs(term_p - term) <= EPS_PROB):
                    raise ValidationError(
                        f"row ({i},{u}): term_p {term_p!r} disagrees with 1 - sum(p) = {term!r}"
                    )
            costs.append(cost)
            terms.append(term)
            indices.extend(j - 1 for j, _ in row)
            probs.extend(p for _, p in row)
            indptr.append(len(indices))
    return SspMdp(n, actions, costs, indptr, indices, probs, terms)


# --------------------------------------------------------------------------
# policies and properness


def policy_matrices(mdp: SspMdp, mu) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(P_mu, g_mu)`` for policy ``mu``."""
    rows = mdp.policy_rows(mu)
    P = mdp.transition_matrix[rows].toarray()
    return P, np.array(mdp.costs[rows])


def enumerate_policies(mdp: SspMdp) -> Iterator[Policy]:
    """All deterministic policies, in lexicographic order of action ids."""
    for choice in itertools.product(*mdp.actions):
        yield Policy(choice)


def _reach_termination(mdp: SspMdp, rows: np.ndarray) -> np.ndarray:
    """Boolean mask of states from which state 0 is reachable under the given rows."""
    adj = (mdp.transition_matrix[rows] > 0).astype(np.int64)
    reach = mdp.term_probs[rows] > 0
    while True:
        nxt = reach | (adj @ reach.astype(np.int64) > 0)
        if np.array_equal(nxt, reach):
            return reach
        reach = nxt


def _survival(mdp: SspMdp, rows: np.ndarray, steps: int) -> np.ndarray:
    P = mdp.transition_matrix[rows]
    v = np.ones(mdp.n)
    for _ in range(steps):
        v = P @ v
    return v


def rho_mu(mdp: SspMdp, mu) -> float:
    """Largest probability, over start states, of not having terminated after ``n`` steps."""
    rows = mdp.policy_rows(mu)
    v = _survival(mdp, rows, mdp.n)
    # states cut off from termination survive with probability exactly one
    v[~_reach_termination(mdp, rows)] = 1.0
    return float(np.clip(v.max(), 0.0, 1.0))


def check_policy_proper(mdp: SspMdp, mu, with_rho: bool = False) -> PropernessReport:
    rows = mdp.policy_rows(mu)
    reach = _reach_termination(mdp, rows)
    unreachable = frozenset(int(i) + 1 for i in np.flatnonzero(~reach))
    rho = rho_mu(mdp, mu) if with_rho else None
    return PropernessReport(proper=not unreachable, unreachable_states=unreachable, rho=rho)


def check_all_policies_proper(mdp: SspMdp) -> tuple[bool, Optional[tuple[frozenset, dict]]]:
    """Decide whether every policy is proper via the largest trap set.

    A trap set is a nonempty set of states in which each state has an action
    that never terminates and keeps all its mass inside the set.  Returns
    ``(True, None)`` or ``(False, (states, {state: action}))``.
    """
    adj = (mdp.transition_matrix > 0).astype(np.int64)
    closed_row = mdp.term_probs == 0
    inside = np.ones(mdp.n, dtype=bool)
    while True:
        leaks = adj @ (~inside).astype(np.int64) > 0
        ok = closed_row & ~leaks & inside[mdp.row_state]
        nxt = np.logical_or.reduceat(ok, mdp.row_start[:-1])
        if np.array_equal(nxt, inside):
            break
        inside = nxt
    if not inside.any():
        return True, None
    witness = {}
    for i in np.flatnonzero(inside):
        lo = mdp.row_start[i]
        pos = int(np.flatnonzero(ok[lo : mdp.row_start[i + 1]])[0])
        witness[int(i) + 1] = mdp.actions[i][pos]
    return False, (frozenset(witness), witness)


def extend_policy(mdp: SspMdp, partial: Mapping) -> Policy:
    """Policy using ``partial[i]`` where given and the lowest action id elsewhere."""
    return Policy(tuple(partial.get(i + 1, acts[0]) for i, acts in enumerate(mdp.actions)))
