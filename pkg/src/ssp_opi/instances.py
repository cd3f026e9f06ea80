"""Instance generators and the JSON instance format.

File layout (UTF-8, field order insignificant)::

    {"version": 1, "n": 2,
     "states": [{"id": 1, "actions": [{"id": 0, "cost": 1.0,
                                       "transitions": [{"to": 2, "p": 0.5}],
                                       "term_p": 0.5}]}, ...]}

``term_p`` is cross-checked against ``1 - sum(p)`` on load.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import NotAllProper, ParseError
from .mdp import SspMdp, check_all_policies_proper, validate_mdp

FORMAT_VERSION = 1
GRID_MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))  # up, right, down, left


@dataclass(frozen=True)
class InstanceSpec:
    kind: str = "random_proper"
    n: Optional[int] = None
    rows: Optional[int] = None
    cols: Optional[int] = None
    actions_per_state: int = 3
    min_term_prob: float = 0.05
    cost_lo: float = 0.5
    cost_hi: float = 1.5
    slip: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("chain", "random_proper", "gridworld"):
            raise ValueError(f"unknown instance kind {self.kind!r}")
        if self.cost_lo > self.cost_hi:
            raise ValueError("cost_lo must not exceed cost_hi")
        if self.kind == "random_proper" and not 0.0 < self.min_term_prob < 1.0:
            raise ValueError("min_term_prob must lie in (0, 1)")


def gen_chain(length: int, step_cost: float = 1.0) -> SspMdp:
    """Deterministic chain ``length -> ... -> 1 -> 0``; ``J*(i) = i * step_cost``."""
    if length < 1:
        raise ValueError("length must be at least 1")
    raw = {i: {0: (step_cost, {i - 1: 1.0} if i > 1 else {})} for i in range(1, length + 1)}
    return validate_mdp(raw)


def gen_random_proper(spec: InstanceSpec) -> SspMdp:
    """Random model in which every row terminates with probability at least ``min_term_prob``.

    Per row: termination probability uniform on ``[min_term_prob, 1)``, the
    rest split by flat Dirichlet weights over 1 to 4 distinct successors,
    cost uniform on ``[cost_lo, cost_hi]``.
    """
    n = spec.n
    if n is None or n < 1:
        raise ValueError("random instances need n >= 1")
    if spec.actions_per_state < 1:
        raise ValueError("actions_per_state must be at least 1")
    rng = np.random.default_rng(spec.seed)
    raw = {}
    for i in range(1, n + 1):
        acts = {}
        for u in range(spec.actions_per_state):
            term = rng.uniform(spec.min_term_prob, 1.0)
            k = int(rng.integers(1, min(4, n) + 1))
            succ = rng.choice(n, size=k, replace=False) + 1
            w = rng.dirichlet(np.ones(k)) * (1.0 - term)
            cost = rng.uniform(spec.cost_lo, spec.cost_hi)
            acts[u] = (cost, {int(j): float(p) for j, p in zip(succ, w)})
        raw[i] = acts
    return validate_mdp(raw)


def gen_gridworld(rows: int, cols: int, slip: float = 0.1, step_cost: float = 1.0,
                  check_proper: bool = True) -> SspMdp:
    """Grid with the bottom-right cell as the goal (termination).

    Cells are numbered row-major from 1, skipping the goal.  Actions 0-3 move
    up/right/down/left; the intended move happens with probability
    ``1 - slip`` and each other direction with ``slip / 3``.  Moves into a
    wall leave the agent in place.  With ``check_proper`` the model is
    rejected with NotAllProper when some policy can avoid the goal forever.
    """
    if not 0.0 <= slip < 0.5:
        raise ValueError("slip must lie in [0, 0.5)")
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValueError("grid needs at least two cells")
    goal = (rows - 1, cols - 1)
    label = {}
    for r in range(rows):
        for c in range(cols):
            if (r, c) != goal:
                label[(r, c)] = len(label) + 1
    raw = {}
    for (r, c), i in label.items():
        acts = {}
        for u in range(4):
            mass = {}
            for d, (dr, dc) in enumerate(GRID_MOVES):
                p = 1.0 - slip if d == u else slip / 3.0
                if p == 0.0:
                    continue
                nr, nc = r + dr, c + dc
                if not (0 <= nr < rows and 0 <= nc < cols):
                    nr, nc = r, c
                if (nr, nc) == goal:
                    continue
                j = label[(nr, nc)]
                mass[j] = mass.get(j, 0.0) + p
            acts[u] = (step_cost, mass)
        raw[i] = acts
    mdp = validate_mdp(raw)
    if check_proper:
        ok, witness = check_all_policies_proper(mdp)
        if not ok:
            raise NotAllProper(
                f"gridworld with slip={slip} admits a policy that avoids the goal "
                f"(trap states {sorted(witness[0])})",
                witness,
            )
    return mdp


def generate(spec: InstanceSpec, **kwargs) -> SspMdp:
    if spec.kind == "chain":
        return gen_chain(spec.n or 1, kwargs.get("step_cost", spec.cost_lo))
    if spec.kind == "gridworld":
        return gen_gridworld(spec.rows, spec.cols, spec.slip, kwargs.get("step_cost", spec.cost_lo))
    return gen_random_proper(spec)


def save_mdp(mdp: SspMdp, path) -> None:
    """Write the JSON document; floats use shortest round-trip repr, so loading is exact."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mdp.to_dict(), fh, indent=1)
        fh.write("\n")


def load_mdp(path) -> SspMdp:
    with open(os.fspath(path), encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "states" not in doc:
        raise ParseError(f"{path}: missing 'states'")
    if doc.get("version", FORMAT_VERSION) != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported version {doc.get('version')!r}")
    try:
        return validate_mdp(doc)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{path}: malformed instance ({exc})") from exc
