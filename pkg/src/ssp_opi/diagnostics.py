"""Run logs and convergence statistics for optimistic policy iteration."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dp import bellman_T
from .exceptions import DimensionMismatch, EmptyLog
from .mdp import Policy, SspMdp

CSV_COLUMNS = ("t", "gamma", "c_t", "sup_error", "policy_changed")


@dataclass(frozen=True)
class LogRow:
    t: int
    gamma: float
    c_t: float
    sup_error: Optional[float]
    policy_changed: bool
    value: Optional[np.ndarray] = None


@dataclass
class RunLog:
    """Rows recorded every ``record_every`` iterations plus the final iterate.

    ``policy_changed`` on a row is true when the greedy policy switched at
    least once since the previous row; ``policy_switches`` counts every
    switch over the whole run.
    """

    config: dict
    rows: list = field(default_factory=list)
    final_value: Optional[np.ndarray] = None
    final_policy: Optional[Policy] = None
    policy_switches: int = 0


@dataclass(frozen=True)
class RunSummary:
    final_error: Optional[float]
    max_tail_ct: float
    policy_switch_count: int
    max_sup_J: float

    def to_dict(self) -> dict:
        return {
            "final_error": self.final_error,
            "max_tail_ct": self.max_tail_ct,
            "policy_switch_count": self.policy_switch_count,
            "max_sup_J": self.max_sup_J,
        }


def bellman_residual_ct(mdp: SspMdp, J) -> float:
    """``max_i ((TJ)(i) - J(i))``; may be negative."""
    J = np.asarray(J, dtype=np.float64)
    return float(np.max(bellman_T(mdp, J) - J))


def distance_to_opt(J, J_star) -> float:
    J = np.asarray(J, dtype=np.float64)
    J_star = np.asarray(J_star, dtype=np.float64)
    if J.shape != J_star.shape:
        raise DimensionMismatch(f"shapes {J.shape} and {J_star.shape} differ")
    return float(np.max(np.abs(J - J_star))) if J.size else 0.0


def summarize_run(log: RunLog, tail_fraction: float = 0.1) -> RunSummary:
    """Tail and boundedness statistics over the recorded rows.

    The tail is the last ``ceil(tail_fraction * len(rows))`` rows.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    if not log.rows:
        raise EmptyLog("run log has no rows")
    m = max(1, math.ceil(tail_fraction * len(log.rows)))
    tail = log.rows[-m:]
    sup_values = [float(np.max(np.abs(r.value))) for r in log.rows if r.value is not None]
    return RunSummary(
        final_error=log.rows[-1].sup_error,
        max_tail_ct=max(r.c_t for r in tail),
        policy_switch_count=log.policy_switches,
        max_sup_J=max(sup_values, default=0.0),
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(log: RunLog, fh) -> None:
    """Write rows as ``t,gamma,c_t,sup_error,policy_changed`` with shortest round-trip floats."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in log.rows:
        w.writerow([_fmt(r.t), _fmt(r.gamma), _fmt(r.c_t), _fmt(r.sup_error), _fmt(r.policy_changed)])


def csv_text(log: RunLog) -> str:
    buf = io.StringIO()
    write_csv(log, buf)
    return buf.getvalue()


def summary_document(log: RunLog, tail_fraction: float = 0.1) -> dict:
    doc = summarize_run(log, tail_fraction).to_dict()
    doc["tail_fraction"] = tail_fraction
    doc["config"] = log.config
    doc["final_value"] = None if log.final_value is None else [float(v) for v in log.final_value]
    doc["final_policy"] = None if log.final_policy is None else list(log.final_policy.choice)
    return doc


def write_summary(log: RunLog, fh, tail_fraction: float = 0.1) -> None:
    json.dump(summary_document(log, tail_fraction), fh, indent=2)
    fh.write("\n")
