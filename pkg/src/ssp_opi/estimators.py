"""Estimator-style wrappers around the solvers.

Each estimator is configured through constructor parameters (so
``get_params``/``set_params``/``clone`` work), fitted on a model with
``fit(mdp)``, and exposes fitted attributes with a trailing underscore.
``predict(states)`` returns the learned cost-to-go of 1-based state labels.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .diagnostics import distance_to_opt, summarize_run
from .dp import exact_policy_iteration, greedy_policy, value_iteration
from .opi import OpiConfig, StepSchedule, run_opi
from .simulation import DEFAULT_CUTOFF
from .validation import check_mdp, check_policy, check_states, check_value_vector


class _ValueEstimator(BaseEstimator):
    def predict(self, states=None) -> np.ndarray:
        check_is_fitted(self, "value_")
        if states is None:
            return self.value_.copy()
        return self.value_[check_states(len(self.value_), states)]

    def predict_action(self, states=None) -> np.ndarray:
        check_is_fitted(self, "policy_")
        choice = np.asarray(self.policy_.choice)
        if states is None:
            return choice
        return choice[check_states(len(choice), states)]

    def score(self, J_star) -> float:
        """Negative sup-norm distance to ``J_star`` (higher is better)."""
        check_is_fitted(self, "value_")
        return -distance_to_opt(self.value_, J_star)


class ValueIteration(_ValueEstimator):
    def __init__(self, tol=1e-10, max_iter=10**6, J0=None):
        self.tol = tol
        self.max_iter = max_iter
        self.J0 = J0

    def fit(self, mdp, y=None):
        mdp = check_mdp(mdp)
        J0 = None if self.J0 is None else check_value_vector(mdp, self.J0)
        report = value_iteration(mdp, J0, tol=self.tol, max_iter=self.max_iter)
        self.value_ = report.value
        self.policy_ = greedy_policy(mdp, report.value)
        self.n_iter_ = report.iterations
        self.residual_ = report.residual
        return self


class PolicyIteration(_ValueEstimator):
    def __init__(self, initial_policy=None, max_iter=10_000):
        self.initial_policy = initial_policy
        self.max_iter = max_iter

    def fit(self, mdp, y=None):
        mdp = check_mdp(mdp)
        mu0 = None if self.initial_policy is None else check_policy(mdp, self.initial_policy)
        self.policy_, self.value_, self.n_iter_ = exact_policy_iteration(mdp, mu0, self.max_iter)
        return self


class OptimisticPolicyIteration(_ValueEstimator):
    """Monte Carlo (``method="mc"``) or TD(lambda) (``method="td"``) OPI.

    Step sizes follow ``a / (b + t + 1) ** p``.  ``fit(mdp, J_star)`` also
    records the sup-norm error against ``J_star`` in ``log_``.
    """

    def __init__(self, method="mc", lam=None, a=1.0, b=0.0, p=1.0, n_iter=1000, seed=0,
                 cutoff=DEFAULT_CUTOFF, record_every=100, tail_fraction=0.1, threads=None):
        self.method = method
        self.lam = lam
        self.a = a
        self.b = b
        self.p = p
        self.n_iter = n_iter
        self.seed = seed
        self.cutoff = cutoff
        self.record_every = record_every
        self.tail_fraction = tail_fraction
        self.threads = threads

    def _config(self) -> OpiConfig:
        return OpiConfig(
            method=self.method,
            lam=self.lam,
            schedule=StepSchedule(self.a, self.b, self.p),
            iterations=self.n_iter,
            seed=self.seed,
            cutoff=self.cutoff,
            record_every=self.record_every,
        )

    def fit(self, mdp, J_star=None):
        mdp = check_mdp(mdp, require_all_proper=True)
        config = self._config()
        oracle = None if J_star is None else check_value_vector(mdp, J_star)
        self.log_ = run_opi(mdp, config, oracle=oracle, threads=self.threads)
        self.summary_ = summarize_run(self.log_, self.tail_fraction)
        self.value_ = self.log_.final_value
        self.policy_ = self.log_.final_policy
        self.n_iter_ = config.iterations
        return self
