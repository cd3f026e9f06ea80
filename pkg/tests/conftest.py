import numpy as np
import pytest

from ssp_opi.mdp import validate_mdp

ACCEPTANCE_LINES = []


def chain2():
    return validate_mdp({1: {0: (1.0, {})}, 2: {0: (1.0, {1: 1.0})}})


def trap():
    # state 2, action 0 loops on itself forever
    return validate_mdp({1: {0: (1.0, {})}, 2: {0: (1.0, {2: 1.0}), 1: (1.0, {1: 1.0})}})


def loop_half():
    return validate_mdp({1: {0: (1.0, {1: 0.5})}})


def twoact():
    # action 0 ("a") exits at cost 10; action 1 ("b") costs 1 and stays w.p. 0.5
    return validate_mdp({1: {0: (10.0, {}), 1: (1.0, {1: 0.5})}})


def random_any_instance(rng, n, n_actions, closed_prob=0.5):
    """Random model that may contain improper policies: rows are closed (no exit) w.p. ``closed_prob``."""
    raw = {}
    for i in range(1, n + 1):
        acts = {}
        for u in range(int(rng.integers(1, n_actions + 1))):
            k = int(rng.integers(1, n + 1))
            succ = rng.choice(n, size=k, replace=False) + 1
            mass = 1.0 if rng.random() < closed_prob else rng.uniform(0.1, 0.95)
            w = rng.dirichlet(np.ones(k)) * mass
            acts[u] = (rng.uniform(0.5, 1.5), {int(j): float(p) for j, p in zip(succ, w)})
        raw[i] = acts
    return validate_mdp(raw)


@pytest.fixture
def CHAIN2():
    return chain2()


@pytest.fixture
def TRAP():
    return trap()


@pytest.fixture
def LOOP_HALF():
    return loop_half()


@pytest.fixture
def TWOACT():
    return twoact()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
