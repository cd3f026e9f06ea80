import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ssp_opi.diagnostics import (
    LogRow,
    RunLog,
    bellman_residual_ct,
    csv_text,
    distance_to_opt,
    summarize_run,
    write_summary,
)
from ssp_opi.exceptions import DimensionMismatch, EmptyLog
from ssp_opi.instances import InstanceSpec, gen_random_proper
from ssp_opi.opi import OpiConfig, run_opi
from ssp_opi.dp import value_iteration


class TestResidual:
    def test_examples(self, CHAIN2):
        assert bellman_residual_ct(CHAIN2, [1, 2]) == 0
        assert bellman_residual_ct(CHAIN2, [0, 0]) == 1
        assert bellman_residual_ct(CHAIN2, [5, 10]) == -4

    def test_zero_at_J_star(self):
        for seed in range(10):
            m = gen_random_proper(InstanceSpec(n=5, seed=seed))
            assert abs(bellman_residual_ct(m, value_iteration(m, tol=1e-13).value)) <= 1e-12


class TestDistance:
    def test_examples(self):
        assert distance_to_opt([1, 2], [1, 2]) == 0
        assert distance_to_opt([0, 0], [1, 2]) == 2
        assert distance_to_opt([1.5, 2.5], [1, 2]) == 0.5

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            distance_to_opt([1, 2], [1])

    def test_metric_on_random_triples(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            a, b, c = rng.normal(size=(3, 4)) * 10
            assert distance_to_opt(a, b) == distance_to_opt(b, a)
            assert distance_to_opt(a, c) <= distance_to_opt(a, b) + distance_to_opt(b, c) + 1e-12


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=finite))
def test_distance_nonnegative_and_zero_iff_equal(a, b):
    d = distance_to_opt(a, b)
    assert d >= 0
    assert (d == 0) == np.array_equal(a, b)


class TestSummary:
    def test_noise_free_chain(self, CHAIN2):
        log = run_opi(CHAIN2, OpiConfig(iterations=100, record_every=10), oracle=[1, 2])
        s = summarize_run(log)
        assert s.max_tail_ct == 0
        assert s.final_error <= 1e-9

    def test_constant_log_at_fixed_point(self):
        J = np.zeros(3)
        rows = [LogRow(t, 1 / (t + 1), 0.0, 0.0, False, J) for t in range(20)]
        s = summarize_run(RunLog(config={}, rows=rows))
        assert (s.final_error, s.max_tail_ct, s.policy_switch_count, s.max_sup_J) == (0, 0, 0, 0)

    def test_tail_selection(self):
        rows = [LogRow(t, 1.0, float(c), None, False, np.zeros(1)) for t, c in enumerate([5, 4, 3, 2, 1, 0, -1, -2, -3, -4])]
        log = RunLog(config={}, rows=rows)
        assert summarize_run(log, 0.1).max_tail_ct == -4
        assert summarize_run(log, 0.3).max_tail_ct == -2
        assert summarize_run(log, 1.0).max_tail_ct == 5
        assert summarize_run(log).final_error is None

    def test_empty(self):
        with pytest.raises(EmptyLog):
            summarize_run(RunLog(config={}))

    def test_bad_fraction(self, CHAIN2):
        log = run_opi(CHAIN2, OpiConfig(iterations=3))
        with pytest.raises(ValueError):
            summarize_run(log, 0.0)

    def test_twoact_tail(self, TWOACT):
        log = run_opi(TWOACT, OpiConfig(iterations=20000, seed=0, record_every=1), oracle=[2.0])
        assert summarize_run(log, 0.1).max_tail_ct <= 0.05


class TestSerialisation:
    def test_csv_layout(self, CHAIN2):
        text = csv_text(run_opi(CHAIN2, OpiConfig(iterations=2, record_every=1), oracle=[1, 2]))
        lines = text.splitlines()
        assert lines[0] == "t,gamma,c_t,sup_error,policy_changed"
        assert lines[1] == "0,1.0,1.0,2.0,0"
        assert lines[2] == "1,0.5,0.0,0.0,0"

    def test_csv_without_oracle(self, CHAIN2):
        text = csv_text(run_opi(CHAIN2, OpiConfig(iterations=1)))
        assert text.splitlines()[1].split(",")[3] == ""

    def test_summary_json(self, CHAIN2):
        buf = io.StringIO()
        write_summary(run_opi(CHAIN2, OpiConfig(iterations=5), oracle=[1, 2]), buf)
        doc = json.loads(buf.getvalue())
        assert doc["final_error"] == 0.0
        assert doc["final_policy"] == [0, 0]
        assert doc["config"]["method"] == "monte_carlo"
