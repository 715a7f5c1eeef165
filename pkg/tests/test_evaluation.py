"""ROC/AUC scoring and the threshold sweep."""

import numpy as np
import pytest

from oracles import auc_pair_counting
from nexus.errors import ParameterError
from nexus.evaluation import (roc_auc, shared_edge_auc, threshold_sweep,
                              worker_count)
from test_posterior import make_trace, random_pd


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_constant_scores_half(self):
        assert roc_auc(np.full(50, 0.3), [1, 0] * 25) == pytest.approx(0.5)

    def test_hand_example(self):
        assert roc_auc([0.9, 0.8, 0.3, 0.1],
                       [True, False, True, False]) == pytest.approx(0.75)

    def test_matches_pair_counting_oracle(self):
        g = np.random.default_rng(0)
        for _ in range(30):
            scores = np.round(g.random(30), 1)  # coarse grid forces ties
            truth = g.random(30) < 0.4
            if truth.all() or not truth.any():
                continue
            assert roc_auc(scores, truth) == pytest.approx(
                auc_pair_counting(scores, truth))

    def test_monotone_transform_invariance(self):
        g = np.random.default_rng(1)
        for _ in range(100):
            scores = g.random(40)
            truth = g.random(40) < 0.5
            if truth.all() or not truth.any():
                continue
            base = roc_auc(scores, truth)
            assert roc_auc(np.exp(3.0 * scores), truth) == pytest.approx(base)
            assert roc_auc(np.log(scores + 1e-9), truth) == pytest.approx(base)

    def test_degenerate_truth_rejected(self):
        with pytest.raises(ParameterError):
            roc_auc([0.1, 0.2], [1, 1])


class TestSharedEdgeAuc:
    def test_identical_graphs_reduce_to_single(self):
        g = np.random.default_rng(2)
        scores = g.random(30)
        truth = g.random(30) < 0.4
        assert shared_edge_auc(scores, scores, truth, truth) == pytest.approx(
            roc_auc(scores, truth))

    def test_disjoint_truths_error(self):
        a = np.array([True, False, True, False])
        b = np.array([False, True, False, True])
        with pytest.raises(ParameterError):
            shared_edge_auc(np.ones(4), np.ones(4), a, b)

    def test_four_edge_toy(self):
        sa = np.array([0.9, 0.6, 0.3, 0.2])
        sb = np.array([0.5, 0.9, 0.4, 0.1])
        ta = np.array([True, True, False, False])
        tb = np.array([True, False, True, False])
        # both-present labels: (1,0,0,0); min scores: (0.5, 0.6, 0.3, 0.1)
        labels = ta & tb
        expected = auc_pair_counting(np.minimum(sa, sb), labels)
        assert shared_edge_auc(sa, sb, ta, tb) == pytest.approx(expected)
        assert expected == pytest.approx(2 / 3)


class TestThresholdSweep:
    def _trace_and_truth(self):
        g = np.random.default_rng(3)
        draws = np.array([[random_pd(g, 6, 2.0) for _ in range(2)]
                          for _ in range(60)])
        grid = np.round(np.linspace(0.01, 0.6, 12), 3)
        trace = make_trace(draws, kappa_grid=grid)
        truth = g.random((2, 15)) < 0.3
        truth[:, 0] = True   # at least one positive per group
        truth[:, 1] = False
        return trace, truth, grid

    def test_fpr_nonincreasing_in_kappa(self):
        trace, truth, grid = self._trace_and_truth()
        rows = threshold_sweep(trace, truth, grid)
        for label in ("g0", "g1"):
            fpr = [r["fpr"] for r in rows if r["group"] == label]
            assert all(b <= a + 1e-12 for a, b in zip(fpr, fpr[1:]))

    def test_mcc_hand_value(self):
        # confusion from a 4-edge toy: TP=1, FP=1, FN=1, TN=1 -> MCC 0
        from nexus.evaluation import _confusion_rates
        sel = np.array([True, True, False, False])
        tru = np.array([True, False, True, False])
        tpr, fpr, mcc = _confusion_rates(sel, tru)
        assert (tpr, fpr) == (0.5, 0.5)
        assert mcc == pytest.approx(0.0)
        sel = np.array([True, True, False, False])
        tru = np.array([True, True, False, False])
        assert _confusion_rates(sel, tru)[2] == pytest.approx(1.0)

    def test_low_kappa_limit_selects_everything(self):
        trace, truth, grid = self._trace_and_truth()
        rows = [r for r in threshold_sweep(trace, truth, [grid[0]])]
        # every |partial correlation| draw exceeds 0.01 in this toy, so
        # all edges are selected and FPR is 1
        assert all(r["fpr"] == 1.0 for r in rows)


class TestWorkerCount:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("NEXUS_THREADS", "3")
        assert worker_count() == 3

    def test_env_invalid(self, monkeypatch):
        monkeypatch.setenv("NEXUS_THREADS", "zero")
        with pytest.raises(ParameterError):
            worker_count()

    def test_default_positive(self, monkeypatch):
        monkeypatch.delenv("NEXUS_THREADS", raising=False)
        assert worker_count() >= 1


class TestReplicateExperiment:
    def test_deterministic_across_worker_counts(self):
        from nexus.evaluation import replicate_experiment
        from nexus.model import Hyperparameters
        hyper = Hyperparameters(n_iterations=60, n_burnin=20, seed=77)
        serial = replicate_experiment(hyper, n_replicates=2,
                                      n=(12, 14, 16, 18), max_workers=1)
        parallel = replicate_experiment(hyper, n_replicates=2,
                                        n=(12, 14, 16, 18), max_workers=2)
        for method in serial.per_graph:
            np.testing.assert_array_equal(serial.per_graph[method],
                                          parallel.per_graph[method])
            np.testing.assert_array_equal(serial.shared[method],
                                          parallel.shared[method])
