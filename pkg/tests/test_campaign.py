import json
import os

import numpy as np
import pytest

from latticewalk.campaign import (
    INCONCLUSIVE,
    INTERVAL,
    RECORDS_FILE,
    RECURRENT_LEANING,
    SUMMARY_FILE,
    TRANSIENT_LEANING,
    UNBALANCED_NOTE,
    CampaignBudget,
    checkpoint_grid,
    classify,
    green_partial_sums,
    replica_curve,
)
from latticewalk.diagnostics import EventThresholds
from latticewalk.env import DefectLaw, EnvironmentSpec, OrientationField, PeriodicPattern
from latticewalk.error import ConfigError
from latticewalk.skeleton import SkeletonTrace


class TestCheckpoints(object):

    def test_grid(self):
        assert checkpoint_grid(100) == [1, 2, 4, 8, 16, 32, 64, 100]
        assert checkpoint_grid(1, include_zero=True) == [0, 1]

    def test_invalid(self):
        with pytest.raises(ValueError):
            checkpoint_grid(0)
        with pytest.raises(ValueError):
            checkpoint_grid(10, ratio=1.0)

    def test_budget_from_config(self, yaml_block):
        document = yaml_block("""
            budget:
              N: 1000
              replicas: 4
              checkpoints: [10, 100, 1000]
        """)
        budget = CampaignBudget.from_config(document.block("budget"), jobs=2)
        assert budget.checkpoints == [10, 100, 1000]
        assert budget.jobs == 2

    def test_budget_rejects_checkpoints_beyond_horizon(self, yaml_block):
        document = yaml_block("""
            budget:
              N: 10
              replicas: 4
              checkpoints: [5, 50]
        """)
        with pytest.raises(ConfigError) as error:
            CampaignBudget.from_config(document.block("budget"))
        assert error.value.line == 4

    def test_budget_rejects_zero_replicas(self, yaml_block):
        document = yaml_block("""
            budget:
              N: 10
              replicas: 0
        """)
        with pytest.raises(ConfigError):
            CampaignBudget.from_config(document.block("budget"))


class TestReplicaCurve(object):

    def test_handmade_trace(self, alternating):
        trace = SkeletonTrace([1, -1, 1, -1])
        sums, returns = replica_curve(alternating, trace, [0, 1, 2, 4])
        # returns at 2 and 4, each after one visit to +1 and one to -1 oriented levels
        assert list(returns) == [0, 0, 1, 2]
        assert sums[0] == pytest.approx(1.0)
        assert sums[2] == pytest.approx(1.5)
        assert sums[3] == pytest.approx(1.0 + 0.5 + 0.3125, abs=1e-9)

    def test_interval_dominates_return(self, iid):
        trace = SkeletonTrace.from_positions([0, 1, 0, -1, 0, 1, 0])
        point, _ = replica_curve(iid, trace, [6])
        interval, _ = replica_curve(iid, trace, [6], mode=INTERVAL)
        assert interval[0] >= point[0]

    def test_unknown_mode(self, iid):
        with pytest.raises(ValueError):
            replica_curve(iid, SkeletonTrace([1]), [1], mode="hit")


class TestCampaign(object):

    def test_single_step(self):
        result = green_partial_sums(EnvironmentSpec.alternating(), 1, 3, seed=1)
        np.testing.assert_array_equal(result.partial_sums, np.ones((3, 1)))
        assert result.returns.tolist() == [[0], [0], [0]]

    def test_deterministic(self):
        spec = EnvironmentSpec.iid_uniform()
        first = green_partial_sums(spec, 2000, 6, seed=7)
        second = green_partial_sums(spec, 2000, 6, seed=7)
        np.testing.assert_array_equal(first.partial_sums, second.partial_sums)
        assert first.env_seeds == second.env_seeds
        assert len(set(first.env_seeds)) == 6

    def test_pool_size_does_not_matter(self):
        spec = EnvironmentSpec.iid_uniform()
        serial = green_partial_sums(spec, 2000, 8, seed=3, jobs=1)
        pooled = green_partial_sums(spec, 2000, 8, seed=3, jobs=2)
        np.testing.assert_array_equal(serial.partial_sums, pooled.partial_sums)
        assert serial.walk_seeds == pooled.walk_seeds

    def test_partial_sums_monotone(self):
        result = green_partial_sums(EnvironmentSpec.alternating(), 5000, 5, seed=2)
        assert np.all(np.diff(result.partial_sums, axis=1) >= 0)
        assert np.all(result.partial_sums >= 1.0)

    def test_interval_mode_dominates(self):
        spec = EnvironmentSpec.iid_uniform()
        point = green_partial_sums(spec, 1000, 4, seed=5)
        interval = green_partial_sums(spec, 1000, 4, seed=5, mode=INTERVAL)
        assert np.all(interval.partial_sums >= point.partial_sums - 1e-12)

    def test_fixed_environment(self):
        spec = EnvironmentSpec.iid_uniform(seed=42)
        result = green_partial_sums(spec, 100, 3, seed=5, fixed_environment=True)
        assert result.env_seeds == [42, 42, 42]

    def test_periodic_sums_exceed_disordered(self):
        periodic = green_partial_sums(EnvironmentSpec.alternating(), 20000, 20, seed=4)
        disordered = green_partial_sums(EnvironmentSpec.iid_uniform(), 20000, 20, seed=4)
        assert periodic.median_curve()[-1] > disordered.median_curve()[-1]

    def test_artifacts(self, tmpdir):
        result = green_partial_sums(
            EnvironmentSpec.alternating(), 256, 3, seed=9,
            thresholds=EventThresholds(), config_hash="abc")
        result.write(str(tmpdir))
        with open(os.path.join(str(tmpdir), RECORDS_FILE)) as records_file:
            lines = records_file.read().splitlines()
        assert lines[0] == "# config_hash=abc seed=9"
        records = [json.loads(line) for line in lines[1:]]
        assert len(records) == 3 * len(result.checkpoints)
        assert set(records[0]) == {"replica", "seed", "env_seed", "variant", "mode",
                                   "N", "partial_sum", "returns", "events"}
        with open(os.path.join(str(tmpdir), SUMMARY_FILE)) as summary_file:
            rows = summary_file.read().splitlines()
        assert rows[0].startswith("# config_hash=abc")
        assert rows[1] == "N,median_partial_sum,mean_partial_sum,standard_error,mean_returns"
        assert len(rows) == 2 + len(result.checkpoints)
        assert result.event_frequencies() is not None


class TestClassify(object):

    def test_short_horizon_is_inconclusive(self):
        report = classify(EnvironmentSpec.alternating(), CampaignBudget(5, 3), seed=1)
        assert report.evidence == INCONCLUSIVE
        assert report.median_growth is None

    def test_threshold_bands(self):
        spec = EnvironmentSpec.alternating()
        budget = CampaignBudget(4000, 6)
        low = classify(spec, budget, seed=3, threshold=-1.0)
        high = classify(spec, budget, seed=3, threshold=100.0)
        undecided = classify(spec, budget, seed=3, threshold=0.1, band=100.0)
        assert low.evidence == RECURRENT_LEANING
        assert high.evidence == TRANSIENT_LEANING
        assert undecided.evidence == INCONCLUSIVE
        assert low.to_dict()["reference_checkpoint"] <= 400

    def test_unbalanced_pattern_note(self):
        pattern = PeriodicPattern([1, 1, -1], balanced=False)
        spec = EnvironmentSpec.periodic_with_defects(pattern, DefectLaw(beta=0.5), seed=2)
        report = classify(spec, CampaignBudget(400, 3), seed=1)
        assert report.notes == [UNBALANCED_NOTE]
        assert report.to_dict()["notes"] == [UNBALANCED_NOTE]
        assert classify(EnvironmentSpec.alternating(), CampaignBudget(400, 3), seed=1).notes == []

    @pytest.mark.slow
    def test_periodic_grows_faster_than_disordered(self):
        budget = CampaignBudget(10 ** 5, 20, jobs=2)
        periodic = classify(EnvironmentSpec.alternating(), budget, seed=1)
        disordered = classify(EnvironmentSpec.iid_uniform(), budget, seed=1)
        assert periodic.median_growth > disordered.median_growth
        assert periodic.evidence != TRANSIENT_LEANING

    @pytest.mark.slow
    def test_finitely_many_defects_keep_growing(self, pattern2):
        budget = CampaignBudget(10 ** 5, 20, jobs=2)
        finite = classify(EnvironmentSpec.explicit_defects(pattern2, [0, 3, -5, 12], seed=13),
                          budget, seed=1)
        disordered = classify(EnvironmentSpec.iid_uniform(), budget, seed=1)
        assert finite.median_growth > disordered.median_growth
        assert finite.evidence != TRANSIENT_LEANING
