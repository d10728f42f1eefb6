import numpy as np
import pytest
from scipy import stats

from latticewalk.error import PathError, TraceError
from latticewalk.keyed import KeyedStream, Tag
from latticewalk.skeleton import (
    EmbeddedWalk,
    SkeletonTrace,
    WaitingTimeTable,
    couple_and_check,
    crossing_times,
    embedded_position,
    enumerate_first_crossings,
    exit_time_mean,
    reflect_crossing,
    residue_count_matrix,
    residue_counts,
    residue_occupation,
    simulate_skeleton,
    time_changes,
)

from conftest import ALPHA


class TestSkeletonTrace(object):

    def test_empty(self):
        trace = simulate_skeleton(0, KeyedStream(1, Tag.PSI))
        assert list(trace.positions) == [0]
        assert trace.occupation() == {0: 1}

    def test_occupation_sums_to_time(self):
        trace = simulate_skeleton(400, KeyedStream(2, Tag.PSI))
        assert sum(trace.occupation(399).values()) == 400

    def test_from_positions(self):
        trace = SkeletonTrace.from_positions([0, 1, 0, -1])
        assert list(trace.increments) == [1, -1, -1]
        with pytest.raises(TraceError):
            SkeletonTrace.from_positions([1, 2])
        with pytest.raises(TraceError):
            SkeletonTrace.from_increments([1, 2])

    def test_require(self):
        with pytest.raises(TraceError):
            SkeletonTrace([1, -1]).occupation(5)

    def test_visit_indices(self):
        trace = SkeletonTrace.from_positions([0, 1, 0, 1, 2, 1])
        assert list(trace.visit_indices()) == [1, 1, 2, 2, 1, 3]
        assert list(trace.return_times()) == [0, 2]

    def test_keyed_and_generator_sources(self):
        keyed = simulate_skeleton(100, KeyedStream(3, Tag.PSI))
        again = simulate_skeleton(100, KeyedStream(3, Tag.PSI))
        np.testing.assert_array_equal(keyed.positions, again.positions)
        sampled = simulate_skeleton(100, np.random.default_rng(0))
        assert np.all(np.abs(sampled.increments) == 1)

    def test_two_step_return_probability(self):
        increments = simulate_skeleton(2 * 10 ** 6, KeyedStream(4, Tag.PSI)).increments
        pairs = increments.reshape(-1, 2).sum(axis=1)
        n = pairs.size
        zeros = np.count_nonzero(pairs == 0)
        assert abs(zeros - n / 2.0) < 4 * np.sqrt(n / 4.0)


class TestWaitingTimes(object):

    def test_frozen(self):
        table = WaitingTimeTable.keyed(5)
        first = table.get(3, 2)
        assert table.get(3, 2) == first
        assert table.get_many([3], [2])[0] == first

    def test_scalar_and_vector_agree(self):
        levels = np.array([0, 0, 1, -4, 7])
        visits = np.array([1, 2, 1, 3, 1])
        vector = WaitingTimeTable.keyed(6).get_many(levels, visits)
        scalar = WaitingTimeTable.keyed(6)
        assert list(vector) == [scalar.get(y, i) for y, i in zip(levels, visits)]

    def test_geometric_law(self):
        samples = WaitingTimeTable.keyed(7).get_many(
            np.zeros(2 * 10 ** 5, dtype=np.int64), np.arange(1, 2 * 10 ** 5 + 1))
        p = 1.0 / 3.0
        ks = np.arange(6)
        observed = np.array([np.sum(samples == k) for k in ks] + [np.sum(samples >= 6)])
        expected = np.r_[(1 - p) * p ** ks, p ** 6] * samples.size
        assert stats.chisquare(observed, expected).pvalue > ALPHA
        se = np.sqrt(p / (1 - p) ** 2 / samples.size)
        assert abs(samples.mean() - 0.5) < 4 * se

    @pytest.mark.slow
    def test_geometric_mean_large_sample(self):
        samples = WaitingTimeTable.keyed(8).get_many(
            np.arange(10 ** 6), np.ones(10 ** 6, dtype=np.int64))
        assert samples.mean() == pytest.approx(0.5, rel=0.01)

    def test_zero_probability(self):
        table = WaitingTimeTable.keyed(1, p=0.0)
        assert table.get(0, 1) == 0
        assert list(table.get_many([1, 2], [1, 1])) == [0, 0]

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            WaitingTimeTable(p=1.0)


class TestEmbeddedWalk(object):

    def test_stubbed_example(self, alternating):
        trace = SkeletonTrace([1, -1, 1, -1])
        table = WaitingTimeTable.from_values({(0, 1): 2, (1, 1): 1, (0, 2): 0})
        assert embedded_position(trace, table, alternating, 4) == 1
        assert EmbeddedWalk(trace, table, alternating)[4] == 1

    def test_zero_waits(self, iid):
        trace = simulate_skeleton(50, KeyedStream(1, Tag.PSI))
        walk = EmbeddedWalk(trace, WaitingTimeTable.from_values({}), iid)
        assert not walk.positions.any()
        np.testing.assert_array_equal(walk.times, np.arange(51))

    def test_closed_form_matches_increments(self, decaying):
        trace = simulate_skeleton(300, KeyedStream(9, Tag.PSI))
        table = WaitingTimeTable.keyed(9)
        walk = EmbeddedWalk(trace, table, decaying)
        for n in (1, 17, 150, 300):
            assert embedded_position(trace, table, decaying, n) == walk[n]

    def test_centred_on_alternating(self, alternating):
        finals = []
        for seed in range(2000):
            trace = simulate_skeleton(100, KeyedStream(seed, Tag.PSI))
            finals.append(EmbeddedWalk(trace, WaitingTimeTable.keyed(seed), alternating)[100])
        finals = np.array(finals, dtype=float)
        assert abs(finals.mean()) < 4 * finals.std(ddof=1) / np.sqrt(finals.size)


class TestCoupling(object):

    @pytest.mark.parametrize("seed", range(5))
    def test_identity_holds(self, seed, iid, decaying):
        assert couple_and_check(2000, iid, seed)
        assert couple_and_check(2000, decaying, seed)

    def test_vertical_only(self, alternating):
        assert couple_and_check(500, alternating, 3, p=0.0)

    def test_faulty_table_detected(self, alternating):
        faulty = WaitingTimeTable.keyed(4, fault=True)
        assert not couple_and_check(2000, alternating, 4, table=faulty)

    @pytest.mark.slow
    def test_identity_many_seeds(self, decaying):
        assert all(couple_and_check(10 ** 4, decaying, seed) for seed in range(100))


class TestCrossings(object):

    def test_monotone_trace(self):
        changes = crossing_times(SkeletonTrace([1, 1, 1, 1]), 2)
        assert list(changes.tau) == [0, 2, 4]
        assert list(changes.Z) == [0, 1, 2]
        assert changes.crossings == 2
        assert changes.occupation_of_z(1) == 1

    def test_invalid_width(self):
        with pytest.raises(ValueError):
            crossing_times(SkeletonTrace([1]), 3)

    def test_visit_time(self):
        changes = crossing_times(SkeletonTrace.from_positions([0, 1, 0, 1]), 2)
        assert changes.visit_time(1, 2) == 3
        with pytest.raises(TraceError):
            changes.visit_time(1, 3)

    def test_time_change(self):
        trace = SkeletonTrace([1, -1])
        table = WaitingTimeTable.from_values({(0, 1): 3, (1, 1): 1})
        assert list(time_changes(trace, table, 2).T) == [0, 4, 6]

    def test_exit_time_mean(self):
        assert exit_time_mean(2) == pytest.approx(4.0)
        assert exit_time_mean(4) == pytest.approx(16.0)

    def test_crossing_durations_are_iid(self):
        tau = crossing_times(simulate_skeleton(4 * 10 ** 5, KeyedStream(5, Tag.PSI)), 2).tau
        durations = np.diff(tau)
        assert stats.ks_2samp(durations[0::2], durations[1::2]).pvalue > ALPHA
        se = durations.std(ddof=1) / np.sqrt(durations.size)
        assert abs(durations.mean() - exit_time_mean(2)) < 4 * se

    def test_z_is_symmetric(self):
        Z = crossing_times(simulate_skeleton(4 * 10 ** 5, KeyedStream(6, Tag.PSI)), 4).Z
        steps = np.diff(Z)
        assert set(np.unique(steps)) <= {-1, 1}
        ups = np.count_nonzero(steps == 1)
        assert abs(ups - steps.size / 2.0) < 4 * np.sqrt(steps.size / 4.0)


class TestResidues(object):

    def test_residue_counts(self):
        trace = SkeletonTrace([1, 1])
        assert residue_counts(trace, 2, 1) == {0: 1, 1: 1}
        with pytest.raises(TraceError):
            residue_counts(trace, 2, 2)

    def test_matrix_rows_sum_to_durations(self):
        trace = simulate_skeleton(20000, KeyedStream(7, Tag.PSI))
        counts, directions = residue_count_matrix(trace, 4)
        tau = crossing_times(trace, 4).tau
        np.testing.assert_array_equal(counts.sum(axis=1), np.diff(tau))
        assert counts[2].tolist() == [residue_counts(trace, 4, 3)[r] for r in range(4)]
        assert set(np.unique(directions)) <= {-1, 1}

    def test_mean_residue_count(self):
        trace = simulate_skeleton(4 * 10 ** 5, KeyedStream(8, Tag.PSI))
        counts, _ = residue_count_matrix(trace, 2)
        assert counts.mean(axis=0) == pytest.approx([2.0, 2.0], rel=0.02)


class TestReflection(object):

    def test_example(self):
        assert reflect_crossing([0, 1, 2], 2) == [0, -1, -2]

    def test_involution_on_all_short_paths(self):
        Q = 2
        paths = enumerate_first_crossings(Q, 14)
        assert paths
        images = set()
        for path in paths:
            image = reflect_crossing(path, Q)
            assert reflect_crossing(image, Q) == path
            assert image[-1] == -path[-1]
            assert len(image) == len(path)
            assert residue_occupation(image, Q) == residue_occupation(path, Q)
            images.add(tuple(image))
        assert images == set(tuple(path) for path in paths)

    def test_wider_strip(self):
        for path in enumerate_first_crossings(4, 12):
            image = reflect_crossing(path, 4)
            assert reflect_crossing(image, 4) == path
            assert residue_occupation(image, 4) == residue_occupation(path, 4)

    @pytest.mark.parametrize("path", [[0, 1, 2, 3], [0, 2], [1, 2], [0], [0, 1, 0]])
    def test_not_first_crossing(self, path):
        with pytest.raises(PathError):
            reflect_crossing(path, 2)
