"""Measurable statistics and exact verifiers built on the skeleton."""

import collections
import math

import numpy as np
import structlog
from scipy import stats

from latticewalk.error import TraceError
from latticewalk.keyed import KeyedStream, Tag, derive_seed
from latticewalk import skeleton

LOGGER = structlog.get_logger()

SMOOTHING_CONSTANT = math.sqrt(2.0 * math.pi * math.e)

EventIndicators = collections.namedtuple(
    "EventIndicators", ["range_small", "occupation_small", "imbalance_large"])

EventFrequencies = collections.namedtuple(
    "EventFrequencies",
    ["n", "replicas", "range_small", "occupation_small", "both", "imbalance_large"])

SmoothingCheck = collections.namedtuple(
    "SmoothingCheck", ["lhs", "rhs", "ratio", "holds"])

BridgeEstimate = collections.namedtuple(
    "BridgeEstimate", ["mean", "standard_error", "accepted"])


class EventThresholds(object):
    """
    Exponents of the thresholds ``d_{n,i} = n**(1/2 + delta_i)``.

    The three events at time ``n`` are: the skeleton range stays below
    ``d_{n,1}`` up to ``2n``; no level is visited ``d_{n,2}`` times or more
    before ``2n``; and, within both, the orientation-weighted occupation
    exceeds ``d_{n,3}`` in absolute value.

    """

    def __init__(self, delta1=0.1, delta2=0.1, delta3=0.1):
        for name, value in (("delta1", delta1), ("delta2", delta2),
                            ("delta3", delta3)):
            if value <= 0:
                raise ValueError("{} must be > 0".format(name))
        self.deltas = (float(delta1), float(delta2), float(delta3))

    def d(self, n, i):
        """Threshold ``d_{n,i}`` for ``i`` in 1..3."""
        return float(n) ** (0.5 + self.deltas[i - 1])

    def to_config(self):
        return {"delta1": self.deltas[0], "delta2": self.deltas[1],
                "delta3": self.deltas[2]}

    def __repr__(self):
        return "EventThresholds(%r, %r, %r)" % self.deltas


def event_indicators(trace, field, n, thresholds):
    """The three events for one skeleton at time ``n``.

    :raises TraceError: when the trace has fewer than ``2n`` steps.

    """
    if n < 1:
        raise ValueError("n must be >= 1")
    trace.require(2 * n)
    positions = trace.positions
    range_small = bool(np.max(np.abs(positions[:2 * n + 1])) < thresholds.d(n, 1))

    levels, counts = np.unique(positions[:2 * n], return_counts=True)
    occupation_small = bool(counts.max() < thresholds.d(n, 2))

    imbalance_large = False
    if range_small and occupation_small:
        weighted = int(np.sum(field.orientations(levels).astype(np.int64) * counts))
        imbalance_large = abs(weighted) > thresholds.d(n, 3)
    return EventIndicators(range_small, occupation_small, imbalance_large)


def event_frequencies(n, thresholds, field, replicas, seed=0):
    """Empirical frequencies of the events over ``replicas`` skeletons.

    Replica ``i`` draws its skeleton from ``derive_seed(seed, REPLICA, i)``.

    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")

    totals = np.zeros(4, dtype=np.int64)
    for replica in range(replicas):
        stream = KeyedStream(derive_seed(seed, Tag.REPLICA, replica), Tag.PSI)
        trace = skeleton.simulate_skeleton(2 * n, stream)
        events = event_indicators(trace, field, n, thresholds)
        totals += (events.range_small, events.occupation_small,
                   events.range_small and events.occupation_small,
                   events.imbalance_large)

    frequencies = totals / float(replicas)
    LOGGER.debug("event frequencies", n=n, replicas=replicas,
                 frequencies=frequencies.tolist())
    return EventFrequencies(n, replicas, *frequencies.tolist())


class OccupationProfile(object):
    """Normalised occupation ``pi_n(y) = eta_{2n-1}(y) / 2n`` and its entropy."""

    def __init__(self, n, pi):
        self.n = n
        self.pi = pi
        weights = np.fromiter(pi.values(), dtype=np.float64, count=len(pi))
        self.entropy = float(stats.entropy(weights)) if weights.size else 0.0
        self.support_size = len(pi)

    @property
    def entropy_bound(self):
        return math.log(self.support_size) if self.support_size else 0.0

    def __repr__(self):
        return "OccupationProfile(n=%d, entropy=%.6f, support_size=%d)" % (
            self.n, self.entropy, self.support_size)


def entropy_profile(trace, n):
    """Occupation profile of the first ``2n`` skeleton positions.

    :raises ValueError: when ``n < 1``.
    :raises TraceError: when the trace is shorter than ``2n``.

    """
    if n < 1:
        raise ValueError("n must be >= 1")
    trace.require(2 * n)
    occupation = trace.occupation(2 * n - 1)
    total = float(2 * n)
    return OccupationProfile(
        n, {level: count / total for level, count in occupation.items()})


def gaussian_smoothing_check(values, probabilities, d):
    """Compare ``P(|Z| <= d/2)`` with ``sqrt(2 pi e) P(|Z + G| <= d)``.

    ``G`` is centred normal with standard deviation ``d``, independent of the
    integer variable ``Z`` given by ``values`` and ``probabilities``.

    :rtype: SmoothingCheck

    """
    if d < 1:
        raise ValueError("d must be >= 1")
    values = np.asarray(values, dtype=np.float64)
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if probabilities.shape != values.shape:
        raise ValueError("values and probabilities must have the same shape")
    if np.any(probabilities < 0) or not np.isclose(probabilities.sum(), 1.0):
        raise ValueError("probabilities must be a normalised distribution")

    lhs = float(np.sum(probabilities[np.abs(values) <= d / 2.0]))
    window = (stats.norm.cdf((d - values) / d) -
              stats.norm.cdf((-d - values) / d))
    rhs = SMOOTHING_CONSTANT * float(np.sum(probabilities * window))
    ratio = lhs / rhs if rhs > 0 else math.inf
    return SmoothingCheck(lhs, rhs, ratio, lhs <= rhs)


def _transition(k, z):
    """``P^k(0, z)`` for the simple symmetric walk."""
    k = np.asarray(k)
    ups = (k + z) / 2.0
    valid = (np.abs(z) <= k) & (np.mod(k + z, 2) == 0)
    return np.where(valid, stats.binom.pmf(np.round(ups), k, 0.5), 0.0)


def conditioned_occupation(n, z):
    """Exact mean number of visits to ``z`` in ``1..2n`` for a walk bridge.

    Sums ``P^k(0, z) P^{2n-k}(z, 0) / P^{2n}(0, 0)`` over ``k = 1..2n``.

    """
    if n < 1:
        raise ValueError("n must be >= 1")
    steps = 2 * n
    if abs(z) > steps:
        raise ValueError("|z| must be <= 2n")
    k = np.arange(1, steps + 1)
    terms = _transition(k, z) * _transition(steps - k, -z)
    return float(np.sum(terms) / _transition(steps, 0))


def bridge_occupation_mc(n, z, samples, rng):
    """Rejection-sampled estimate of :func:`conditioned_occupation`.

    :returns: mean, standard error and the number of accepted bridges.
    :rtype: BridgeEstimate

    """
    steps = 2 * n
    increments = 2 * rng.integers(0, 2, size=(samples, steps), dtype=np.int8) - 1
    paths = np.cumsum(increments, axis=1, dtype=np.int64)
    bridges = paths[paths[:, -1] == 0]
    if bridges.shape[0] < 2:
        raise TraceError("fewer than 2 bridges accepted")
    visits = np.count_nonzero(bridges == z, axis=1)
    return BridgeEstimate(
        float(visits.mean()),
        float(visits.std(ddof=1) / math.sqrt(visits.size)),
        int(visits.size))


class StripSets(object):
    """
    Crossings split by distance from the origin.

    ``near`` holds crossing indices ``k`` (from 0) whose endpoints
    ``Y_{tau_k}`` and ``Y_{tau_{k+1}}`` both lie in ``[-LQ, LQ]``; ``far``
    those with both endpoints at distance ``>= LQ``. ``theta[k]`` is the
    horizontal increment ``X_{tau_{k+1}} - X_{tau_k}``.

    """

    def __init__(self, L, Q, near, far, theta, total):
        self.L = L
        self.Q = Q
        self.near = near
        self.far = far
        self.theta = theta
        self.total = total

    @property
    def near_sum(self):
        return int(np.sum(self.theta[self.near]))

    @property
    def far_sum(self):
        return int(np.sum(self.theta[self.far]))

    @property
    def is_partition(self):
        """``near`` and ``far`` are disjoint and cover every crossing."""
        covered = np.union1d(self.near, self.far)
        return (self.near.size + self.far.size == self.theta.size
                and np.array_equal(covered, np.arange(self.theta.size)))

    @property
    def identity_holds(self):
        return self.is_partition and self.near_sum + self.far_sum == self.total

    def far_increments(self):
        return self.theta[self.far]

    def __repr__(self):
        return "StripSets(L=%d, near=%d, far=%d)" % (
            self.L, self.near.size, self.far.size)


def split_crossings(distance, limit):
    """Indices of crossings with both endpoints within, or beyond, ``limit``.

    :param distance: ``|Y|`` at the successive strip exits.
    :returns: ``(near, far)`` index arrays.

    """
    near = np.flatnonzero((distance[:-1] <= limit) & (distance[1:] <= limit))
    far = np.flatnonzero((distance[:-1] >= limit) & (distance[1:] >= limit))
    return near, far


def strip_decomposition(trace, field, table, L, crossings, Q=None):
    """Classify the first ``crossings`` strip crossings.

    :param Q: Strip width; defaults to the period of ``field``.
    :raises TraceError: when the trace holds fewer crossings, or when the
        near and far sets do not partition them.

    """
    if L < 0:
        raise ValueError("L must be >= 0")
    Q = field.period if Q is None else Q
    changes = skeleton.crossing_times(trace, Q)
    if changes.crossings < crossings:
        raise TraceError("trace has {} crossings, {} required".format(
            changes.crossings, crossings))

    tau = changes.tau[:crossings + 1]
    embedded = skeleton.EmbeddedWalk(trace, table, field)
    x = embedded.positions[tau]
    theta = np.diff(x)
    distance = np.abs(trace.positions[tau])
    near, far = split_crossings(distance, L * Q)
    sets = StripSets(L, Q, near, far, theta, int(x[-1]))
    if not sets.identity_holds:
        LOGGER.error("strip decomposition mismatch", L=L,
                     near=sets.near_sum, far=sets.far_sum, total=sets.total)
        raise TraceError(
            "near and far crossings do not decompose X at the last exit "
            "(near {}, far {}, total {})".format(
                sets.near_sum, sets.far_sum, sets.total))
    return sets
