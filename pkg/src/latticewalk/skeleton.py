"""Vertical skeleton decomposition of the walk.

The walk is split into its vertical skeleton ``Y`` (the ordinate seen only at
vertical moves, a simple symmetric walk), the geometric waiting times spent
moving horizontally at each visit of a level, and the horizontally embedded
walk ``X`` they generate. Strip crossing times, residue occupations and the
modified reflection of first-crossing paths live here too.
"""

import collections

import numpy as np
import structlog

from latticewalk import walk
from latticewalk.error import PathError, TraceError
from latticewalk.keyed import KeyedStream, Tag

LOGGER = structlog.get_logger()

P_HORIZONTAL = 1.0 / 3.0
BLOCK = 1 << 18


class SkeletonTrace(object):
    """
    Vertical skeleton ``Y_0 = 0, Y_n = psi_1 + ... + psi_n``.

    :param increments: Sequence of +1/-1 steps.

    """

    def __init__(self, increments):
        increments = np.asarray(increments, dtype=np.int8).ravel()
        if increments.size and not np.all(np.abs(increments) == 1):
            raise TraceError("skeleton increments must be +1 or -1")
        self.increments = increments
        self.positions = np.zeros(increments.size + 1, dtype=np.int64)
        np.cumsum(increments, out=self.positions[1:])

    @classmethod
    def from_increments(cls, increments):
        return cls(increments)

    @classmethod
    def from_positions(cls, positions):
        positions = np.asarray(positions, dtype=np.int64)
        if positions.size == 0 or positions[0] != 0:
            raise TraceError("skeleton must start at 0")
        return cls(np.diff(positions))

    @property
    def steps(self):
        return int(self.increments.size)

    def __len__(self):
        return self.steps

    def require(self, n):
        if n > self.steps:
            raise TraceError(
                "trace has {} steps, {} required".format(self.steps, n))

    def occupation(self, n=None):
        """Sparse occupation ``{y: eta_n(y)}`` over times ``0..n``."""
        n = self.steps if n is None else n
        if n < 0:
            return {}
        self.require(n)
        levels, counts = np.unique(self.positions[:n + 1], return_counts=True)
        return {int(level): int(count) for level, count in zip(levels, counts)}

    def visit_indices(self):
        """Visit index of each time: ``#{j <= k : Y_j = Y_k}``."""
        positions = self.positions
        order = np.argsort(positions, kind="stable")
        ordered = positions[order]
        starts = np.flatnonzero(np.r_[True, ordered[1:] != ordered[:-1]])
        group_start = np.repeat(starts, np.diff(np.r_[starts, ordered.size]))
        visits = np.empty_like(positions)
        visits[order] = np.arange(ordered.size) - group_start + 1
        return visits

    def return_times(self):
        """``sigma_0 = 0 < sigma_1 < ...``, the visits of ``Y`` to 0."""
        return np.flatnonzero(self.positions == 0)


def simulate_skeleton(n, rng):
    """Simple symmetric walk of ``n`` steps.

    :param rng: A :class:`KeyedStream` (``psi_k`` keyed by ``k = 1..n``) or a
        numpy ``Generator``.

    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(rng, KeyedStream):
        increments = np.empty(n, dtype=np.int8)
        for start in range(0, n, BLOCK):
            stop = min(start + BLOCK, n)
            counters = np.arange(start + 1, stop + 1, dtype=np.int64)
            increments[start:stop] = np.where(rng.uniforms(counters) < 0.5, 1, -1)
    else:
        increments = (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)
    return SkeletonTrace(increments)


class WaitingTimeTable(object):
    """
    Waiting times ``xi_i^(y)``, horizontal moves made during the ``i``-th visit
    to level ``y`` (visits counted from 1).

    In keyed mode each entry counts the leading draws ``U(y, i, j) < p`` of
    the ``HORIZONTAL`` stream, the very draws a :class:`walk.CoupledMoveSource`
    consumes, so ``P(xi = k) = q p**k``. Entries are sampled once then
    frozen. ``fault=True`` shifts the visit keying by one (negative control).

    """

    def __init__(self, stream=None, p=P_HORIZONTAL, values=None, default=0,
                 fault=False):
        if not 0 <= p < 1:
            raise ValueError("p must be in [0, 1)")
        self.stream = stream
        self.p = p
        self.default = default
        self.fault = fault
        self._entries = dict(values or {})
        self._stubbed = stream is None

    @classmethod
    def keyed(cls, seed, p=P_HORIZONTAL, fault=False):
        return cls(KeyedStream(seed, Tag.HORIZONTAL), p=p, fault=fault)

    @classmethod
    def from_values(cls, values, default=0):
        """Stubbed table from ``{(y, i): xi}``."""
        return cls(values=values, default=default)

    @property
    def q(self):
        return 1.0 - self.p

    def _draw(self, y, i):
        visit = i + 1 if self.fault else i
        count = 0
        while self.stream.uniform(y, visit, count) < self.p:
            count += 1
        return count

    def get(self, y, i):
        key = (int(y), int(i))
        if key not in self._entries:
            if self._stubbed:
                return self.default
            self._entries[key] = self._draw(*key)
        return self._entries[key]

    def get_many(self, levels, visits):
        """Vectorised lookup for paired arrays of levels and visit indices."""
        levels = np.asarray(levels, dtype=np.int64)
        visits = np.asarray(visits, dtype=np.int64)
        if self._stubbed:
            return np.array([self.get(y, i) for y, i in zip(levels, visits)],
                            dtype=np.int64)
        keyed_visits = visits + 1 if self.fault else visits
        counts = np.zeros(levels.shape, dtype=np.int64)
        alive = np.arange(levels.size)
        substep = 0
        while alive.size:
            hit = self.stream.uniforms_nd(
                levels[alive], keyed_visits[alive], substep) < self.p
            alive = alive[hit]
            counts[alive] += 1
            substep += 1
        for y, i, value in zip(levels.tolist(), visits.tolist(), counts.tolist()):
            self._entries.setdefault((y, i), value)
        return np.array([self._entries[(y, i)] for y, i in
                         zip(levels.tolist(), visits.tolist())], dtype=np.int64)


class EmbeddedWalk(object):
    """
    Horizontally embedded walk ``X_n`` and time change ``T_n``.

    ``X_n - X_{n-1} = eps_{Y_{n-1}} * xi`` for the visit of ``Y_{n-1}`` in
    progress at time ``n-1``; ``T_n = n + sum of those waiting times``.

    """

    def __init__(self, trace, table, field):
        self.trace = trace
        self.table = table
        self.field = field
        levels = trace.positions[:-1]
        visits = trace.visit_indices()[:-1]
        self.waits = table.get_many(levels, visits) if levels.size else \
            np.zeros(0, dtype=np.int64)
        eps = field.orientations(levels) if levels.size else \
            np.zeros(0, dtype=np.int64)
        self.positions = np.zeros(trace.steps + 1, dtype=np.int64)
        np.cumsum(eps.astype(np.int64) * self.waits, out=self.positions[1:])
        self.times = np.arange(trace.steps + 1, dtype=np.int64)
        self.times[1:] += np.cumsum(self.waits)

    def __getitem__(self, n):
        return int(self.positions[n])


def embedded_position(trace, table, field, n):
    """``X_n`` from the defining double sum over levels and visits."""
    trace.require(n)
    total = 0
    for y, count in trace.occupation(n - 1).items():
        eps = field.orientation_at(y)
        total += eps * sum(table.get(y, i) for i in range(1, count + 1))
    return total


def couple_and_check(n, field, seed, table=None, p=P_HORIZONTAL):
    """Check ``M_{T_m} = (X_m, Y_m)`` for all ``m <= n`` on shared randomness.

    :param n: Number of vertical moves.
    :param seed: Seed shared by the full walk and its decomposition.
    :param table: Waiting-time table override (corrupted tables must fail).
    :returns: True iff the identity holds at every ``m``.

    """
    if n < 1:
        raise ValueError("n must be >= 1")

    source = walk.CoupledMoveSource(seed, p=p)
    point = walk.ORIGIN
    sampled = [point]
    while source.vertical_moves < n:
        before = source.vertical_moves
        point = walk.step(point, field, source)
        if source.vertical_moves > before:
            sampled.append(point)

    trace = simulate_skeleton(n, KeyedStream(seed, Tag.PSI))
    if table is None:
        table = WaitingTimeTable.keyed(seed, p=p)
    embedded = EmbeddedWalk(trace, table, field)

    for m, point in enumerate(sampled):
        if point.x != embedded.positions[m] or point.y != trace.positions[m]:
            LOGGER.info("coupling mismatch", m=m, walk=tuple(point),
                        decomposition=(int(embedded.positions[m]),
                                       int(trace.positions[m])))
            return False
    return True


class TimeChanges(object):
    """
    Random times attached to a skeleton.

    ``T`` (instants just after vertical moves, when a waiting-time table is
    given), ``sigma`` (returns of ``Y`` to 0), ``tau`` (strip exits, with
    ``tau[0] = 0``), ``Z = Y_tau / Q`` and residues ``Y mod Q``.

    """

    def __init__(self, trace, period, tau, T=None):
        self.trace = trace
        self.period = period
        self.tau = tau
        self.T = T
        self.sigma = trace.return_times()
        self.Z = trace.positions[tau] // period
        self.residues = np.mod(trace.positions, period)

    @property
    def crossings(self):
        return int(self.tau.size - 1)

    def occupation_of_z(self, z, n=None):
        """``varpi_n(z) = #{1 <= k <= n : Z_k = z}``."""
        n = self.crossings if n is None else min(n, self.crossings)
        return int(np.count_nonzero(self.Z[1:n + 1] == z))

    def visit_time(self, y, k):
        """``S_k(y)``, the time of the ``k``-th visit (from 1) of level ``y``."""
        times = np.flatnonzero(self.trace.positions == y)
        if k < 1 or k > times.size:
            raise TraceError("level {} has fewer than {} visits".format(y, k))
        return int(times[k - 1])


def _strip_exits(positions, period):
    multiples = np.flatnonzero(np.mod(positions, period) == 0)
    levels = positions[multiples]
    changed = np.flatnonzero(levels[1:] != levels[:-1]) + 1
    return np.r_[0, multiples[changed]].astype(np.int64)


def crossing_times(trace, Q):
    """Strip exit times ``tau`` of the skeleton for width ``Q``.

    Consecutive exits differ by exactly ``Q`` in height. A trace ending inside
    a strip yields the completed prefix.

    """
    if Q < 2 or Q % 2:
        raise ValueError("Q must be an even integer >= 2")
    return TimeChanges(trace, Q, _strip_exits(trace.positions, Q))


def time_changes(trace, table, Q):
    """Full :class:`TimeChanges` including ``T_n``."""
    changes = crossing_times(trace, Q)
    changes.T = np.arange(trace.steps + 1, dtype=np.int64)
    levels = trace.positions[:-1]
    if levels.size:
        waits = table.get_many(levels, trace.visit_indices()[:-1])
        changes.T[1:] += np.cumsum(waits)
    return changes


def residue_counts(trace, Q, k):
    """``N_k(r)``: visits of each residue ``r`` during the ``k``-th crossing.

    :returns: ``{r: count}`` for every ``r`` in ``0..Q-1``.
    :raises TraceError: when the ``k``-th crossing is not in the trace.

    """
    changes = crossing_times(trace, Q)
    if k < 1 or k > changes.crossings:
        raise TraceError(
            "crossing {} not completed ({} available)".format(k, changes.crossings))
    start, stop = changes.tau[k - 1], changes.tau[k]
    counts = np.bincount(changes.residues[start:stop], minlength=Q)
    return {residue: int(count) for residue, count in enumerate(counts)}


def residue_count_matrix(trace, Q):
    """Rows ``N_k(.)`` for every completed crossing, plus exit directions.

    :returns: ``(counts, directions)`` with ``counts`` of shape
        ``(crossings, Q)`` and ``directions`` in {+1, -1}.

    """
    changes = crossing_times(trace, Q)
    tau = changes.tau
    if tau.size < 2:
        return np.zeros((0, Q), dtype=np.int64), np.zeros(0, dtype=np.int64)
    times = np.arange(tau[0], tau[-1])
    crossing = np.searchsorted(tau, times, side="right") - 1
    flat = crossing * Q + changes.residues[times]
    counts = np.bincount(flat, minlength=(tau.size - 1) * Q).reshape(-1, Q)
    directions = np.sign(np.diff(trace.positions[tau]))
    return counts, directions


def exit_time_mean(Q):
    """``E_0 tau_1`` from the first-step equations on ``(-Q, Q)``."""
    size = 2 * Q - 1
    system = np.eye(size)
    for index in range(size):
        if index > 0:
            system[index, index - 1] = -0.5
        if index < size - 1:
            system[index, index + 1] = -0.5
    means = np.linalg.solve(system, np.ones(size))
    return float(means[Q - 1])


def _check_first_crossing(path, Q):
    path = [int(value) for value in path]
    if len(path) < 2 or path[0] != 0:
        raise PathError("path must start at 0 and make at least one step")
    if any(abs(b - a) != 1 for a, b in zip(path, path[1:])):
        raise PathError("path increments must be +1 or -1")
    if any(abs(value) >= Q for value in path[:-1]):
        raise PathError("path leaves the strip before its final step")
    if abs(path[-1]) != Q:
        raise PathError("path must end on -Q or +Q")
    return path


def reflect_crossing(path, Q):
    """Modified reflection of a first-crossing path.

    The path is kept up to its last zero ``R``; the remainder is run
    backwards and shifted by ``-Q`` (up-crossings) or ``+Q`` (down-crossings).
    The map is an involution exchanging up- and down-crossings of equal
    length and preserving residue occupation mod ``Q``.

    :raises PathError: for paths that are not first-crossing paths.

    """
    path = _check_first_crossing(path, Q)
    tau = len(path) - 1
    last_zero = max(t for t in range(tau) if path[t] == 0)
    shift = -Q if path[-1] == Q else Q
    reflected = path[:last_zero + 1]
    reflected.extend(path[tau - (t - last_zero)] + shift
                     for t in range(last_zero + 1, tau + 1))
    return reflected


def enumerate_first_crossings(Q, max_length):
    """All first-crossing paths of the strip ``(-Q, Q)`` with ``tau <= max_length``."""
    found = []
    stack = [[0]]
    while stack:
        path = stack.pop()
        if len(path) - 1 >= max_length:
            continue
        for move in (1, -1):
            level = path[-1] + move
            extended = path + [level]
            if abs(level) == Q:
                found.append(extended)
            else:
                stack.append(extended)
    return found


def residue_occupation(path, Q):
    """Residue counts of ``path[0..len-2]`` (the final exit point excluded)."""
    counts = collections.Counter(value % Q for value in path[:-1])
    return {residue: counts.get(residue, 0) for residue in range(Q)}
