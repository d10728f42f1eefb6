"""Simple random walk on a horizontally directed lattice.

From ``(x, y)`` the walk moves up, down, or one step along ``eps_y``, each
with probability 1/3. Move sources follow the numpy ``Generator.integers``
protocol so tests can substitute scripted moves.
"""

import collections

import numpy as np
import structlog

from latticewalk.error import TraceError
from latticewalk.keyed import KeyedStream, Tag

LOGGER = structlog.get_logger()

UP = 0
DOWN = 1
HORIZONTAL = 2

_DY = np.array([1, -1, 0], dtype=np.int64)
BLOCK = 1 << 16

LatticePoint = collections.namedtuple("LatticePoint", ["x", "y"])
ORIGIN = LatticePoint(0, 0)

ReturnCount = collections.namedtuple(
    "ReturnCount", ["returns_to_start", "first_return_time", "final"])


class WalkRun(object):
    """
    Recorded trajectory of the walk.

    :param start: Starting point.
    :param positions: Positions ``M_0 = start, M_1, ...``.
    :param rng_stream: Identifier of the random stream that drove the run.

    """

    def __init__(self, start, positions=None, rng_stream=None):
        self.start = LatticePoint(*start)
        self.positions = list(positions) if positions else [self.start]
        self.rng_stream = rng_stream
        if self.positions[0] != self.start:
            raise TraceError("positions[0] must equal start")

    def append(self, point):
        self.positions.append(point)

    def __len__(self):
        return len(self.positions)

    def validate(self, field):
        """Check that every transition is an allowed edge.

        :raises TraceError: naming the first offending step.

        """
        points = np.array(self.positions, dtype=np.int64).reshape(-1, 2)
        dx = np.diff(points[:, 0])
        dy = np.diff(points[:, 1])
        eps = field.orientations(points[:-1, 1])
        vertical = (dx == 0) & (np.abs(dy) == 1)
        horizontal = (dy == 0) & (dx == eps)
        bad = np.flatnonzero(~(vertical | horizontal))
        if bad.size:
            index = int(bad[0])
            raise TraceError(
                "step {} from {} to {} is not an allowed edge".format(
                    index + 1, self.positions[index], self.positions[index + 1]))
        return True


def allowed_neighbors(p, field):
    """Neighbours reachable from ``p`` in canonical order (up, down, horizontal)."""
    x, y = p
    return [
        LatticePoint(x, y + 1),
        LatticePoint(x, y - 1),
        LatticePoint(x + field.orientation_at(y), y),
    ]


def step(p, field, rng):
    """One uniform move among the three allowed neighbours."""
    move = int(rng.integers(0, 3))
    return allowed_neighbors(p, field)[move]


def _advance(x, y, moves, field):
    """Positions after each move in ``moves`` starting from ``(x, y)``."""
    dy = _DY[moves]
    ys = y + np.cumsum(dy)
    before = np.empty_like(ys)
    before[0] = y
    before[1:] = ys[:-1]
    dx = np.where(moves == HORIZONTAL, field.orientations(before), 0)
    xs = x + np.cumsum(dx)
    return xs, ys


def run_and_count_returns(start, field, n_steps, rng):
    """Run ``n_steps`` moves counting visits back to ``start``.

    Positions are folded into counters block by block and not retained.

    :returns: ``(returns_to_start, first_return_time, final)``
    :rtype: ReturnCount

    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")

    start = LatticePoint(*start)
    x, y = start
    returns = 0
    first_return = None
    done = 0
    while done < n_steps:
        size = min(BLOCK, n_steps - done)
        moves = np.asarray(rng.integers(0, 3, size=size), dtype=np.int64)
        xs, ys = _advance(x, y, moves, field)
        hits = np.flatnonzero((xs == start.x) & (ys == start.y))
        if hits.size:
            returns += int(hits.size)
            if first_return is None:
                first_return = done + int(hits[0]) + 1
        x, y = int(xs[-1]), int(ys[-1])
        done += size

    return ReturnCount(returns, first_return, LatticePoint(x, y))


def simulate_walk(start, field, n_steps, rng, rng_stream=None):
    """Run ``n_steps`` moves and record the full trajectory."""
    run = WalkRun(start, rng_stream=rng_stream)
    x, y = run.start
    done = 0
    while done < n_steps:
        size = min(BLOCK, n_steps - done)
        moves = np.asarray(rng.integers(0, 3, size=size), dtype=np.int64)
        xs, ys = _advance(x, y, moves, field)
        run.positions.extend(
            LatticePoint(int(a), int(b)) for a, b in zip(xs, ys))
        x, y = int(xs[-1]), int(ys[-1])
        done += size
    return run


def walk_generator(seed):
    """Sequential move generator for free-running walks."""
    return KeyedStream(seed, Tag.STEP).generator()


class CoupledMoveSource(object):
    """
    Move source sharing its randomness with the skeleton decomposition.

    The ``j``-th draw during the ``i``-th visit to level ``y`` is horizontal
    when ``U(y, i, j) < p`` on the ``HORIZONTAL`` stream; otherwise the walk
    moves vertically with sign ``psi_k`` from the ``PSI`` stream, ``k`` being
    the index of the vertical move. Visits are counted from 1.

    """

    def __init__(self, seed, p=1.0 / 3.0, start_level=0):
        self.p = p
        self.horizontal = KeyedStream(seed, Tag.HORIZONTAL)
        self.psi = KeyedStream(seed, Tag.PSI)
        self.level = start_level
        self.visits = collections.Counter({start_level: 1})
        self.substep = 0
        self.vertical_moves = 0

    def next_move(self):
        visit = self.visits[self.level]
        if self.horizontal.uniform(self.level, visit, self.substep) < self.p:
            self.substep += 1
            return HORIZONTAL
        self.vertical_moves += 1
        up = self.psi.uniform(self.vertical_moves) < 0.5
        self.level += 1 if up else -1
        self.visits[self.level] += 1
        self.substep = 0
        return UP if up else DOWN

    def integers(self, low, high=None, size=None):
        if size is None:
            return self.next_move()
        return np.array([self.next_move() for _ in range(size)], dtype=np.int64)


class ScriptedMoves(object):
    """Move source replaying a fixed sequence of moves."""

    def __init__(self, moves):
        self.moves = list(moves)
        self.cursor = 0

    def _take(self):
        if self.cursor >= len(self.moves):
            raise TraceError("scripted move sequence exhausted")
        move = self.moves[self.cursor]
        self.cursor += 1
        return move

    def integers(self, low, high=None, size=None):
        if size is None:
            return self._take()
        return np.array([self._take() for _ in range(size)], dtype=np.int64)


def dump_trajectory(run, output_file):
    """Write one ``x<TAB>y`` line per position."""
    for point in run.positions:
        output_file.write("{}\t{}\n".format(point.x, point.y))
