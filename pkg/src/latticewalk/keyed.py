"""Counter-based keyed randomness.

Every random quantity in the toolkit is a pure function of a 64-bit seed, a
purpose tag and integer counters (a level, a visit index, a step index...).
Values are produced by absorbing the key words into a SplitMix64 state, so an
infinite two-sided environment needs no storage and queries may happen in any
order, from any worker, with identical results.

The scalar and the numpy-vectorised paths compute bit-identical values.
"""

import enum

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB
_TWO_M53 = 1.0 / float(1 << 53)


class Tag(enum.IntEnum):
    """Purpose tags separating independent families of draws."""

    LAMBDA = 1
    RHO = 2
    PSI = 3
    HORIZONTAL = 4
    REPLICA = 5
    ENV = 6
    WALK = 7
    STEP = 8


def mix64(value):
    """SplitMix64 finaliser on a Python integer."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * _C1) & MASK64
    z = ((z ^ (z >> 27)) * _C2) & MASK64
    return z ^ (z >> 31)


def mix64_array(values):
    """SplitMix64 finaliser on a uint64 numpy array."""
    z = np.asarray(values, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_C1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_C2)
    return z ^ (z >> np.uint64(31))


def absorb(state, word):
    """Fold one signed integer key word into a 64-bit state."""
    return mix64(((state + GAMMA) & MASK64) ^ mix64(word & MASK64))


def absorb_array(state, words):
    """Vectorised :func:`absorb`; ``state`` may be a scalar or an array."""
    words = np.asarray(words, dtype=np.int64).astype(np.uint64)
    state = np.asarray(state, dtype=np.uint64)
    with np.errstate(over="ignore"):
        shifted = state + np.uint64(GAMMA)
    return mix64_array(shifted ^ mix64_array(words))


def hash_words(*words):
    """Hash a sequence of integer words to a 64-bit value."""
    state = 0
    for word in words:
        state = absorb(state, int(word))
    return state


def to_unit(bits):
    """Map 64 random bits to a double in [0, 1)."""
    return (bits >> 11) * _TWO_M53


def derive_seed(master, *keys):
    """Derive a child 64-bit seed from a master seed and integer keys."""
    return hash_words(master, *keys)


class KeyedStream(object):
    """
    Pure keyed source of uniforms.

    :param seed: 64-bit seed.
    :type seed: int
    :param path: Integer words (usually a :class:`Tag` first) naming the stream.

    """

    def __init__(self, seed, *path):
        self.seed = int(seed) & MASK64
        self.path = tuple(int(word) for word in path)
        self._prefix = hash_words(self.seed, *self.path)

    def __repr__(self):
        return "KeyedStream(seed=%d, path=%r)" % (self.seed, self.path)

    def child(self, *keys):
        """Return a sub-stream whose path extends this one."""
        return KeyedStream(self.seed, *(self.path + tuple(keys)))

    def bits(self, *counters):
        state = self._prefix
        for counter in counters:
            state = absorb(state, int(counter))
        return state

    def uniform(self, *counters):
        """Uniform double in [0, 1) keyed by ``counters``."""
        return to_unit(self.bits(*counters))

    def uniforms(self, counters, *leading):
        """
        Vectorised uniforms.

        :param counters: Array of integers absorbed last.
        :param leading: Scalar counters absorbed before ``counters``.
        :returns: float64 array with the shape of ``counters``.

        """
        state = self.bits(*leading)
        bits = absorb_array(np.uint64(state), counters)
        return (bits >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def uniforms_nd(self, *words):
        """Uniforms keyed by broadcast words (scalars or integer arrays)."""
        state = np.uint64(self._prefix)
        for word in words:
            state = absorb_array(state, word)
        return (state >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def generator(self):
        """Sequential numpy generator on a Philox counter-based bit generator."""
        return np.random.Generator(np.random.Philox(key=self._prefix))
