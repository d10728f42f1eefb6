"""Quenched return-probability oracles.

Given the skeleton (hence the occupation of every level) and the environment,
the embedded horizontal position is a signed sum of independent geometric
waiting times. Its characteristic function is a product of powers of
``chi(theta) = q / (1 - p e^{i theta})`` and the probability of sitting at 0
is recovered by Fourier inversion. An independent oracle convolves the
geometric laws directly.
"""

import math

import cachetools
import numpy as np
import structlog

from latticewalk.error import BudgetExceededError, QuadratureError

LOGGER = structlog.get_logger()

MIN_NODES = 256
MAX_NODES = 1 << 22
TOLERANCE = 1e-10
IMAGINARY_TOLERANCE = 1e-12
TAIL_MASS = 1e-14
SUPPORT_BUDGET = 1 << 20


class CharFnParams(object):
    """
    Parameters of the geometric waiting-time law ``P(xi = k) = q p**k``.

    :param p: Probability of a horizontal move, ``0 < p < 1``.

    """

    def __init__(self, p=1.0 / 3.0):
        if not 0 < p < 1:
            raise ValueError("p must be in (0, 1)")
        self.p = float(p)

    @property
    def q(self):
        return 1.0 - self.p

    def __eq__(self, other):
        return isinstance(other, CharFnParams) and self.p == other.p

    def __hash__(self):
        return hash(self.p)

    def __repr__(self):
        return "CharFnParams(p=%r)" % self.p


DEFAULT_PARAMS = CharFnParams()


def chi(theta, params=DEFAULT_PARAMS):
    """Characteristic function of one waiting time."""
    return params.q / (1.0 - params.p * np.exp(1j * np.asarray(theta)))


def r(theta, params=DEFAULT_PARAMS):
    """Modulus of :func:`chi`."""
    p, q = params.p, params.q
    return q / np.sqrt(q * q + 2.0 * p * (1.0 - np.cos(theta)))


def alpha(theta, params=DEFAULT_PARAMS):
    """Argument of :func:`chi`."""
    p = params.p
    return np.arctan2(p * np.sin(theta), 1.0 - p * np.cos(theta))


class QuenchedLaw(object):
    """
    Orientation and occupation pairs ``(eps_y, eta(y))`` of a skeleton.

    Only the totals ``n_plus`` and ``n_minus`` (occupation at ``+1`` and
    ``-1`` oriented levels) matter for the law of the embedded position.

    :param pairs: Iterable of ``(eps, eta)`` with ``eps`` in {-1, +1} and
        ``eta >= 0``.

    """

    def __init__(self, pairs=()):
        self.pairs = []
        n_plus = 0
        n_minus = 0
        for eps, eta in pairs:
            eps, eta = int(eps), int(eta)
            if eps not in (-1, 1):
                raise ValueError("orientation must be -1 or +1")
            if eta < 0:
                raise ValueError("occupation must be >= 0")
            self.pairs.append((eps, eta))
            if eps > 0:
                n_plus += eta
            else:
                n_minus += eta
        self.n_plus = n_plus
        self.n_minus = n_minus

    @classmethod
    def from_occupation(cls, occupation, field):
        """Law of a sparse occupation map ``{y: eta(y)}`` under ``field``."""
        return cls((field.orientation_at(y), eta)
                   for y, eta in sorted(occupation.items()))

    @classmethod
    def from_signed(cls, n_plus, n_minus):
        return cls([(1, n_plus), (-1, n_minus)])

    def signed_weights(self):
        return self.n_plus, self.n_minus

    @property
    def total(self):
        return self.n_plus + self.n_minus

    def extended(self, eps, count=1):
        """Copy with one more ``(eps, count)`` pair."""
        return QuenchedLaw(self.pairs + [(eps, count)])

    def __len__(self):
        return len(self.pairs)

    def __repr__(self):
        return "QuenchedLaw(n_plus=%d, n_minus=%d)" % (self.n_plus, self.n_minus)


def quenched_cf(theta, law, params=DEFAULT_PARAMS):
    """``prod chi(theta eps_y)**eta(y)`` evaluated in log-polar form."""
    theta = np.asarray(theta, dtype=np.float64)
    modulus = law.total * np.log(r(theta, params))
    phase = (law.n_plus - law.n_minus) * alpha(theta, params)
    return np.exp(modulus + 1j * phase)


@cachetools.cached(cachetools.LRUCache(maxsize=64))
def _grid(nodes, p):
    theta = -math.pi + 2.0 * math.pi * np.arange(nodes) / nodes
    params = CharFnParams(p)
    log_r = np.log(r(theta, params))
    phase = alpha(theta, params)
    log_r.setflags(write=False)
    phase.setflags(write=False)
    return log_r, phase


def _trapezoid(law, nodes, params):
    log_r, phase = _grid(nodes, params.p)
    values = np.exp(law.total * log_r + 1j * (law.n_plus - law.n_minus) * phase)
    return np.mean(values)


def quenched_return_prob(law, params=DEFAULT_PARAMS, tolerance=TOLERANCE,
                         min_nodes=MIN_NODES, max_nodes=MAX_NODES):
    """``(1/2pi) int quenched_cf`` by periodic trapezoid with node doubling.

    :raises QuadratureError: when ``max_nodes`` is reached before two
        successive estimates agree within ``tolerance``, or when the result
        keeps an imaginary part.

    """
    if law.total == 0:
        return 1.0

    nodes = min_nodes
    previous = _trapezoid(law, nodes, params)
    while True:
        nodes *= 2
        if nodes > max_nodes:
            raise QuadratureError(
                "no convergence with {} nodes (n={})".format(max_nodes, law.total))
        current = _trapezoid(law, nodes, params)
        if abs(current - previous) < tolerance:
            break
        previous = current

    if abs(current.imag) > IMAGINARY_TOLERANCE:
        raise QuadratureError(
            "imaginary residue {:.3e} in return probability".format(current.imag))
    return min(1.0, max(0.0, float(current.real)))


def quenched_interval_prob(law, eps0, params=DEFAULT_PARAMS, **quadrature):
    """Fourier form of ``P(0 in I(X, eps0 xi0))`` with ``xi0`` independent.

    Adding one waiting time oriented by ``eps0`` to the law and removing the
    factor ``q`` of its atom at 0 gives the interval event.

    """
    if eps0 not in (-1, 1):
        raise ValueError("eps0 must be -1 or +1")
    point = quenched_return_prob(law.extended(eps0, 1), params, **quadrature)
    return min(1.0, point / params.q)


def _geometric_pmf(params, tail):
    size = int(math.ceil(math.log(tail) / math.log(params.p))) + 1
    return params.q * params.p ** np.arange(size)


def _trim(offset, pmf, tail):
    cumulative = np.cumsum(pmf)
    start = int(np.searchsorted(cumulative, tail, side="right"))
    reverse = np.cumsum(pmf[::-1])
    stop = pmf.size - int(np.searchsorted(reverse, tail, side="right"))
    if start >= stop:
        return offset, pmf
    return offset + start, pmf[start:stop]


def exact_distribution(law, params=DEFAULT_PARAMS, tail=TAIL_MASS,
                       budget=SUPPORT_BUDGET):
    """Distribution of ``X`` by repeated convolution of geometric laws.

    :returns: ``(offset, pmf)`` with ``pmf[j] = P(X = offset + j)``.
    :raises BudgetExceededError: when the support outgrows ``budget``.

    """
    factors = max(law.total, 1)
    geometric = _geometric_pmf(params, tail / factors)
    offset = 0
    pmf = np.ones(1)
    for eps, count in ((1, law.n_plus), (-1, law.n_minus)):
        kernel = geometric if eps > 0 else geometric[::-1]
        for _ in range(count):
            if pmf.size + kernel.size - 1 > budget:
                raise BudgetExceededError(
                    "exact support exceeds budget of {} points".format(budget))
            pmf = np.convolve(pmf, kernel)
            if eps < 0:
                offset -= kernel.size - 1
            offset, pmf = _trim(offset, pmf, tail / factors)
    return offset, pmf


def exact_return_prob(law, params=DEFAULT_PARAMS, **options):
    """``P(X = 0)`` from :func:`exact_distribution`."""
    offset, pmf = exact_distribution(law, params, **options)
    index = -offset
    if index < 0 or index >= pmf.size:
        return 0.0
    return float(pmf[index])


def interval_hit_from_distribution(offset, pmf, eps0, params=DEFAULT_PARAMS):
    """``P(0 in I(X, eps0 xi0))`` for ``X`` given as ``(offset, pmf)``."""
    values = offset + np.arange(pmf.size)
    if eps0 == 1:
        mask = values <= 0
        weights = params.p ** (-values[mask])
    elif eps0 == -1:
        mask = values >= 0
        weights = params.p ** values[mask]
    else:
        raise ValueError("eps0 must be -1 or +1")
    return float(np.sum(pmf[mask] * weights))


def interval_hit_prob(law, eps0, params=DEFAULT_PARAMS, **options):
    """Exact interval-hit probability; ``I(x, +z) = {x..x+z}``, ``I(x, -z) = {x-z..x}``."""
    offset, pmf = exact_distribution(law, params, **options)
    return interval_hit_from_distribution(offset, pmf, eps0, params)


def monte_carlo_return_prob(law, samples, rng, params=DEFAULT_PARAMS):
    """Frequency of ``X = 0`` over resampled waiting times.

    :returns: ``(estimate, standard_error)``

    """
    if samples < 1:
        raise ValueError("samples must be >= 1")

    def _sums(count):
        if count == 0:
            return np.zeros(samples, dtype=np.int64)
        return rng.negative_binomial(count, params.q, size=samples)

    hits = _sums(law.n_plus) == _sums(law.n_minus)
    estimate = float(np.mean(hits))
    return estimate, math.sqrt(max(estimate * (1.0 - estimate), 0.0) / samples)
