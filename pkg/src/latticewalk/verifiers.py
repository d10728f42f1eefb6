"""Registered verification suites run by ``latticewalk verify``.

Each verifier takes a :class:`VerifySettings` and returns a
:class:`VerifierResult` holding a pass flag and the statistics it measured.
"""

import collections
import math

import numpy as np
import structlog
from scipy import stats

from latticewalk import diagnostics, fourier, skeleton
from latticewalk.env import EnvironmentSpec, OrientationField, PeriodicPattern
from latticewalk.error import ConfigError, TraceError
from latticewalk.keyed import KeyedStream, Tag, derive_seed

LOGGER = structlog.get_logger()

ALPHA = 0.001

VERIFIERS = collections.OrderedDict()

VerifierResult = collections.namedtuple(
    "VerifierResult", ["name", "passed", "statistics"])

FAULTS = ("coupling",)


def verifier(name):
    """Register a verification suite under ``name``."""

    def register(function):
        VERIFIERS[name] = function
        return function

    return register


class VerifySettings(object):
    """Sample sizes of the verification suites."""

    DEFAULTS = collections.OrderedDict([
        ("waiting_samples", 10 ** 6),
        ("coupling_seeds", 100),
        ("coupling_steps", 10 ** 4),
        ("oracle_laws", 20),
        ("oracle_max_total", 12),
        ("oracle_mc_laws", 5),
        ("oracle_mc_samples", 10 ** 5),
        ("residue_crossings", 10 ** 5),
        ("reflection_length", 14),
        ("bridge_half_length", 10),
        ("bridge_samples", 10 ** 5),
        ("smoothing_laws", 100),
        ("smoothing_max_d", 20),
        ("strip_replicas", 200),
        ("strip_crossings", 200),
        ("strip_L", 1),
    ])

    def __init__(self, seed=0, env_spec=None, faults=(), **sizes):
        unknown = set(sizes) - set(self.DEFAULTS)
        if unknown:
            raise ConfigError("unknown verify settings: {}".format(
                ", ".join(sorted(unknown))))
        self.seed = seed
        self.env_spec = env_spec
        self.faults = frozenset(faults)
        for key, default in self.DEFAULTS.items():
            setattr(self, key, sizes.get(key, default))

    @classmethod
    def from_config(cls, block, seed=0, env_spec=None, faults=()):
        sizes = {}
        for key in block:
            if key not in cls.DEFAULTS:
                raise ConfigError("unknown verify setting '{}'".format(key),
                                  line=block.line(key))
            sizes[key] = block.get_int(key, minimum=0)
        return cls(seed, env_spec, faults, **sizes)

    def generator(self, salt):
        return KeyedStream(self.seed, Tag.REPLICA, salt).generator()


def _coupling_field(settings):
    spec = settings.env_spec or EnvironmentSpec.iid_uniform(settings.seed)
    return OrientationField(spec)


@verifier("waiting_times")
def check_waiting_times(settings):
    """Keyed waiting times follow ``P(xi = k) = q p**k``."""
    samples = settings.waiting_samples
    side = int(math.ceil(math.sqrt(samples)))
    levels = np.repeat(np.arange(side, dtype=np.int64) - side // 2, side)[:samples]
    visits = np.tile(np.arange(1, side + 1, dtype=np.int64), side)[:samples]
    table = skeleton.WaitingTimeTable.keyed(settings.seed)
    values = table.get_many(levels, visits)

    bins = 10
    observed = np.bincount(np.minimum(values, bins), minlength=bins + 1)
    probabilities = table.q * table.p ** np.arange(bins)
    expected = samples * np.append(probabilities, 1.0 - probabilities.sum())
    _, p_value = stats.chisquare(observed, expected)
    mean = float(values.mean())
    target = table.p / table.q
    error = float(values.std(ddof=1) / math.sqrt(samples))
    tolerance = max(0.01 * target, 4.0 * error)
    passed = p_value > ALPHA and abs(mean - target) < tolerance
    return VerifierResult("waiting_times", passed, {
        "samples": samples, "mean": mean, "standard_error": error,
        "chi_square_p": float(p_value)})


@verifier("coupling")
def check_coupling(settings):
    """Full walk sampled after vertical moves equals the decomposition."""
    field = _coupling_field(settings)
    fault = "coupling" in settings.faults
    failures = 0
    for index in range(settings.coupling_seeds):
        seed = derive_seed(settings.seed, Tag.WALK, index)
        table = skeleton.WaitingTimeTable.keyed(seed, fault=True) if fault else None
        if not skeleton.couple_and_check(settings.coupling_steps, field, seed, table):
            failures += 1
    return VerifierResult("coupling", failures == 0, {
        "seeds": settings.coupling_seeds, "steps": settings.coupling_steps,
        "failures": failures, "fault_injected": fault})


def _random_law(rng, total):
    pairs = []
    remaining = total
    while remaining > 0:
        eta = int(rng.integers(1, remaining + 1))
        pairs.append((1 if rng.random() < 0.5 else -1, eta))
        remaining -= eta
    return fourier.QuenchedLaw(pairs)


@verifier("oracle")
def check_oracle(settings):
    """Fourier oracle agrees with the exact convolution and Monte Carlo."""
    rng = settings.generator(1)
    worst = 0.0
    for _ in range(settings.oracle_laws):
        law = _random_law(rng, int(rng.integers(1, settings.oracle_max_total + 1)))
        worst = max(worst, abs(fourier.quenched_return_prob(law) -
                               fourier.exact_return_prob(law)))

    worst_z = 0.0
    for _ in range(settings.oracle_mc_laws):
        law = _random_law(rng, int(rng.integers(20, 61)))
        estimate, error = fourier.monte_carlo_return_prob(
            law, settings.oracle_mc_samples, rng)
        worst_z = max(worst_z, abs(estimate - fourier.quenched_return_prob(law)) / error)
    return VerifierResult("oracle", worst < 1e-8 and worst_z < 4.0, {
        "max_abs_difference": worst, "max_standard_errors": worst_z})


@verifier("residue")
def check_residue(settings):
    """Residue visits per crossing average ``Q`` and ignore the exit side."""
    statistics = {}
    passed = True
    for Q in (2, 4):
        exit_mean = skeleton.exit_time_mean(Q)
        steps = int(1.1 * settings.residue_crossings * Q * Q) + 100
        stream = KeyedStream(derive_seed(settings.seed, Tag.REPLICA, Q), Tag.PSI)
        trace = skeleton.simulate_skeleton(steps, stream)
        counts, directions = skeleton.residue_count_matrix(trace, Q)
        counts = counts[:settings.residue_crossings]
        directions = directions[:settings.residue_crossings]

        means = counts.mean(axis=0)
        errors = counts.std(axis=0, ddof=1) / math.sqrt(counts.shape[0])
        tolerance = np.maximum(0.02 * exit_mean / Q, 4.0 * errors)
        close = np.abs(means - exit_mean / Q) < tolerance
        p_values = [stats.ks_2samp(counts[directions > 0, residue],
                                   counts[directions < 0, residue])[1]
                    for residue in range(Q)]
        passed &= (abs(exit_mean - Q * Q) < 1e-9 and bool(np.all(close))
                   and min(p_values) > ALPHA)
        statistics["Q{}".format(Q)] = {
            "crossings": int(counts.shape[0]), "exit_time_mean": exit_mean,
            "mean_counts": means.tolist(), "ks_p_min": float(min(p_values))}
    return VerifierResult("residue", bool(passed), statistics)


@verifier("reflection")
def check_reflection(settings):
    """The reflection is an involution and a residue-preserving bijection."""
    Q = 2
    paths = skeleton.enumerate_first_crossings(Q, settings.reflection_length)
    ups = [tuple(path) for path in paths if path[-1] == Q]
    downs = set(tuple(path) for path in paths if path[-1] == -Q)
    failures = 0
    images = set()
    for path in ups:
        image = tuple(skeleton.reflect_crossing(path, Q))
        images.add(image)
        if (tuple(skeleton.reflect_crossing(image, Q)) != path or
                len(image) != len(path) or
                skeleton.residue_occupation(image, Q) !=
                skeleton.residue_occupation(path, Q)):
            failures += 1
    bijective = images == downs and len(images) == len(ups)
    return VerifierResult("reflection", failures == 0 and bijective, {
        "paths": len(paths), "up": len(ups), "down": len(downs),
        "failures": failures, "bijective": bijective})


@verifier("conditioned_occupation")
def check_conditioned_occupation(settings):
    """Exact bridge occupation matches rejection sampling."""
    exact_ok = (math.isclose(diagnostics.conditioned_occupation(1, 0), 1.0) and
                math.isclose(diagnostics.conditioned_occupation(1, 1), 0.5))
    n = settings.bridge_half_length
    rng = settings.generator(2)
    worst = 0.0
    for z in range(-3, 4):
        estimate = diagnostics.bridge_occupation_mc(n, z, settings.bridge_samples, rng)
        exact = diagnostics.conditioned_occupation(n, z)
        worst = max(worst, abs(estimate.mean - exact) / estimate.standard_error)
    return VerifierResult("conditioned_occupation", exact_ok and worst < 3.0, {
        "half_length": n, "max_standard_errors": worst, "exact_small_cases": exact_ok})


@verifier("smoothing")
def check_smoothing(settings):
    """Gaussian-smoothing inequality over random integer laws."""
    rng = settings.generator(3)
    violations = 0
    worst = 0.0
    for _ in range(settings.smoothing_laws):
        size = int(rng.integers(1, 41))
        offset = int(rng.integers(-30, 31))
        values = offset + np.arange(size)
        probabilities = rng.dirichlet(np.ones(size))
        for d in range(1, settings.smoothing_max_d + 1):
            check = diagnostics.gaussian_smoothing_check(values, probabilities, d)
            worst = max(worst, check.ratio)
            violations += not check.holds
    return VerifierResult("smoothing", violations == 0, {
        "laws": settings.smoothing_laws, "violations": violations,
        "max_ratio": worst})


@verifier("strip")
def check_strip(settings):
    """Strip sums add up and far crossings are centred for a periodic field."""
    pattern = PeriodicPattern.alternating(2)
    field = OrientationField(EnvironmentSpec.explicit_defects(pattern, ()))
    crossings = settings.strip_crossings
    mismatches = 0
    far = []
    for index in range(settings.strip_replicas):
        seed = derive_seed(settings.seed, Tag.WALK, index)
        steps = 4 * crossings * pattern.period ** 2
        trace = skeleton.simulate_skeleton(steps, KeyedStream(seed, Tag.PSI))
        while skeleton.crossing_times(trace, pattern.period).crossings < crossings:
            steps *= 2
            trace = skeleton.simulate_skeleton(steps, KeyedStream(seed, Tag.PSI))
        table = skeleton.WaitingTimeTable.keyed(seed)
        try:
            sets = diagnostics.strip_decomposition(
                trace, field, table, settings.strip_L, crossings)
        except TraceError as error:
            LOGGER.warning("strip decomposition failed", seed=seed, error=error.message)
            mismatches += 1
            continue
        last_exit = int(skeleton.crossing_times(trace, pattern.period).tau[crossings])
        direct = skeleton.embedded_position(trace, table, field, last_exit)
        mismatches += sets.near_sum + sets.far_sum != direct
        far.extend(sets.far_increments().tolist())

    far = np.asarray(far, dtype=np.float64)
    mean = float(far.mean()) if far.size else 0.0
    error = float(far.std(ddof=1) / math.sqrt(far.size)) if far.size > 1 else 0.0
    centred = far.size > 1 and abs(mean) <= 4.0 * error
    return VerifierResult("strip", mismatches == 0 and centred, {
        "replicas": settings.strip_replicas, "mismatches": mismatches,
        "far_crossings": int(far.size), "far_mean": mean, "far_standard_error": error})


def run_verifiers(settings, names=None):
    """Run the named verifiers (all by default) in registration order.

    :raises ConfigError: for unknown names.

    """
    names = list(VERIFIERS) if not names else list(names)
    unknown = [name for name in names if name not in VERIFIERS]
    if unknown:
        raise ConfigError("unknown verifiers: {}".format(", ".join(unknown)))

    results = []
    for name in VERIFIERS:
        if name not in names:
            continue
        LOGGER.info("running verifier", name=name)
        result = VERIFIERS[name](settings)
        if not result.passed:
            LOGGER.warning("verifier failed", name=name, **result.statistics)
        results.append(result)
    return results
