"""Horizontal-orientation environments.

An environment assigns to every level ``y`` of the lattice a direction
``eps_y`` in {-1, +1}. All random variants are resolved lazily from keyed
randomness, so a field is a pure function of its spec and can be shared by
any number of workers.
"""

import operator
import threading

import cachetools
import numpy as np
import structlog

from latticewalk.error import ConfigError, EnvironmentVariantError, PatternError
from latticewalk.keyed import KeyedStream, Tag
from latticewalk.util import ConfigBlock

LOGGER = structlog.get_logger()

ALTERNATING = "alternating"
HALF_PLANE = "half_plane"
IID_UNIFORM = "iid_uniform"
PERIODIC_WITH_DEFECTS = "periodic_with_defects"
EXPLICIT_DEFECTS = "explicit_defects"

VARIANTS = (ALTERNATING, HALF_PLANE, IID_UNIFORM,
            PERIODIC_WITH_DEFECTS, EXPLICIT_DEFECTS)
DEFECT_VARIANTS = (PERIODIC_WITH_DEFECTS, EXPLICIT_DEFECTS)

VARIANT_ALIASES = {
    "Alternating": ALTERNATING,
    "HalfPlane": HALF_PLANE,
    "IIDUniform": IID_UNIFORM,
    "PeriodicWithDefects": PERIODIC_WITH_DEFECTS,
    "ExplicitDefects": EXPLICIT_DEFECTS,
}

CACHE_SIZE = 1 << 16
_CHUNK = 1 << 18


class PeriodicPattern(object):
    """
    Periodic orientation pattern ``f(0), ..., f(Q-1)``.

    Recurrence needs a balanced pattern (even period, zero sum over one
    period). Transience holds for any pattern, so ``balanced=False`` admits
    arbitrary ``+1/-1`` sequences for transience-only runs.

    :param values: Entries in {-1, +1}.
    :param balanced: Require an even period and a zero sum.
    :raises PatternError: odd or short period, bad entries, nonzero sum.

    """

    def __init__(self, values, balanced=True):
        values = tuple(int(value) for value in values)
        if not values:
            raise PatternError("pattern must not be empty")
        if balanced and (len(values) < 2 or len(values) % 2):
            raise PatternError(
                "period must be an even integer >= 2, got {}".format(len(values)))
        if any(value not in (-1, 1) for value in values):
            raise PatternError("pattern values must be -1 or +1")
        if balanced and sum(values) != 0:
            raise PatternError(
                "pattern must sum to 0 over one period, got {}".format(sum(values)))
        self.values = values
        self._array = np.array(values, dtype=np.int8)

    @classmethod
    def alternating(cls, period=2):
        """Pattern ``(+1, -1, +1, -1, ...)``."""
        return cls([1 if index % 2 == 0 else -1 for index in range(period)])

    @property
    def period(self):
        return len(self.values)

    @property
    def balanced(self):
        return sum(self.values) == 0

    def at(self, y):
        return self.values[y % self.period]

    def at_array(self, ys):
        return self._array[np.mod(ys, self.period)]

    def __eq__(self, other):
        return isinstance(other, PeriodicPattern) and self.values == other.values

    def __hash__(self):
        return hash(self.values)

    def __repr__(self):
        return "PeriodicPattern(%r)" % (self.values,)


class DefectLaw(object):
    """
    Power-law decaying defect probability ``min(1, c / |y|**beta)``.

    Levels with ``|y| < inner_radius`` use ``min(1, c)``.

    """

    def __init__(self, beta, c=1.0, inner_radius=1):
        if beta <= 0:
            raise PatternError("beta must be > 0")
        if c < 0:
            raise PatternError("c must be >= 0")
        if inner_radius < 1:
            raise PatternError("inner_radius must be >= 1")
        self.beta = float(beta)
        self.c = float(c)
        self.inner_radius = int(inner_radius)

    def probability(self, y):
        y = abs(y)
        if y < self.inner_radius:
            return min(1.0, self.c)
        return min(1.0, self.c / y ** self.beta)

    def probabilities(self, ys):
        ys = np.abs(np.asarray(ys, dtype=np.float64))
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = self.c / ys ** self.beta
        tail = np.where(ys < self.inner_radius, self.c, tail)
        return np.minimum(1.0, tail)

    def expected_strength(self, k):
        """``E ||lambda restricted to [-k, k]||``."""
        ys = np.arange(1, k + 1)
        return self.probability(0) + 2.0 * float(np.sum(self.probabilities(ys)))

    def __eq__(self, other):
        return isinstance(other, DefectLaw) and (
            (self.beta, self.c, self.inner_radius)
            == (other.beta, other.c, other.inner_radius))

    def __repr__(self):
        return "DefectLaw(beta=%r, c=%r, inner_radius=%r)" % (
            self.beta, self.c, self.inner_radius)


class EnvironmentSpec(object):
    """
    Description of an orientation environment.

    :param variant: One of :data:`VARIANTS`.
    :param seed: 64-bit seed of the keyed randomness.
    :param pattern: :class:`PeriodicPattern` for the defect variants.
    :param law: :class:`DefectLaw` for ``periodic_with_defects``.
    :param defect_levels: Finite iterable of levels, or a predicate
        ``y -> bool`` for rule-generated sets, for ``explicit_defects``.
    :param overrides: Optional ``{level: +1/-1}`` fixing rho at defects.

    """

    def __init__(self, variant, seed=0, pattern=None, law=None,
                 defect_levels=None, overrides=None):
        variant = VARIANT_ALIASES.get(variant, variant)
        if variant not in VARIANTS:
            raise EnvironmentVariantError("unknown variant {!r}".format(variant))
        if variant in DEFECT_VARIANTS and pattern is None:
            raise EnvironmentVariantError(
                "{} requires a periodic pattern".format(variant))
        if variant == PERIODIC_WITH_DEFECTS and law is None:
            raise EnvironmentVariantError(
                "periodic_with_defects requires a defect law")

        self.variant = variant
        self.seed = int(seed)
        self.pattern = pattern
        self.law = law
        self.overrides = dict(overrides or {})
        if any(value not in (-1, 1) for value in self.overrides.values()):
            raise EnvironmentVariantError("orientation overrides must be -1 or +1")

        self.defect_rule = None
        self.defect_levels = frozenset()
        if callable(defect_levels):
            self.defect_rule = defect_levels
        elif defect_levels is not None:
            self.defect_levels = frozenset(int(level) for level in defect_levels)

    @classmethod
    def alternating(cls, seed=0):
        return cls(ALTERNATING, seed)

    @classmethod
    def half_plane(cls, seed=0):
        return cls(HALF_PLANE, seed)

    @classmethod
    def iid_uniform(cls, seed=0):
        return cls(IID_UNIFORM, seed)

    @classmethod
    def periodic_with_defects(cls, pattern, law, seed=0):
        return cls(PERIODIC_WITH_DEFECTS, seed, pattern=pattern, law=law)

    @classmethod
    def explicit_defects(cls, pattern, defect_levels=(), seed=0, overrides=None):
        return cls(EXPLICIT_DEFECTS, seed, pattern=pattern,
                   defect_levels=defect_levels, overrides=overrides)

    @property
    def has_defects(self):
        return self.variant in DEFECT_VARIANTS

    @property
    def period(self):
        return self.pattern.period if self.pattern is not None else 2

    def with_seed(self, seed):
        """Copy of this spec with another seed."""
        return EnvironmentSpec(
            self.variant, seed, pattern=self.pattern, law=self.law,
            defect_levels=self.defect_rule or self.defect_levels,
            overrides=self.overrides)

    def with_defect(self, level, orientation=None):
        """Copy of an ``explicit_defects`` spec with one more defect level."""
        if self.variant != EXPLICIT_DEFECTS or self.defect_rule is not None:
            raise EnvironmentVariantError(
                "with_defect needs explicit_defects with a finite level set")
        overrides = dict(self.overrides)
        if orientation is not None:
            overrides[int(level)] = orientation
        return EnvironmentSpec(
            EXPLICIT_DEFECTS, self.seed, pattern=self.pattern,
            defect_levels=self.defect_levels | {int(level)},
            overrides=overrides)

    def to_config(self):
        """Plain mapping in the configuration block format."""
        block = {"variant": self.variant, "seed": self.seed}
        if self.pattern is not None:
            block["period"] = self.pattern.period
            block["pattern"] = list(self.pattern.values)
            if not self.pattern.balanced:
                block["balanced"] = False
        if self.law is not None:
            block["beta"] = self.law.beta
            block["c"] = self.law.c
            block["inner_radius"] = self.law.inner_radius
        if self.variant == EXPLICIT_DEFECTS:
            if self.defect_rule is not None:
                raise EnvironmentVariantError(
                    "rule-generated defect sets cannot be serialised")
            block["defect_levels"] = sorted(self.defect_levels)
            if self.overrides:
                block["overrides"] = {
                    int(level): value for level, value in sorted(self.overrides.items())}
        return block

    @classmethod
    def from_config(cls, block, default_seed=None):
        """Build a spec from an ``environment`` configuration block.

        :param block: Parsed block (line numbers used in errors).
        :type block: ConfigBlock or dict
        :param default_seed: Seed used when the block has none.
        :raises ConfigError: on any invalid field.

        """
        if not isinstance(block, ConfigBlock):
            block = ConfigBlock(block)

        variant = block.get_str("variant", required=True)
        variant = VARIANT_ALIASES.get(variant, variant)
        if variant not in VARIANTS:
            raise ConfigError(
                "unknown variant {!r}".format(block["variant"]),
                line=block.line("variant"))

        seed = block.get_int("seed", default=default_seed, minimum=0)
        if seed is None:
            raise ConfigError("missing 'seed' field", line=block.line())

        pattern = None
        law = None
        defect_levels = None
        overrides = None
        if variant in DEFECT_VARIANTS:
            values = block.get_list("pattern")
            balanced = block.get_bool("balanced", default=True)
            period = block.get_int("period", minimum=2 if balanced else 1)
            if values is None:
                values = PeriodicPattern.alternating(period or 2).values
            try:
                pattern = PeriodicPattern(values, balanced=balanced)
            except PatternError as error:
                raise ConfigError(error.message, line=block.line("pattern"))
            if period is not None and period != pattern.period:
                raise ConfigError(
                    "period {} does not match pattern length {}".format(
                        period, pattern.period),
                    line=block.line("period"))

        if variant == PERIODIC_WITH_DEFECTS:
            beta = block.get_float("beta", positive=True, required=True)
            c = block.get_float("c", default=1.0)
            if c < 0:
                raise ConfigError("'c' must be >= 0", line=block.line("c"))
            inner_radius = block.get_int("inner_radius", default=1, minimum=1)
            law = DefectLaw(beta, c, inner_radius)

        if variant == EXPLICIT_DEFECTS:
            levels = block.get_list("defect_levels", default=[])
            if any(isinstance(level, bool) or not isinstance(level, int)
                   for level in levels):
                raise ConfigError(
                    "'defect_levels' must be integers",
                    line=block.line("defect_levels"))
            defect_levels = levels
            raw = block.get("overrides") or {}
            if not isinstance(raw, dict) or any(
                    value not in (-1, 1) for value in raw.values()):
                raise ConfigError(
                    "'overrides' must map levels to -1 or +1",
                    line=block.line("overrides"))
            overrides = {int(level): int(value) for level, value in raw.items()}

        return cls(variant, seed, pattern=pattern, law=law,
                   defect_levels=defect_levels, overrides=overrides)

    def __eq__(self, other):
        if not isinstance(other, EnvironmentSpec):
            return False
        return (self.variant, self.seed, self.pattern, self.law,
                self.defect_levels, self.defect_rule, self.overrides) == (
                    other.variant, other.seed, other.pattern, other.law,
                    other.defect_levels, other.defect_rule, other.overrides)

    def __repr__(self):
        return "EnvironmentSpec(variant=%r, seed=%r, pattern=%r, law=%r)" % (
            self.variant, self.seed, self.pattern, self.law)


class OrientationField(object):
    """
    Lazily evaluated orientation field ``y -> eps_y``.

    Read-only after construction. The cache is lock-protected and writes are
    idempotent, so concurrent queries are safe.

    """

    def __init__(self, spec):
        self.spec = spec
        self._lambda = KeyedStream(spec.seed, Tag.LAMBDA)
        self._rho = KeyedStream(spec.seed, Tag.RHO)
        self._cache = cachetools.LRUCache(maxsize=CACHE_SIZE)
        self._lock = threading.Lock()

    def __repr__(self):
        return "OrientationField(%r)" % (self.spec,)

    @property
    def period(self):
        return self.spec.period

    def _rho_at(self, y):
        return 1 if self._rho.uniform(y) < 0.5 else -1

    def _require_defects(self):
        if not self.spec.has_defects:
            raise EnvironmentVariantError(
                "variant {} has no defect notion".format(self.spec.variant))

    def _is_defect(self, y):
        spec = self.spec
        if spec.variant == EXPLICIT_DEFECTS:
            if spec.defect_rule is not None:
                return bool(spec.defect_rule(y))
            return y in spec.defect_levels
        return self._lambda.uniform(y) < spec.law.probability(y)

    @cachetools.cachedmethod(operator.attrgetter("_cache"),
                             lock=operator.attrgetter("_lock"))
    def orientation_at(self, y):
        """Orientation ``eps_y`` in {-1, +1}."""
        spec = self.spec
        if spec.variant == ALTERNATING:
            return 1 if y % 2 == 0 else -1
        if spec.variant == HALF_PLANE:
            return -1 if y < 0 else 1
        if spec.variant == IID_UNIFORM:
            return self._rho_at(y)
        if self._is_defect(y):
            if y in spec.overrides:
                return spec.overrides[y]
            return self._rho_at(y)
        return spec.pattern.at(y)

    def orientations(self, ys):
        """Vectorised :meth:`orientation_at` over an integer array."""
        ys = np.asarray(ys, dtype=np.int64)
        spec = self.spec
        if spec.variant == ALTERNATING:
            return np.where(ys % 2 == 0, 1, -1).astype(np.int8)
        if spec.variant == HALF_PLANE:
            return np.where(ys < 0, -1, 1).astype(np.int8)
        rho = np.where(self._rho.uniforms(ys) < 0.5, 1, -1).astype(np.int8)
        if spec.variant == IID_UNIFORM:
            return rho
        defects = self.defect_indicators(ys).astype(bool)
        for level, value in spec.overrides.items():
            rho[ys == level] = value
        return np.where(defects, rho, spec.pattern.at_array(ys)).astype(np.int8)

    def defect_indicator(self, y):
        """``lambda_y`` in {0, 1}.

        :raises EnvironmentVariantError: for variants without defects.

        """
        self._require_defects()
        return int(self._is_defect(y))

    def defect_indicators(self, ys):
        """Vectorised :meth:`defect_indicator` as an ``int8`` array.

        :raises EnvironmentVariantError: for variants without defects.

        """
        self._require_defects()
        ys = np.asarray(ys, dtype=np.int64)
        spec = self.spec
        if spec.variant == EXPLICIT_DEFECTS:
            if spec.defect_rule is not None:
                return np.array([int(bool(spec.defect_rule(int(y)))) for y in ys],
                                dtype=np.int8)
            levels = np.fromiter(spec.defect_levels, dtype=np.int64,
                                 count=len(spec.defect_levels))
            return np.isin(ys, levels).astype(np.int8)
        return (self._lambda.uniforms(ys) < spec.law.probabilities(ys)).astype(np.int8)

    def truncated_strength(self, k):
        """Number of defect levels in ``[-k, k]``."""
        self._require_defects()
        if k < 0:
            raise ValueError("k must be >= 0")
        spec = self.spec
        if spec.variant == EXPLICIT_DEFECTS and spec.defect_rule is None:
            return sum(1 for level in spec.defect_levels if abs(level) <= k)
        total = 0
        for start in range(-k, k + 1, _CHUNK):
            ys = np.arange(start, min(start + _CHUNK, k + 1), dtype=np.int64)
            total += int(np.sum(self.defect_indicators(ys)))
        return total

    def defect_positions(self, k):
        """Sorted defect levels within ``[-k, k]``."""
        self._require_defects()
        spec = self.spec
        if spec.variant == EXPLICIT_DEFECTS and spec.defect_rule is None:
            return sorted(level for level in spec.defect_levels if abs(level) <= k)
        ys = np.arange(-k, k + 1, dtype=np.int64)
        return [int(y) for y in ys[self.defect_indicators(ys).astype(bool)]]


def orientation_at(field, y):
    """Orientation of level ``y`` in ``field``."""
    return field.orientation_at(y)


def defect_indicator(field, y):
    return field.defect_indicator(y)


def truncated_strength(field, k):
    return field.truncated_strength(k)

