"""Replica campaigns: Green partial sums and recurrence evidence.

Each replica draws an environment and a skeleton from seeds derived from the
master seed and its index, evaluates the quenched probability of the event
attached to every return of the skeleton to 0, and accumulates the partial
sums at checkpoints. Replicas run in a process pool; their results are
gathered in index order so the output does not depend on the pool size.
"""

import collections
import concurrent.futures
import csv
import json
import os

import cachetools
import numpy as np
import structlog
from more_itertools import chunked

from latticewalk import diagnostics, fourier, skeleton
from latticewalk.env import OrientationField
from latticewalk.error import ConfigError
from latticewalk.keyed import KeyedStream, Tag, derive_seed
from latticewalk.util import artifact_header

LOGGER = structlog.get_logger()

RETURN = "return"
INTERVAL = "interval"
MODES = (RETURN, INTERVAL)

RECURRENT_LEANING = "RecurrentLeaning"
TRANSIENT_LEANING = "TransientLeaning"
INCONCLUSIVE = "Inconclusive"
UNBALANCED_NOTE = "pattern does not sum to 0 over one period; only transience is implied"

RECORDS_FILE = "records.jsonl"
SUMMARY_FILE = "summary.csv"

ReplicaTask = collections.namedtuple(
    "ReplicaTask",
    ["index", "env_spec", "walk_seed", "checkpoints", "mode", "thresholds", "p"])

ReplicaCurve = collections.namedtuple(
    "ReplicaCurve",
    ["index", "env_seed", "walk_seed", "partial_sums", "returns", "events"])


def checkpoint_grid(horizon, ratio=2.0, include_zero=False):
    """Geometric checkpoints ``1, ratio, ratio**2, ...`` (rounded) plus ``horizon``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if ratio <= 1:
        raise ValueError("ratio must be > 1")
    points = {0} if include_zero else set()
    value = 1.0
    while value < horizon:
        points.add(int(round(value)))
        value *= ratio
    points.add(int(horizon))
    return sorted(points)


class CampaignBudget(object):
    """
    Size of a campaign.

    :param horizon: Skeleton steps ``N`` simulated per replica.
    :param replicas: Number of replicas.
    :param checkpoints: Sorted horizons at which partial sums are recorded;
        defaults to :func:`checkpoint_grid`.
    :param jobs: Worker processes.

    """

    def __init__(self, horizon, replicas, checkpoints=None, jobs=1):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        if replicas < 1:
            raise ValueError("replicas must be >= 1")
        if jobs < 1:
            raise ValueError("jobs must be >= 1")
        self.horizon = int(horizon)
        self.replicas = int(replicas)
        if checkpoints is None:
            checkpoints = checkpoint_grid(self.horizon)
        checkpoints = sorted(set(int(point) for point in checkpoints))
        if checkpoints[0] < 0 or checkpoints[-1] > self.horizon:
            raise ValueError("checkpoints must lie in [0, horizon]")
        self.checkpoints = checkpoints
        self.jobs = int(jobs)

    @classmethod
    def from_config(cls, block, jobs=None):
        """Build from a ``budget`` block; ``jobs`` overrides the block."""
        horizon = block.get_int("N", required=True, minimum=1)
        replicas = block.get_int("replicas", required=True, minimum=1)
        checkpoints = block.get_list("checkpoints")
        if checkpoints is not None and (
                not checkpoints or any(isinstance(point, bool) or
                                       not isinstance(point, int) or
                                       not 0 <= point <= horizon
                                       for point in checkpoints)):
            raise ConfigError(
                "'checkpoints' must be integers in [0, N]",
                line=block.line("checkpoints"))
        if jobs is None:
            jobs = block.get_int("jobs", default=1, minimum=1)
        return cls(horizon, replicas, checkpoints, jobs)

    def to_config(self):
        return {"N": self.horizon, "replicas": self.replicas,
                "checkpoints": list(self.checkpoints)}


@cachetools.cached(cachetools.LRUCache(maxsize=1 << 16))
def _event_probability(n_plus, n_minus, mode, eps0, p):
    law = fourier.QuenchedLaw.from_signed(n_plus, n_minus)
    params = fourier.CharFnParams(p)
    if mode == INTERVAL:
        return fourier.quenched_interval_prob(law, eps0, params)
    return fourier.quenched_return_prob(law, params)


def replica_curve(field, trace, checkpoints, mode=RETURN, p=1.0 / 3.0):
    """Partial sums of quenched event probabilities at the returns of ``trace``.

    :returns: ``(partial_sums, returns)`` at each checkpoint, ``returns``
        excluding time 0.

    """
    if mode not in MODES:
        raise ValueError("mode must be one of {}".format(", ".join(MODES)))
    positions = trace.positions
    low, high = int(positions.min()), int(positions.max())
    eps = field.orientations(np.arange(low, high + 1, dtype=np.int64))
    plus = np.cumsum(eps[positions - low] == 1)

    sigma = trace.return_times()
    eps0 = int(field.orientation_at(0))
    probabilities = np.empty(sigma.size)
    for index, time in enumerate(sigma.tolist()):
        n_plus = int(plus[time - 1]) if time else 0
        probabilities[index] = _event_probability(
            n_plus, time - n_plus, mode, eps0, p)

    running = np.cumsum(probabilities)
    counts = np.searchsorted(sigma, checkpoints, side="right")
    partial_sums = running[counts - 1]
    returns = counts - 1
    return partial_sums, returns


def run_replica(task):
    """Simulate one replica.

    :rtype: ReplicaCurve

    """
    field = OrientationField(task.env_spec)
    horizon = task.checkpoints[-1]
    trace = skeleton.simulate_skeleton(horizon, KeyedStream(task.walk_seed, Tag.PSI))
    partial_sums, returns = replica_curve(
        field, trace, task.checkpoints, task.mode, task.p)

    events = None
    if task.thresholds is not None and horizon >= 2:
        indicators = diagnostics.event_indicators(
            trace, field, horizon // 2, task.thresholds)
        events = [int(value) for value in indicators]

    return ReplicaCurve(task.index, task.env_spec.seed, task.walk_seed,
                        partial_sums.tolist(), returns.tolist(), events)


def _run_chunk(tasks):
    return [run_replica(task) for task in tasks]


class CampaignResult(object):
    """
    Per-replica partial sums, return counts and event indicators.

    Rows of :attr:`partial_sums` follow replica index.

    """

    def __init__(self, variant, mode, checkpoints, curves, config_hash=None,
                 seed=None):
        self.variant = variant
        self.mode = mode
        self.checkpoints = list(checkpoints)
        self.env_seeds = [curve.env_seed for curve in curves]
        self.walk_seeds = [curve.walk_seed for curve in curves]
        self.partial_sums = np.array([curve.partial_sums for curve in curves])
        self.returns = np.array([curve.returns for curve in curves], dtype=np.int64)
        self.events = [curve.events for curve in curves]
        self.config_hash = config_hash
        self.seed = seed

    @property
    def replicas(self):
        return len(self.walk_seeds)

    def median_curve(self):
        return np.median(self.partial_sums, axis=0)

    def mean_curve(self):
        return np.mean(self.partial_sums, axis=0)

    def standard_errors(self):
        if self.replicas < 2:
            return np.zeros(len(self.checkpoints))
        return np.std(self.partial_sums, axis=0, ddof=1) / np.sqrt(self.replicas)

    def event_frequencies(self):
        """Mean indicator of each event over replicas, or None."""
        rows = [row for row in self.events if row is not None]
        if not rows:
            return None
        range_small, occupation_small, imbalance_large = np.mean(rows, axis=0)
        both = np.mean([row[0] and row[1] for row in rows])
        return {"range_small": float(range_small),
                "occupation_small": float(occupation_small),
                "both": float(both),
                "imbalance_large": float(imbalance_large)}

    def records(self):
        """One record per replica per checkpoint."""
        for row, walk_seed in enumerate(self.walk_seeds):
            events = self.events[row]
            for column, checkpoint in enumerate(self.checkpoints):
                record = collections.OrderedDict([
                    ("replica", row),
                    ("seed", walk_seed),
                    ("env_seed", self.env_seeds[row]),
                    ("variant", self.variant),
                    ("mode", self.mode),
                    ("N", checkpoint),
                    ("partial_sum", float(self.partial_sums[row, column])),
                    ("returns", int(self.returns[row, column])),
                ])
                if events is not None:
                    record["events"] = {
                        "range_small": events[0],
                        "occupation_small": events[1],
                        "imbalance_large": events[2],
                    }
                yield record

    def summary_rows(self):
        median = self.median_curve()
        mean = self.mean_curve()
        errors = self.standard_errors()
        mean_returns = np.mean(self.returns, axis=0)
        for column, checkpoint in enumerate(self.checkpoints):
            yield [checkpoint, repr(float(median[column])), repr(float(mean[column])),
                   repr(float(errors[column])), repr(float(mean_returns[column]))]

    def write_records(self, output_file):
        output_file.write(artifact_header(self.config_hash, self.seed) + "\n")
        for record in self.records():
            output_file.write(json.dumps(record) + "\n")

    def write_summary(self, output_file):
        output_file.write(artifact_header(self.config_hash, self.seed) + "\n")
        writer = csv.writer(output_file, lineterminator="\n")
        writer.writerow(["N", "median_partial_sum", "mean_partial_sum",
                         "standard_error", "mean_returns"])
        writer.writerows(self.summary_rows())

    def write(self, out_dir):
        """Write ``records.jsonl`` and ``summary.csv`` under ``out_dir``."""
        if not os.path.isdir(out_dir):
            os.makedirs(out_dir)
        with open(os.path.join(out_dir, RECORDS_FILE), "w") as records_file:
            self.write_records(records_file)
        with open(os.path.join(out_dir, SUMMARY_FILE), "w") as summary_file:
            self.write_summary(summary_file)

    def to_dict(self):
        return {
            "variant": self.variant,
            "mode": self.mode,
            "replicas": self.replicas,
            "checkpoints": self.checkpoints,
            "median_curve": self.median_curve().tolist(),
            "mean_curve": self.mean_curve().tolist(),
            "standard_errors": self.standard_errors().tolist(),
            "event_frequencies": self.event_frequencies(),
            "config_hash": self.config_hash,
            "seed": self.seed,
        }


class Campaign(object):
    """
    Green partial sums over replicas.

    :param spec: Environment spec; its seed is replaced by a derived one per
        replica unless ``fixed_environment`` is set.
    :param budget: :class:`CampaignBudget`.
    :param seed: Master seed.
    :param mode: ``"return"`` (``P(X_sigma = 0)``) or ``"interval"``.
    :param thresholds: Optional :class:`diagnostics.EventThresholds`; event
        indicators are taken at ``n = N // 2``.

    """

    def __init__(self, spec, budget, seed, mode=RETURN, thresholds=None,
                 fixed_environment=False, p=1.0 / 3.0, config_hash=None):
        if mode not in MODES:
            raise ValueError("mode must be one of {}".format(", ".join(MODES)))
        self.spec = spec
        self.budget = budget
        self.seed = seed
        self.mode = mode
        self.thresholds = thresholds
        self.fixed_environment = fixed_environment
        self.p = p
        self.config_hash = config_hash

    def tasks(self):
        for index in range(self.budget.replicas):
            if self.fixed_environment:
                env_spec = self.spec
            else:
                env_spec = self.spec.with_seed(derive_seed(self.seed, Tag.ENV, index))
            yield ReplicaTask(
                index, env_spec, derive_seed(self.seed, Tag.WALK, index),
                self.budget.checkpoints, self.mode, self.thresholds, self.p)

    def run(self):
        tasks = list(self.tasks())
        LOGGER.info("campaign started", variant=self.spec.variant,
                    replicas=len(tasks), horizon=self.budget.horizon,
                    jobs=self.budget.jobs, mode=self.mode)
        if self.budget.jobs == 1:
            curves = _run_chunk(tasks)
        else:
            size = max(1, len(tasks) // (4 * self.budget.jobs))
            with concurrent.futures.ProcessPoolExecutor(
                    max_workers=self.budget.jobs) as executor:
                curves = [curve for chunk in executor.map(
                    _run_chunk, chunked(tasks, size)) for curve in chunk]
        curves.sort(key=lambda curve: curve.index)
        LOGGER.info("campaign complete", replicas=len(curves))
        return CampaignResult(self.spec.variant, self.mode,
                              self.budget.checkpoints, curves,
                              config_hash=self.config_hash, seed=self.seed)


def green_partial_sums(spec, N, replicas, seed=0, checkpoints=None, mode=RETURN,
                       jobs=1, thresholds=None, fixed_environment=False,
                       config_hash=None):
    """Run a :class:`Campaign` of ``replicas`` replicas up to ``N`` steps."""
    budget = CampaignBudget(N, replicas, checkpoints, jobs)
    return Campaign(spec, budget, seed, mode=mode, thresholds=thresholds,
                    fixed_environment=fixed_environment,
                    config_hash=config_hash).run()


class ClassificationReport(object):
    """Evidence label with the growth statistics and raw curves behind it."""

    def __init__(self, evidence, growth, median_growth, threshold, band,
                 reference, result, notes=()):
        self.evidence = evidence
        self.growth = growth
        self.median_growth = median_growth
        self.threshold = threshold
        self.band = band
        self.reference = reference
        self.result = result
        self.notes = list(notes)

    @property
    def checkpoints(self):
        return self.result.checkpoints

    def to_dict(self):
        report = {
            "evidence": self.evidence,
            "median_growth": self.median_growth,
            "growth": self.growth,
            "threshold": self.threshold,
            "band": self.band,
            "reference_checkpoint": self.reference,
            "notes": self.notes,
        }
        report.update(self.result.to_dict())
        return report


def _growth(result):
    checkpoints = np.asarray(result.checkpoints)
    horizon = checkpoints[-1]
    earlier = checkpoints[(checkpoints > 0) & (checkpoints <= horizon / 10.0)]
    if not earlier.size:
        return None, None
    reference = int(earlier[-1])
    column = int(np.flatnonzero(checkpoints == reference)[0])
    growth = result.partial_sums[:, -1] / result.partial_sums[:, column] - 1.0
    return reference, growth


def classify(spec, budget, seed=0, threshold=0.10, band=0.0, mode=RETURN,
             thresholds=None, config_hash=None):
    """Label the growth of the partial sums over the last decade of ``N``.

    The label is a heuristic: ``RecurrentLeaning`` when the median replica
    growth exceeds ``threshold + band``, ``TransientLeaning`` below
    ``threshold - band`` and ``Inconclusive`` otherwise or when the
    checkpoints do not span a decade.

    :rtype: ClassificationReport

    """
    result = Campaign(spec, budget, seed, mode=mode, thresholds=thresholds,
                      config_hash=config_hash).run()
    notes = []
    if spec.pattern is not None and not spec.pattern.balanced:
        notes.append(UNBALANCED_NOTE)
        LOGGER.warning("pattern does not sum to 0, recurrence is not expected",
                       pattern=spec.pattern.values)
    reference, growth = _growth(result)
    if growth is None or not np.all(np.isfinite(growth)):
        LOGGER.warning("checkpoints do not span a decade", checkpoints=result.checkpoints)
        return ClassificationReport(INCONCLUSIVE, None, None, threshold, band,
                                    reference, result, notes)

    median = float(np.median(growth))
    if median > threshold + band:
        evidence = RECURRENT_LEANING
    elif median < threshold - band:
        evidence = TRANSIENT_LEANING
    else:
        evidence = INCONCLUSIVE
    LOGGER.info("classification", evidence=evidence, median_growth=median,
                reference=reference)
    return ClassificationReport(evidence, growth.tolist(), median, threshold,
                                band, reference, result, notes)
