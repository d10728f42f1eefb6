"""Iterative construction of a deterministic defect sequence.

Stage ``k`` estimates the Green partial sums of the environment with defects
at ``0`` and ``L_j + 1`` (``j < k``), picks the first horizon ``L_k`` at which
the estimate minus its error margin clears the target ``a_k``, then places the
next defect at ``L_k + 1``. A skeleton of at most ``L_k`` steps never reaches
that level, so the statistics of earlier stages are unchanged by later ones.
"""

import collections
import json

import numpy as np
import structlog

from latticewalk import campaign
from latticewalk.env import EXPLICIT_DEFECTS, EnvironmentSpec, PeriodicPattern
from latticewalk.error import CertificateError, ConfigError

LOGGER = structlog.get_logger()

CERTIFICATE_FILE = "certificate.json"

StageCheck = collections.namedtuple(
    "StageCheck", ["stage", "horizon", "target", "estimate", "standard_error", "passed"])

ReplayResult = collections.namedtuple(
    "ReplayResult", ["stage", "horizon", "identical"])


class EstimatorBudget(object):
    """
    Estimator settings shared by every stage.

    :param max_horizon: Largest horizon tried per stage.
    :param replicas: Replicas per stage.
    :param mode: Campaign mode; ``"interval"`` sums the probabilities of
        hitting the origin during each visit of level 0.
    :param margin: Number of standard errors subtracted before comparing
        with the target.
    :param ratio: Ratio of the geometric checkpoint grid.

    """

    def __init__(self, max_horizon, replicas, mode=campaign.INTERVAL, margin=3.0,
                 ratio=2.0 ** 0.25, jobs=1):
        if max_horizon < 1:
            raise ValueError("max_horizon must be >= 1")
        if replicas < 2:
            raise ValueError("replicas must be >= 2")
        if mode not in campaign.MODES:
            raise ValueError("mode must be one of {}".format(", ".join(campaign.MODES)))
        self.max_horizon = int(max_horizon)
        self.replicas = int(replicas)
        self.mode = mode
        self.margin = float(margin)
        self.ratio = float(ratio)
        self.jobs = int(jobs)

    def checkpoints(self):
        return campaign.checkpoint_grid(self.max_horizon, self.ratio, include_zero=True)

    def to_config(self):
        return {"max_horizon": self.max_horizon, "replicas": self.replicas,
                "mode": self.mode, "margin": self.margin, "ratio": self.ratio}

    @classmethod
    def from_config(cls, block, jobs=1):
        return cls(block.get_int("max_horizon", required=True, minimum=1),
                   block.get_int("replicas", required=True, minimum=2),
                   mode=block.get_str("mode", default=campaign.INTERVAL,
                                      choices=campaign.MODES),
                   margin=block.get_float("margin", default=3.0, positive=True),
                   ratio=block.get_float("ratio", default=2.0 ** 0.25, positive=True),
                   jobs=jobs)


class DefectCertificate(object):
    """
    Targets, chosen horizons, defect placements and the estimates that
    cleared each target.

    """

    def __init__(self, targets, pattern, env_seed, budget, seed, horizons=(),
                 estimates=(), standard_errors=(), failure_stage=None,
                 config_hash=None):
        self.targets = [float(target) for target in targets]
        self.pattern = pattern
        self.env_seed = int(env_seed)
        self.budget = budget
        self.seed = int(seed)
        self.horizons = [int(horizon) for horizon in horizons]
        self.estimates = [float(value) for value in estimates]
        self.standard_errors = [float(value) for value in standard_errors]
        self.failure_stage = failure_stage
        self.config_hash = config_hash

    @property
    def stages(self):
        """Number of completed stages."""
        return len(self.horizons)

    @property
    def complete(self):
        return self.failure_stage is None and self.stages == len(self.targets)

    @property
    def defect_levels(self):
        """``{0} | {L_j + 1}`` over completed stages."""
        return [0] + [horizon + 1 for horizon in self.horizons]

    def stage_environment(self, stage):
        """Environment ``lambda^(k)`` used by stage ``k`` (from 1)."""
        levels = [0] + [horizon + 1 for horizon in self.horizons[:stage - 1]]
        return EnvironmentSpec.explicit_defects(self.pattern, levels, seed=self.env_seed)

    def final_environment(self):
        return EnvironmentSpec.explicit_defects(
            self.pattern, self.defect_levels, seed=self.env_seed)

    def validate(self):
        """Check the structural invariants.

        :raises CertificateError: naming the violated property.

        """
        if any(b <= a for a, b in zip(self.targets, self.targets[1:])):
            raise CertificateError("targets must be strictly increasing")
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise CertificateError("horizons must be strictly increasing")
        if not len(self.horizons) == len(self.estimates) == len(self.standard_errors):
            raise CertificateError("stage fields have different lengths")
        if len(self.horizons) > len(self.targets):
            raise CertificateError("more horizons than targets")
        for stage, (estimate, target) in enumerate(
                zip(self.estimates, self.targets), 1):
            if estimate < target:
                raise CertificateError(
                    "stage {} estimate {} below target {}".format(stage, estimate, target))
        return True

    def to_dict(self):
        return collections.OrderedDict([
            ("targets", self.targets),
            ("horizons", self.horizons),
            ("defect_levels", self.defect_levels),
            ("estimates", self.estimates),
            ("standard_errors", self.standard_errors),
            ("failure_stage", self.failure_stage),
            ("complete", self.complete),
            ("environment", collections.OrderedDict([
                ("variant", EXPLICIT_DEFECTS),
                ("pattern", list(self.pattern.values)),
                ("seed", self.env_seed),
            ])),
            ("estimator", dict(self.budget.to_config(), seed=self.seed)),
            ("config_hash", self.config_hash),
        ])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        """Load a certificate written by :meth:`to_json`.

        :raises CertificateError: on malformed documents.

        """
        try:
            document = json.loads(text)
            environment = document["environment"]
            estimator = document["estimator"]
            budget = EstimatorBudget(
                estimator["max_horizon"], estimator["replicas"],
                mode=estimator["mode"], margin=estimator["margin"],
                ratio=estimator["ratio"])
            certificate = cls(
                document["targets"], PeriodicPattern(environment["pattern"]),
                environment["seed"], budget, estimator["seed"],
                horizons=document["horizons"], estimates=document["estimates"],
                standard_errors=document["standard_errors"],
                failure_stage=document.get("failure_stage"),
                config_hash=document.get("config_hash"))
        except (ValueError, KeyError, TypeError) as error:
            raise CertificateError("malformed certificate: {}".format(error))
        if document.get("defect_levels") not in (None, certificate.defect_levels):
            raise CertificateError("defect levels do not match horizons")
        certificate.validate()
        return certificate

    def write(self, output_file):
        output_file.write(self.to_json() + "\n")

    def __repr__(self):
        return "DefectCertificate(stages=%d/%d, horizons=%r)" % (
            self.stages, len(self.targets), self.horizons)


def _stage_curves(spec, budget, seed, checkpoints):
    stage_budget = campaign.CampaignBudget(
        max(checkpoints[-1], 1), budget.replicas, checkpoints, budget.jobs)
    return campaign.Campaign(spec, stage_budget, seed, mode=budget.mode,
                             fixed_environment=True).run()


def build(targets, k_max, budget, pattern=None, env_seed=0, seed=0,
          config_hash=None):
    """Run the staged construction up to ``k_max`` stages.

    :param targets: Strictly increasing positive reals ``a_1 < a_2 < ...``.
    :param budget: :class:`EstimatorBudget`.
    :param pattern: Periodic base pattern, alternating of period 2 by default.
    :returns: The certificate; ``failure_stage`` is set when a stage does not
        clear its target within ``budget.max_horizon``.
    :rtype: DefectCertificate

    """
    targets = [float(target) for target in targets]
    if k_max < 1:
        raise ConfigError("k_max must be >= 1")
    if len(targets) < k_max:
        raise ConfigError("{} targets given for {} stages".format(len(targets), k_max))
    targets = targets[:k_max]
    if any(target <= 0 for target in targets) or any(
            b <= a for a, b in zip(targets, targets[1:])):
        raise ConfigError("targets must be positive and strictly increasing")

    pattern = pattern or PeriodicPattern.alternating(2)
    if not pattern.balanced:
        raise ConfigError("the construction needs a pattern summing to 0 over one period")
    certificate = DefectCertificate(targets, pattern, env_seed, budget, seed,
                                    config_hash=config_hash)
    grid = np.asarray(budget.checkpoints())

    for stage in range(1, k_max + 1):
        spec = certificate.stage_environment(stage)
        previous = certificate.horizons[-1] if certificate.horizons else -1
        result = _stage_curves(spec, budget, seed, grid.tolist())
        mean = result.mean_curve()
        errors = result.standard_errors()
        target = targets[stage - 1]
        cleared = np.flatnonzero(
            (grid > previous) & (mean - budget.margin * errors >= target))
        if not cleared.size:
            certificate.failure_stage = stage
            LOGGER.warning("stage did not clear its target", stage=stage,
                           target=target, best=float(mean[-1]),
                           max_horizon=budget.max_horizon)
            break
        column = int(cleared[0])
        certificate.horizons.append(int(grid[column]))
        certificate.estimates.append(float(mean[column]))
        certificate.standard_errors.append(float(errors[column]))
        LOGGER.info("stage complete", stage=stage, horizon=int(grid[column]),
                    estimate=float(mean[column]), target=target)
    return certificate


def verify_stages(certificate, fresh_seed, margin=3.0):
    """Re-estimate every completed stage with fresh randomness.

    :returns: One :class:`StageCheck` per stage; a stage passes when its
        estimate plus ``margin`` standard errors reaches the target.

    """
    checks = []
    for stage, horizon in enumerate(certificate.horizons, 1):
        spec = certificate.stage_environment(stage)
        result = _stage_curves(spec, certificate.budget, fresh_seed, [horizon])
        estimate = float(result.mean_curve()[-1])
        error = float(result.standard_errors()[-1])
        target = certificate.targets[stage - 1]
        checks.append(StageCheck(stage, horizon, target, estimate, error,
                                 estimate + margin * error >= target))
        LOGGER.debug("stage verified", stage=stage, estimate=estimate, target=target)
    return checks


def verify(certificate, fresh_seed, margin=3.0):
    """True iff the certificate is complete and every stage re-clears its target."""
    if not certificate.complete:
        return False
    return all(check.passed for check in verify_stages(certificate, fresh_seed, margin))


def replay_prefix(certificate, stage, replicas=None):
    """Replay stage ``k`` under ``lambda^(k)`` and under the final environment.

    Both runs share the certificate seed; their per-replica partial sums and
    return counts up to ``L_k`` must agree bitwise.

    :rtype: ReplayResult

    """
    if not 1 <= stage <= certificate.stages:
        raise CertificateError("stage {} not completed".format(stage))
    horizon = certificate.horizons[stage - 1]
    checkpoints = [point for point in certificate.budget.checkpoints()
                   if point <= horizon]
    budget = certificate.budget
    if replicas is not None:
        budget = EstimatorBudget(budget.max_horizon, replicas, budget.mode,
                                 budget.margin, budget.ratio, budget.jobs)

    staged = _stage_curves(certificate.stage_environment(stage), budget,
                           certificate.seed, checkpoints)
    final = _stage_curves(certificate.final_environment(), budget,
                          certificate.seed, checkpoints)
    identical = bool(np.array_equal(staged.partial_sums, final.partial_sums) and
                     np.array_equal(staged.returns, final.returns))
    if not identical:
        LOGGER.error("prefix replay differs", stage=stage, horizon=horizon)
    return ReplayResult(stage, horizon, identical)
