"""Run client behind the command line subcommands."""

import json
import os

import structlog

from latticewalk import campaign, counterexample, diagnostics, skeleton, verifiers, walk
from latticewalk.env import DEFECT_VARIANTS, EnvironmentSpec, OrientationField
from latticewalk.error import ConfigError
from latticewalk.keyed import Tag, derive_seed
from latticewalk.util import ConfigBlock, config_hash, load_config, resolve_seed

LOGGER = structlog.get_logger()

STATISTICS_FILE = "statistics.json"
TRAJECTORY_FILE = "trajectory.tsv"
VERIFY_FILE = "verify.json"

COUPLING_STEPS = 10 ** 4


class RunConfig(object):
    """
    Parsed run configuration with the effective seed, jobs and output path.

    :param document: Parsed YAML document.
    :type document: ConfigBlock
    :param seed: ``--seed`` override.
    :param jobs: ``--jobs`` override.
    :param out_dir: ``--out`` override.
    :param default_seed: Seed used when neither flag nor document has one.

    """

    def __init__(self, document=None, seed=None, jobs=None, out_dir=None,
                 default_seed=None):
        self.document = document if document is not None else ConfigBlock()
        if seed is None and "seed" not in self.document and default_seed is not None:
            seed = default_seed
        self.seed = resolve_seed(self.document, seed)
        defaults = load_config()
        self.jobs = jobs or defaults["jobs"]
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        output = self.document.block("output", required=False)
        self.out_dir = (out_dir or output.get_str("dir") or defaults["out_dir"] or ".")
        self.hash = config_hash(self.document, self.seed)

    def block(self, name, required=True):
        return self.document.block(name, required=required)

    def environment(self):
        """Environment spec; its seed defaults to the master seed."""
        return EnvironmentSpec.from_config(self.block("environment"),
                                           default_seed=self.seed)

    def budget(self):
        return campaign.CampaignBudget.from_config(self.block("budget"), self.jobs)

    def thresholds(self):
        block = self.block("thresholds", required=False)
        if not block:
            return None
        try:
            return diagnostics.EventThresholds(
                block.get_float("delta1", default=0.1),
                block.get_float("delta2", default=0.1),
                block.get_float("delta3", default=0.1))
        except ValueError as error:
            raise ConfigError(str(error), line=block.line())

    def output_path(self, name):
        if not os.path.isdir(self.out_dir):
            os.makedirs(self.out_dir)
        return os.path.join(self.out_dir, name)


class LatticeWalk(object):
    """
    Runs simulations, campaigns, verifiers and the defect construction for
    one :class:`RunConfig`.

    """

    _NAME = "latticewalk"

    def __init__(self, run_config):
        self.config = run_config

    def simulate(self):
        """Full-walk runs from the origin plus a coupling check per run.

        :returns: Statistics document (also written to ``statistics.json``).
        :rtype: dict

        """
        config = self.config
        spec = config.environment()
        field = OrientationField(spec)
        block = config.block("simulate", required=False)
        budget = config.block("budget", required=False)
        steps = block.get_int("steps", default=budget.get_int("N"), minimum=1)
        if steps is None:
            raise ConfigError("missing 'steps' field", line=block.line() or 1)
        runs = block.get_int("runs", default=1, minimum=1)
        trajectory = bool(block.get("trajectory", False))

        records = []
        for index in range(runs):
            seed = derive_seed(config.seed, Tag.WALK, index)
            rng = walk.walk_generator(seed)
            counts = walk.run_and_count_returns(walk.ORIGIN, field, steps, rng)
            coupled = skeleton.couple_and_check(min(steps, COUPLING_STEPS), field, seed)
            records.append({
                "run": index,
                "seed": seed,
                "returns_to_start": counts.returns_to_start,
                "first_return_time": counts.first_return_time,
                "final": [counts.final.x, counts.final.y],
                "coupled": coupled,
            })
            LOGGER.debug("run complete", run=index, returns=counts.returns_to_start)

        if trajectory:
            run = walk.simulate_walk(walk.ORIGIN, field, steps,
                                     walk.walk_generator(records[0]["seed"]),
                                     rng_stream=records[0]["seed"])
            run.validate(field)
            with open(config.output_path(TRAJECTORY_FILE), "w") as output_file:
                walk.dump_trajectory(run, output_file)

        statistics = {
            "config_hash": config.hash,
            "seed": config.seed,
            "variant": spec.variant,
            "steps": steps,
            "runs": records,
        }
        with open(config.output_path(STATISTICS_FILE), "w") as output_file:
            output_file.write(json.dumps(statistics, indent=2, sort_keys=True) + "\n")
        return statistics

    def classify(self):
        """Green partial-sum campaign with its evidence label."""
        config = self.config
        block = config.block("classify", required=False)
        report = campaign.classify(
            config.environment(), config.budget(), seed=config.seed,
            threshold=block.get_float("threshold", default=0.10),
            band=block.get_float("band", default=0.0),
            mode=block.get_str("mode", default=campaign.RETURN, choices=campaign.MODES),
            thresholds=config.thresholds(), config_hash=config.hash)
        report.result.write(config.out_dir)
        return report.to_dict()

    def verify(self, names=None, faults=()):
        """Run the registered verifiers.

        :returns: Report with one entry per verifier and an ``exit_code``.

        """
        config = self.config
        unknown = set(faults) - set(verifiers.FAULTS)
        if unknown:
            raise ConfigError("unknown fault hooks: {}".format(", ".join(sorted(unknown))))
        env_spec = None
        if "environment" in config.document:
            env_spec = config.environment()
        settings = verifiers.VerifySettings.from_config(
            config.block("verify", required=False), seed=config.seed,
            env_spec=env_spec, faults=faults)
        results = verifiers.run_verifiers(settings, names)
        passed = all(result.passed for result in results)
        report = {
            "config_hash": config.hash,
            "seed": config.seed,
            "passed": passed,
            "verifiers": [{"name": result.name, "passed": bool(result.passed),
                           "statistics": result.statistics} for result in results],
        }
        with open(config.output_path(VERIFY_FILE), "w") as output_file:
            output_file.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
        report["exit_code"] = 0 if passed else 1
        return report

    def counterexample(self, certificate_file=None):
        """Build (or load) a defect certificate, then verify and replay it."""
        config = self.config
        block = config.block("counterexample")
        budget = counterexample.EstimatorBudget.from_config(block, config.jobs)

        if certificate_file is not None:
            certificate = counterexample.DefectCertificate.from_json(
                certificate_file.read())
        else:
            targets = block.get_list("targets")
            if not targets or any(isinstance(target, bool) or
                                  not isinstance(target, (int, float))
                                  for target in targets):
                raise ConfigError("'targets' must be a list of numbers",
                                  line=block.line("targets"))
            k_max = block.get_int("k_max", default=len(targets), minimum=1)
            spec = config.environment() if "environment" in config.document else None
            if spec is not None and spec.variant not in DEFECT_VARIANTS:
                raise ConfigError("counterexample needs a periodic pattern",
                                  line=config.block("environment").line("variant"))
            certificate = counterexample.build(
                targets, k_max, budget,
                pattern=spec.pattern if spec else None,
                env_seed=spec.seed if spec else config.seed,
                seed=config.seed, config_hash=config.hash)
            with open(config.output_path(counterexample.CERTIFICATE_FILE), "w") as output_file:
                certificate.write(output_file)

        fresh_seed = block.get_int(
            "verify_seed", default=derive_seed(config.seed, Tag.REPLICA), minimum=0)
        checks = counterexample.verify_stages(certificate, fresh_seed)
        verified = certificate.complete and all(check.passed for check in checks)
        replays = []
        if block.get("replay", True):
            replays = [counterexample.replay_prefix(certificate, stage)
                       for stage in range(1, certificate.stages + 1)]

        report = certificate.to_dict()
        report["verified"] = verified
        report["checks"] = [check._asdict() for check in checks]
        report["replays"] = [replay._asdict() for replay in replays]
        ok = verified and all(replay.identical for replay in replays)
        report["exit_code"] = 0 if ok else 1
        return report
