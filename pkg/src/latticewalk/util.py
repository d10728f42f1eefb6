"""Utility and helper functions."""

import os
import json
import hashlib

import yaml
import structlog
from six.moves.configparser import ConfigParser

from latticewalk.error import ConfigError

CONFIG_FILE = os.path.expanduser(
    os.path.join("~", ".config", "latticewalk", "setup.cfg"))
LOGGER = structlog.get_logger()

DEFAULT_CONFIG = {"jobs": "1", "out_dir": ""}

UINT64_MAX = (1 << 64) - 1


def load_config():
    """Load user defaults.

    :returns:
        Current defaults based on configuration file and environment variables.
    :rtype: dict

    """
    config_parser = ConfigParser(
        {key: str(value) for key, value in DEFAULT_CONFIG.items()}
    )
    config_parser.add_section("latticewalk")

    if os.path.isfile(CONFIG_FILE):
        LOGGER.debug("Parsing configuration file", path=CONFIG_FILE)
        with open(CONFIG_FILE) as config_file:
            config_parser.read_file(config_file)

    # Environment variables take precedence over configuration file content
    if "LATTICEWALK_JOBS" in os.environ:
        config_parser.set("latticewalk", "jobs", os.environ["LATTICEWALK_JOBS"])

    if "LATTICEWALK_OUT_DIR" in os.environ:
        config_parser.set(
            "latticewalk", "out_dir", os.environ["LATTICEWALK_OUT_DIR"])

    try:
        jobs = int(config_parser.get("latticewalk", "jobs"))
    except ValueError:
        raise ConfigError("jobs must be an integer", path=CONFIG_FILE)

    return {
        "jobs": jobs,
        "out_dir": config_parser.get("latticewalk", "out_dir"),
    }


def save_config(config):
    """Save user defaults.

    :param config: Data to be written to the configuration file.
    :type config:  dict

    """
    if not any(value for value in config.values()):
        raise ConfigError('no options provided. Try "latticewalk setup -h" for help.')

    # Keep saved values for options that were not given
    saved_config = load_config()
    for key in DEFAULT_CONFIG:
        if not config.get(key):
            config[key] = saved_config[key]

    if config["out_dir"] and not os.path.isdir(config["out_dir"]):
        raise ConfigError("output directory is not a valid directory")

    config_parser = ConfigParser()
    config_parser.add_section("latticewalk")
    for key in DEFAULT_CONFIG:
        config_parser.set("latticewalk", key, str(config[key]))

    config_dir = os.path.dirname(CONFIG_FILE)
    if not os.path.isdir(config_dir):
        os.makedirs(config_dir)

    with open(CONFIG_FILE, "w") as config_file:
        config_parser.write(config_file)


class ConfigBlock(dict):
    """Mapping that remembers the source line of each key."""

    def __init__(self, *args, **kwargs):
        super(ConfigBlock, self).__init__(*args, **kwargs)
        self.lines = {}
        self.start_line = None

    def line(self, key=None):
        """1-based line of ``key`` (or of the block itself)."""
        if key is not None and key in self.lines:
            return self.lines[key]
        return self.start_line

    def block(self, key, required=True):
        """Return the nested block ``key``."""
        if key not in self:
            if required:
                raise ConfigError(
                    "missing '{}' block".format(key), line=self.line())
            return ConfigBlock()
        value = self[key]
        if value is None:
            value = ConfigBlock()
            value.start_line = self.line(key)
        if not isinstance(value, ConfigBlock):
            raise ConfigError(
                "'{}' must be a mapping".format(key), line=self.line(key))
        return value

    def get_int(self, key, default=None, minimum=None, required=False):
        if key not in self or self[key] is None:
            if required:
                raise ConfigError(
                    "missing '{}' field".format(key), line=self.line())
            return default
        value = self[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(
                "'{}' must be an integer".format(key), line=self.line(key))
        if minimum is not None and value < minimum:
            raise ConfigError(
                "'{}' must be >= {}".format(key, minimum), line=self.line(key))
        return value

    def get_float(self, key, default=None, positive=False, required=False):
        if key not in self or self[key] is None:
            if required:
                raise ConfigError(
                    "missing '{}' field".format(key), line=self.line())
            return default
        value = self[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(
                "'{}' must be a number".format(key), line=self.line(key))
        if positive and value <= 0:
            raise ConfigError(
                "'{}' must be > 0".format(key), line=self.line(key))
        return float(value)

    def get_str(self, key, default=None, choices=None, required=False):
        if key not in self or self[key] is None:
            if required:
                raise ConfigError(
                    "missing '{}' field".format(key), line=self.line())
            return default
        value = str(self[key])
        if choices is not None and value not in choices:
            raise ConfigError(
                "'{}' must be one of {}".format(key, ", ".join(choices)),
                line=self.line(key))
        return value

    def get_bool(self, key, default=None):
        if key not in self or self[key] is None:
            return default
        value = self[key]
        if not isinstance(value, bool):
            raise ConfigError(
                "'{}' must be true or false".format(key), line=self.line(key))
        return value

    def get_list(self, key, default=None):
        if key not in self or self[key] is None:
            return default
        value = self[key]
        if not isinstance(value, list):
            raise ConfigError(
                "'{}' must be a list".format(key), line=self.line(key))
        return value


class _LineLoader(yaml.SafeLoader):
    """SafeLoader building :class:`ConfigBlock` mappings."""


def _construct_block(loader, node):
    loader.flatten_mapping(node)
    block = ConfigBlock()
    block.start_line = node.start_mark.line + 1
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        block[key] = loader.construct_object(value_node, deep=True)
        block.lines[key] = key_node.start_mark.line + 1
    return block


_LineLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_block)


def load_run_config(input_file):
    """Load a run configuration.

    :param input_file: YAML file handle.
    :type input_file: _io.TextIOWrapper
    :returns: Parsed configuration with line information
    :rtype: ConfigBlock
    :raises: ConfigError

    """
    if input_file is None:
        raise ConfigError("Missing configuration file")

    path = getattr(input_file, "name", None)
    try:
        document = yaml.load(input_file, Loader=_LineLoader)
    except yaml.MarkedYAMLError as error:
        mark = error.problem_mark
        raise ConfigError(
            "{}".format(error.problem),
            line=mark.line + 1 if mark is not None else None,
            path=path)
    except yaml.YAMLError as error:
        raise ConfigError("{}".format(error), path=path)

    if not isinstance(document, ConfigBlock):
        raise ConfigError("configuration must be a mapping", line=1, path=path)

    return document


def resolve_seed(config, override=None):
    """Effective master seed: ``--seed`` flag first, then the config field."""
    if override is not None:
        seed = override
    elif "seed" in config and config["seed"] is not None:
        seed = config.get_int("seed", minimum=0)
    else:
        raise ConfigError("missing 'seed' field", line=config.line())
    if seed > UINT64_MAX:
        raise ConfigError("seed must fit in 64 bits", line=config.line("seed"))
    return seed


def config_hash(config, seed):
    """SHA-256 of the canonical JSON of a configuration and its seed."""
    canonical = json.dumps(
        {"config": config, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def artifact_header(digest, seed):
    """Header line heading every output artifact."""
    return "# config_hash={} seed={}".format(digest, seed)
