"""settings for the application."""
import logging
import os
from enum import Enum
from os import path

import yaml

CONFIG = path.join(path.dirname(path.abspath(__file__)), "../conf/config.yaml")
THREADS_ENV = "WEYL_EXIT_THREADS"
CONFIG_ENV = "WEYL_EXIT_CONFIG"

app_config = None
logger = logging.getLogger()


def get_config():
    """Returns the application configuration, loading it on first use."""
    global app_config
    if app_config is None:
        config_path = os.environ.get(CONFIG_ENV, CONFIG)
        with open(config_path, "r") as f:
            app_config = yaml.safe_load(f)
    return app_config


def reset_config():
    """Forget the cached configuration so that the next access re-reads the file."""
    global app_config
    app_config = None


def configure_logging(level: str = None):
    """
    Configure the root logger from the ``logging`` section of the configuration.

    :param level: Optional level name overriding the configured one.
    """
    section = get_config()["logging"]
    logging.basicConfig(
        filename=section["file"],
        level=getattr(logging, (level or section["level"]).upper()),
        format="%(asctime)s - %(message)s",
    )


def get_partition_tolerance() -> float:
    """Returns the absolute tolerance used when comparing float block means."""
    return float(get_config()["partition"]["tolerance"])


def get_quadrature_config():
    """Returns the quadrature section."""
    return get_config()["quadrature"]


def get_mc_config():
    """Returns the Monte Carlo section."""
    return get_config()["mc"]


def get_fit_config():
    """Returns the fit section."""
    return get_config()["fit"]


def get_thread_count() -> int:
    """Returns the worker count, the environment variable taking precedence over the file."""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", THREADS_ENV, value)
    return max(1, int(get_config().get("threads", 1)))


def get_version():
    """Returns the version string recorded in run manifests."""
    from app import __version__

    return "weyl-exit/{}".format(__version__)


class TailMethod(str, Enum):

    """Method tags carried by a tail estimate."""

    KM = "km"
    EXACT = "exact"
    PROPOSITION = "proposition"
    CLOSED2 = "closed2"
    MC = "mc"
    ASYMPTOTIC = "asymptotic"
