"""
Monte Carlo estimation of P_x(tau > t) with Brownian-bridge crossing corrections.

Replicas are simulated in chunks. Chunk c draws its Gaussian increments from a Philox generator keyed by
(seed, 2c) and its bridge uniforms from one keyed by (seed, 2c + 1), so results do not depend on the order in
which chunks run, and paths are the same with and without the bridge correction.
"""
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.utils.asymptotics import gamma
from app.utils.drift_partition import as_drift, as_start, check_dimensions
from app.utils.errors import CapabilityError, InvalidInputError
from app.utils.exact_tail import TailEstimate
from app.utils.settings import TailMethod, get_mc_config, get_thread_count, get_version

logger = logging.getLogger()

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:

    """Time step (None selects min(1e-3, t / 10^4)), replica count, 64-bit seed and bridge correction switch."""

    dt: Optional[float] = None
    replicas: int = 100000
    seed: int = 20080101
    bridge_correction: bool = True
    chunk_size: int = 8192
    min_expected_survivors: float = 100

    def __post_init__(self):
        """Validate the configuration."""
        if self.dt is not None and not self.dt > 0:
            raise InvalidInputError("dt must be positive, got {}".format(self.dt))
        if self.replicas < 1:
            raise InvalidInputError("replicas must be at least 1, got {}".format(self.replicas))
        if self.chunk_size < 1:
            raise InvalidInputError("chunk_size must be at least 1, got {}".format(self.chunk_size))

    @classmethod
    def from_config(cls, **overrides):
        """Build the configuration from the ``mc`` section, with keyword overrides."""
        section = get_mc_config()
        values = {
            "dt": section.get("dt"),
            "replicas": int(section["replicas"]),
            "seed": int(section["seed"]),
            "bridge_correction": bool(section["bridge_correction"]),
            "chunk_size": int(section.get("chunk_size", 8192)),
            "min_expected_survivors": float(section.get("min_expected_survivors", 100)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def step(self, t: float) -> Tuple[float, int]:
        """Time step actually used on [0, t] and the number of steps."""
        dt = self.dt if self.dt is not None else min(1e-3, t / 1e4)
        steps = max(1, math.ceil(t / dt - 1e-9))
        return t / steps, steps

    def to_json(self):
        """JSON form."""
        return asdict(self)


def bridge_noncross(d0: float, d1: float, dt: float) -> float:
    """
    Probability that a gap with variance 2 per unit time stays positive between two grid points.

    :param d0: Gap at the start of the step.
    :param d1: Gap at the end of the step.
    :param dt: Step length.
    :return: 1 - exp(-2 d0 d1 / (sigma^2 dt)) with sigma^2 = 2.
    """
    if not (d0 > 0 and d1 > 0 and dt > 0):
        raise InvalidInputError("bridge_noncross needs positive gaps and step, got {}, {}, {}".format(d0, d1, dt))
    return -math.expm1(-d0 * d1 / dt)


def _generator(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed & SEED_MASK, stream], dtype=np.uint64)))


def simulate_chunk(
    index: int, size: int, gaps: np.ndarray, gap_drift: np.ndarray, dt: float, steps: int, seed: int
) -> Tuple[int, int]:
    """
    Survivors of one chunk of replicas.

    :param index: Chunk index.
    :param size: Replicas in the chunk.
    :param gaps: Initial gaps x_{k+1} - x_k.
    :param gap_drift: Gap drifts a_{k+1} - a_k.
    :param dt: Step length.
    :param steps: Number of steps.
    :param seed: Run seed.
    :return: Survivor counts judged on the grid only, and with the bridge thinning as well.
    """
    increments = _generator(seed, 2 * index)
    uniforms = _generator(seed, 2 * index + 1)
    n = len(gaps) + 1
    root = math.sqrt(dt)
    current = np.tile(gaps, (size, 1))
    unbroken = np.ones(size, dtype=bool)
    for _ in range(steps):
        if not len(current):
            break
        z = increments.standard_normal((len(current), n))
        moved = current + gap_drift * dt + root * np.diff(z, axis=1)
        ok = np.all(moved > 0, axis=1)
        crossing = uniforms.random(moved.shape) >= -np.expm1(-current * np.maximum(moved, 0.0) / dt)
        unbroken &= ~np.any(crossing, axis=1)
        current, unbroken = moved[ok], unbroken[ok]
    return len(current), int(np.count_nonzero(unbroken))


def survival_counts(x, a, t: float, cfg: SimConfig = None, threads: int = None) -> Tuple[int, int, float]:
    """
    Grid-only and bridge-corrected survivor counts over all replicas.

    :return: (grid survivors, bridge-corrected survivors, step length).
    """
    x, a = as_start(x), as_drift(a)
    check_dimensions(x, a)
    if not (t > 0 and math.isfinite(t)):
        raise InvalidInputError("t must be positive and finite, got {}".format(t))
    cfg = cfg or SimConfig.from_config()
    threads = threads or get_thread_count()
    dt, steps = cfg.step(t)
    gaps, gap_drift = x.gaps(), np.diff(a.as_floats())
    chunks = [
        (c, min(cfg.chunk_size, cfg.replicas - c * cfg.chunk_size))
        for c in range(math.ceil(cfg.replicas / cfg.chunk_size))
    ]

    def run(chunk):
        return simulate_chunk(chunk[0], chunk[1], gaps, gap_drift, dt, steps, cfg.seed)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(run, chunks))
    else:
        counts = [run(c) for c in chunks]
    logger.info("mc n=%d t=%s dt=%.3g steps=%d replicas=%d chunks=%d", x.n, t, dt, steps, cfg.replicas, len(chunks))
    return sum(c[0] for c in counts), sum(c[1] for c in counts), dt


def estimate_tail(x, a, t: float, cfg: SimConfig = None, threads: int = None) -> TailEstimate:
    """
    Monte Carlo survival probability with its binomial standard error.

    A replica survives when its coordinates stay strictly ordered at every grid point and, with the bridge
    correction, every adjacent gap passes an independent Bernoulli non-crossing test on every step.

    :param x: Start vector in the Weyl chamber.
    :param a: Drift vector.
    :param t: Time horizon.
    :param cfg: Simulation configuration.
    :raises CapabilityError: When e^{-gamma t} predicts fewer survivors than the configured minimum, or when fewer
        replicas than that minimum actually survive.
    """
    cfg = cfg or SimConfig.from_config()
    a = as_drift(a)
    predicted = math.exp(-gamma(a) * t) if t > 0 else 1.0
    if predicted * cfg.replicas < cfg.min_expected_survivors:
        raise CapabilityError(
            "predicted tail {:.3g} is below {} / {} replicas; use a quadrature method".format(
                predicted, cfg.min_expected_survivors, cfg.replicas
            )
        )
    grid, bridged, dt = survival_counts(x, a, t, cfg, threads)
    survivors = bridged if cfg.bridge_correction else grid
    if survivors < cfg.min_expected_survivors:
        raise CapabilityError(
            "only {} of {} replicas survive to t = {}, below the minimum of {}; use a quadrature method".format(
                survivors, cfg.replicas, t, cfg.min_expected_survivors
            )
        )
    value = survivors / cfg.replicas
    stderr = math.sqrt(value * (1 - value) / cfg.replicas)
    logger.info("mc estimate %.6g +- %.3g (%d of %d survive)", value, stderr, survivors, cfg.replicas)
    return TailEstimate(value, stderr, TailMethod.MC, t, a.n)


@dataclass
class RunManifest:

    """Record of one run: command line, parsed configuration, version, wall time and outputs."""

    command: List[str]
    config: Dict[str, Any]
    version: str = field(default_factory=get_version)
    wall_time: float = 0.0
    outputs: Any = None

    def to_json(self):
        """JSON form."""
        return asdict(self)


def write_manifest(manifest: RunManifest, path: str):
    """Write the manifest as UTF-8 JSON with a trailing newline."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.to_json(), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("manifest written to %s", path)


def timed_run(command: List[str], config: Dict[str, Any], action) -> Tuple[Any, RunManifest]:
    """Run ``action()`` and record it in a manifest."""
    start = time.perf_counter()
    outputs = action()
    wall_time = time.perf_counter() - start
    return outputs, RunManifest(list(command or sys.argv), config, wall_time=wall_time, outputs=outputs)
