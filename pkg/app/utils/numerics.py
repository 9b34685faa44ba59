"""
Shared numeric kernel.

Tensor quadrature over boxes and truncated Weyl cones, Gauss nodes, compensated summation,
determinants with an extended-precision fallback, and the least-squares constant fit used to
extract asymptotic constants.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Sequence, Tuple

import mpmath
import numpy as np

from app.utils.errors import CapabilityError, InvalidInputError, QuadratureError
from app.utils.settings import get_quadrature_config, get_thread_count

logger = logging.getLogger()

CHUNK = 65536  # integrand evaluations per chunk
MIN_POINTS = 8
ADAPTIVE_LEVELS = 4
ADAPTIVE_RTOL = 1e-10
LOG_SWITCH = 1e12  # max/min entry magnitude ratio above which determinants go through slogdet


class Scheme(str, Enum):

    """Quadrature rule used along each axis."""

    GAUSS_LEGENDRE = "gauss_legendre"
    GAUSS_HERMITE = "gauss_hermite"
    TENSOR_TRAPEZOID = "tensor_trapezoid"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class QuadratureSpec:

    """Truncation half-width L (standardized units), nodes per axis and rule."""

    truncation: float = 8.0
    points_per_dim: int = 32
    scheme: Scheme = Scheme.GAUSS_LEGENDRE
    max_dimension: int = 4

    def __post_init__(self):
        """Validate the node counts and bounds."""
        if not self.truncation > 0:
            raise InvalidInputError("truncation must be positive, got {}".format(self.truncation))
        if self.points_per_dim < MIN_POINTS:
            raise InvalidInputError("points_per_dim must be at least {}".format(MIN_POINTS))
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @classmethod
    def from_config(cls, **overrides):
        """Build the default quadrature settings from the configuration file, with keyword overrides."""
        section = get_quadrature_config()
        values = {
            "truncation": float(section["truncation"]),
            "points_per_dim": int(section["points_per_dim"]),
            "scheme": section["scheme"],
            "max_dimension": int(section.get("max_dimension", 4)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def refined(self):
        """The same rule with twice the nodes per axis."""
        return QuadratureSpec(self.truncation, 2 * self.points_per_dim, self.scheme, self.max_dimension)

    def to_json(self):
        """JSON form recorded in reports."""
        return {"truncation": self.truncation, "points_per_dim": self.points_per_dim, "scheme": self.scheme.value}


@dataclass
class IntegrationResult:

    """Value of an integral with a nonnegative error bound and the number of integrand evaluations."""

    value: float
    error_bound: float
    evaluations: int

    def __post_init__(self):
        """Keep the bound nonnegative."""
        self.error_bound = abs(self.error_bound)


@dataclass(frozen=True)
class Box:

    """Axis-aligned integration region; infinite bounds are allowed with the Gauss-Hermite rule only."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        """Check dimensions and ordering."""
        if len(self.lower) != len(self.upper):
            raise InvalidInputError("box bounds differ in length")
        for lo, hi in zip(self.lower, self.upper):
            if not lo <= hi:
                raise InvalidInputError("empty box side [{}, {}]".format(lo, hi))

    @property
    def dimension(self) -> int:
        """Number of axes."""
        return len(self.lower)


def gauss_hermite(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights integrating against the weight e^{-x^2/2} on the real line.

    :param n: Number of nodes.
    :return: Knots and weights (the weights sum to sqrt(2 pi)).
    """
    knots, weights = np.polynomial.hermite.hermgauss(n)
    return knots * np.sqrt(2.0), weights * np.sqrt(2.0)


def gauss_legendre(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    knots, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * knots + 0.5 * (b + a), 0.5 * (b - a) * weights


def gauss_laguerre(n: int, rate: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights of ``int_0^inf g(x) e^{-rate x} dx``; exact for polynomial g of degree < 2n.

    :param n: Number of nodes.
    :param rate: Positive exponential rate.
    """
    if not rate > 0:
        raise InvalidInputError("Laguerre rate must be positive, got {}".format(rate))
    knots, weights = np.polynomial.laguerre.laggauss(n)
    return knots / rate, weights / rate


def trapezoid(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite trapezoid nodes and weights on [a, b]."""
    knots = np.linspace(a, b, n)
    weights = np.full(n, (b - a) / (n - 1))
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return knots, weights


def axis_rule(scheme: Scheme, lo: float, hi: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights of one axis; the Gauss-Hermite weights absorb e^{x^2/2} so that they integrate plain functions.

    :param scheme: Rule family.
    :param lo: Lower bound (may be -inf for Gauss-Hermite).
    :param hi: Upper bound (may be +inf for Gauss-Hermite).
    :param n: Node count.
    """
    infinite = math.isinf(lo) or math.isinf(hi)
    if infinite:
        if scheme != Scheme.GAUSS_HERMITE or not (math.isinf(lo) and math.isinf(hi)):
            raise InvalidInputError("infinite bounds need the gauss_hermite scheme over the whole line")
        knots, weights = gauss_hermite(n)
        return knots, weights * np.exp(0.5 * knots**2)
    if hi == lo:
        return np.array([lo]), np.array([0.0])
    if scheme == Scheme.TENSOR_TRAPEZOID:
        return trapezoid(lo, hi, n)
    return gauss_legendre(lo, hi, n)


def compensated_sum(values) -> float:
    """Correctly rounded sum of a sequence of floats (Shewchuk partials through math.fsum)."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def tensor_points(rules: Sequence[Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor product of one-dimensional rules: points of shape (N, d) and their weights."""
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
    return points, weights


def _evaluate(f: Callable[[np.ndarray], np.ndarray], points: np.ndarray, weights: np.ndarray, threads: int) -> float:
    """Weighted sum of f over the points, chunked; chunk partial sums are combined in chunk order."""
    chunks = [(s, min(s + CHUNK, len(points))) for s in range(0, len(points), CHUNK)]

    def run(bounds):
        s, e = bounds
        values = np.asarray(f(points[s:e]), dtype=float)
        bad = ~np.isfinite(values)
        if bad.any():
            where = points[s:e][np.argmax(bad)]
            raise QuadratureError("integrand is not finite at {}".format(np.array2string(where, precision=6)))
        return compensated_sum(values * weights[s:e])

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run, chunks))
    else:
        partials = [run(c) for c in chunks]
    return compensated_sum(partials)


def _level(f, region: Box, scheme: Scheme, n: int, threads: int) -> Tuple[float, int]:
    rules = [axis_rule(scheme, lo, hi, n) for lo, hi in zip(region.lower, region.upper)]
    points, weights = tensor_points(rules)
    return _evaluate(f, points, weights, threads), len(points)


def tensor_quadrature(
    f: Callable[[np.ndarray], np.ndarray], region: Box, spec: QuadratureSpec = None, threads: int = None
) -> IntegrationResult:
    """
    Integrate a vectorised function over a box with a tensor rule.

    The error bound is the difference between the rule at ``points_per_dim`` and at twice that; the
    adaptive scheme keeps doubling until the relative difference drops below 1e-10.

    :param f: Maps an (N, d) array of points to N values.
    :param region: Integration box.
    :param spec: Quadrature settings; defaults to the configured one.
    :param threads: Worker count for chunk evaluation.
    :return: Value of the finer level, error bound and evaluation count.
    :raises CapabilityError: If the dimension exceeds the supported maximum.
    """
    spec = spec or QuadratureSpec.from_config()
    threads = threads or get_thread_count()
    if region.dimension > spec.max_dimension:
        raise CapabilityError(
            "tensor quadrature supports dimension <= {}, got {}".format(spec.max_dimension, region.dimension)
        )
    if region.dimension == 0:
        value = float(np.asarray(f(np.zeros((1, 0))), dtype=float)[0])
        return IntegrationResult(value, 0.0, 1)
    scheme = Scheme.GAUSS_LEGENDRE if spec.scheme == Scheme.ADAPTIVE else spec.scheme
    if scheme == Scheme.GAUSS_HERMITE and not any(math.isinf(b) for b in region.lower + region.upper):
        logger.warning("gauss_hermite needs infinite bounds; integrating the finite box with gauss_legendre")
        scheme = Scheme.GAUSS_LEGENDRE
    n = spec.points_per_dim
    coarse, evaluations = _level(f, region, scheme, n, threads)
    levels = ADAPTIVE_LEVELS if spec.scheme == Scheme.ADAPTIVE else 1
    for _ in range(levels):
        n *= 2
        fine, count = _level(f, region, scheme, n, threads)
        evaluations += count
        error = abs(fine - coarse)
        if error <= ADAPTIVE_RTOL * abs(fine):
            break
        coarse = fine
    logger.info(
        "quadrature d=%d scheme=%s nodes/axis=%d value=%.12g error=%.3g", region.dimension, scheme.value, n, fine, error
    )
    return IntegrationResult(fine, error, evaluations)


def gaps_to_points(u: np.ndarray, gaps: np.ndarray) -> np.ndarray:
    """Map first coordinates and nonnegative gaps to ordered points: y_1 = u, y_{k+1} = y_k + g_k."""
    return np.concatenate([u[:, None], u[:, None] + np.cumsum(gaps, axis=1)], axis=1)


def weyl_quadrature(
    f: Callable[[np.ndarray], np.ndarray], n: int, center: float = 0.0, spec: QuadratureSpec = None, threads: int = None
) -> IntegrationResult:
    """
    Integrate f over the truncated Weyl cone {y_1 < ... < y_n} by integrating over ordered simplices.

    The change of variables to (y_1, gaps >= 0) has unit Jacobian; y_1 ranges over center +- L and each
    gap over [0, 2L].

    :param f: Maps an (N, n) array of ordered points to N values.
    :param n: Dimension.
    :param center: Centre of the first coordinate.
    :param spec: Quadrature settings.
    """
    spec = spec or QuadratureSpec.from_config()
    L = spec.truncation
    region = Box((center - L,) + (0.0,) * (n - 1), (center + L,) + (2 * L,) * (n - 1))
    return tensor_quadrature(lambda p: f(gaps_to_points(p[:, 0], p[:, 1:])), region, spec, threads)


def hadamard_bound(matrix: np.ndarray) -> np.ndarray:
    """Product of column norms, an upper bound on |det| (batched over leading axes)."""
    return np.prod(np.linalg.norm(matrix, axis=-2), axis=-1)


def extended_det(matrix, dps: int = None) -> float:
    """Determinant by elimination in extended precision (mpmath), rounded to float."""
    dps = dps or int(get_quadrature_config().get("extended_dps", 50))
    with mpmath.workdps(dps):
        return float(mpmath.det(mpmath.matrix(np.asarray(matrix, dtype=float).tolist())))


def determinant(matrix: np.ndarray) -> float:
    """
    Determinant of one square matrix.

    Entries spanning more than 12 orders of magnitude go through log-magnitude/sign elimination;
    a result below the configured fraction of the Hadamard bound is recomputed in extended precision.
    """
    matrix = np.asarray(matrix, dtype=float)
    magnitudes = np.abs(matrix[matrix != 0])
    if magnitudes.size and magnitudes.max() > LOG_SWITCH * magnitudes.min():
        sign, logdet = np.linalg.slogdet(matrix)
        value = float(sign * np.exp(logdet))
    else:
        value = float(np.linalg.det(matrix))
    threshold = float(get_quadrature_config().get("cancellation_threshold", 1e-10))
    bound = float(hadamard_bound(matrix))
    if bound > 0 and abs(value) < threshold * bound:
        logger.warning(
            "determinant cancellation %.3g of the Hadamard bound; using extended precision", abs(value) / bound
        )
        value = extended_det(matrix)
    return value


def batched_det(matrices: np.ndarray) -> np.ndarray:
    """Determinants of a stack of matrices, with the same extended-precision fallback per matrix."""
    matrices = np.asarray(matrices, dtype=float)
    values = np.linalg.det(matrices)
    threshold = float(get_quadrature_config().get("cancellation_threshold", 1e-10))
    suspect = np.nonzero(np.abs(values) < threshold * hadamard_bound(matrices))[0]
    if suspect.size:
        logger.warning("%d of %d determinants re-evaluated in extended precision", suspect.size, len(values))
        for i in suspect:
            values[i] = extended_det(matrices[i])
    return values


@dataclass
class FitResult:

    """Least-squares extrapolation of a sequence to its t -> infinity limit."""

    constant: float
    coefficients: List[float]
    deviations: List[float] = field(default_factory=list)
    converging: bool = True
    residual: float = 0.0


def fit_constant(points: Sequence[Tuple[float, float]], order: int = 1, tolerance: float = 1e-9) -> FitResult:
    """
    Fit ``value(t) = c + c_1 t^{-1/2} + ... + c_order t^{-order/2}`` by weighted least squares.

    Weights grow like t^{1/2} so the late, more asymptotic points dominate. The residual trend is
    the sequence |value(t) - c| along increasing t; ``converging`` is False when it ever increases.

    :param points: Pairs (t, value); at least four.
    :param order: Number of correction terms in powers of t^{-1/2}.
    :param tolerance: Relative increase of |value(t) - c| still counted as noise.
    :raises InvalidInputError: With fewer than four points or a degenerate design matrix.
    """
    if len(points) < 4:
        raise InvalidInputError("fit_constant needs at least 4 points, got {}".format(len(points)))
    points = sorted((float(t), float(v)) for t, v in points)
    t = np.array([p[0] for p in points])
    v = np.array([p[1] for p in points])
    if np.any(t <= 0) or len(np.unique(t)) < order + 1 or len(points) < order + 2:
        raise InvalidInputError("degenerate design matrix for order {} on t={}".format(order, t.tolist()))
    design = np.stack([t ** (-k / 2.0) for k in range(order + 1)], axis=1)
    w = np.sqrt(np.sqrt(t))
    coefficients, _, rank, _ = np.linalg.lstsq(design * w[:, None], v * w, rcond=None)
    if rank < order + 1:
        raise InvalidInputError("degenerate design matrix for order {}".format(order))
    constant = float(coefficients[0])
    deviations = np.abs(v - constant)
    scale = max(1.0, abs(constant))
    converging = bool(np.all(np.diff(deviations) <= tolerance * scale))
    residual = float(np.sqrt(np.mean((design @ coefficients - v) ** 2)))
    return FitResult(constant, [float(c) for c in coefficients[1:]], deviations.tolist(), converging, residual)
