"""
Non-asymptotic survival probabilities P_x(tau > t).

The driftless Karlin-McGregor integral, the change-of-measure integral for arbitrary drifts, the n=2 first
passage forms, the intermediate form built on I(a, t), and the infinite-horizon survival of diverging drifts.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr
from scipy.stats import norm

from app.utils.asymptotics import (
    asymptotic_law,
    c_const,
    drift_coefficients,
    factored_det_batch,
    gamma,
    h_descriptor,
    h_eval,
    vandermonde,
)
from app.utils.drift_partition import (
    StablePartition,
    StrongRepresentation,
    as_drift,
    as_start,
    check_dimensions,
    greater,
    stable_partition,
    strong_representation,
)
from app.utils.errors import CapabilityError, InvalidInputError, QuadratureError
from app.utils.numerics import Box, QuadratureSpec, batched_det, determinant, gaps_to_points, tensor_quadrature
from app.utils.settings import TailMethod

logger = logging.getLogger()

BOUNDED_METHODS = (TailMethod.KM, TailMethod.EXACT, TailMethod.MC)
SQRT2 = math.sqrt(2.0)


@dataclass
class TailEstimate:

    """A survival probability with a nonnegative error bound (quadrature bound or MC stderr) and its method."""

    value: float
    error: float
    method: TailMethod
    t: float
    n: int

    def __post_init__(self):
        """Normalise the method tag and check the bounds."""
        self.method = TailMethod(self.method)
        self.error = abs(float(self.error))
        self.value = float(self.value)
        if not math.isfinite(self.value):
            raise QuadratureError("{} estimate is not finite at t={}".format(self.method.value, self.t))
        if self.method in BOUNDED_METHODS and not -self.error - 1e-12 <= self.value <= 1 + self.error + 1e-12:
            raise QuadratureError(
                "{} estimate {} lies outside [0, 1] by more than its error {}".format(
                    self.method.value, self.value, self.error
                )
            )

    def to_json(self):
        """JSON form."""
        return {"value": self.value, "error": self.error, "method": self.method.value, "t": self.t, "n": self.n}


def _check_t(t: float):
    if not (t > 0 and math.isfinite(t)):
        raise InvalidInputError("t must be positive and finite, got {}".format(t))


def _check_capability(n: int, spec: QuadratureSpec):
    if n > spec.max_dimension:
        raise CapabilityError(
            "quadrature supports n <= {}, got n = {}; use the mc method".format(spec.max_dimension, n)
        )


def truncation_bound(truncation: float, dims: int) -> float:
    """Gaussian mass outside +- L standard deviations, summed over the axes."""
    return dims * math.erfc(truncation / SQRT2)


def km_survival(x, t: float, spec: QuadratureSpec = None, threads: int = None) -> TailEstimate:
    """
    Driftless survival from the Karlin-McGregor formula, integral over W of det[p_t(x_i, y_j)] dy.

    In units y = sqrt(t) v the kernel is the standard normal density phi(v_j - x_i / sqrt(t)). The box is
    centred on the start: v_1 within +-L of x_1 / sqrt(t), each gap within +-sqrt(2) L of the scaled start gap.

    :param x: Start vector in the Weyl chamber.
    :param t: Time horizon.
    :param spec: Quadrature settings.
    :raises CapabilityError: For n above the tensor-quadrature limit.
    """
    x = as_start(x)
    _check_t(t)
    spec = spec or QuadratureSpec.from_config()
    _check_capability(x.n, spec)
    scaled = x.as_floats() / math.sqrt(t)
    L = spec.truncation
    d = np.diff(scaled)
    region = Box(
        (scaled[0] - L,) + tuple(np.maximum(0.0, d - SQRT2 * L)),
        (scaled[0] + L,) + tuple(d + SQRT2 * L),
    )

    def integrand(points):
        v = gaps_to_points(points[:, 0], points[:, 1:])
        kernel = norm.pdf(v[:, None, :] - scaled[None, :, None])
        return batched_det(kernel)

    result = tensor_quadrature(integrand, region, spec, threads)
    error = result.error_bound + truncation_bound(L, x.n)
    logger.info("km_survival n=%d t=%s value=%.12g error=%.3g", x.n, t, result.value, error)
    return TailEstimate(result.value, error, TailMethod.KM, t, x.n)


def _gap_box(d: np.ndarray, lower: np.ndarray, coefficients: np.ndarray, t: float, L: float) -> Box:
    """
    Truncated integration box in gap coordinates.

    Each gap lies within +- sqrt(2) L of its centre d_k and above its chamber bound; a gap with a positive
    linear decay coefficient is also cut where the exponent alone falls below -(L^2 + d_k^2 / 4).
    """
    lo = np.maximum(lower, d - SQRT2 * L)
    hi = d + SQRT2 * L
    decaying = coefficients > 0
    hi[decaying] = np.minimum(hi[decaying], (L**2 + d[decaying] ** 2 / 4) / (coefficients[decaying] * math.sqrt(t)))
    hi = np.maximum(hi, lo)
    return Box(tuple(lo), tuple(hi))


def gap_quadratic(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """|z~|^2 and the centred vector z~ with consecutive gaps s, for the rows of an (N, n-1) array."""
    points = gaps_to_points(np.zeros(len(s)), s)
    centred = points - points.mean(axis=1, keepdims=True)
    return np.sum(centred**2, axis=1), centred


def tail_exact(x, a, t: float, spec: QuadratureSpec = None, threads: int = None) -> TailEstimate:
    """
    Survival with drift through the change of measure.

    P = (2 pi)^{-n/2} e^{-<a,x> - |x|^2 / 2t}
        * integral over W of e^{-|y - a sqrt(t)|^2 / 2} det[e^{x_i y_j / sqrt(t)}] dy.

    The integral is taken around the projection f sqrt(t) of a sqrt(t) onto the closed chamber: with
    y = f sqrt(t) + u 1 + z~(s) for centred z~ with gaps s, the mean coordinate u integrates in closed form,
    e^{-gamma t} factors out, and the determinant is evaluated in factored form so its t^{-k0/2} size
    survives rounding.

    :param x: Start vector.
    :param a: Drift vector.
    :param t: Time horizon.
    :param spec: Quadrature settings.
    :raises CapabilityError: For n above the tensor-quadrature limit.
    """
    x, a = as_start(x), as_drift(a)
    check_dimensions(x, a)
    _check_t(t)
    spec = spec or QuadratureSpec.from_config()
    _check_capability(x.n, spec)
    n = x.n
    p = stable_partition(a)
    sr = strong_representation(p)
    xs, af = x.as_floats(), a.as_floats()
    f = np.array([float(v) for v in p.f_full])
    shift = float(np.mean(f))
    coefficients = drift_coefficients(a, p)
    root = math.sqrt(t)
    region = _gap_box(np.diff(xs) / root, (f[:-1] - f[1:]) * root, coefficients, t, spec.truncation)

    def integrand(s):
        quadratic, centred = gap_quadratic(s)
        det = factored_det_batch(xs, centred / root, f - shift, sr)
        return np.exp(-0.5 * quadratic - root * (s @ coefficients)) * det

    result = tensor_quadrature(integrand, region, spec, threads)
    centre = xs - xs.mean()
    log_prefactor = (
        -n / 2 * math.log(2 * math.pi)
        + 0.5 * math.log(2 * math.pi / n)
        - float(np.dot(xs, af - shift))
        - float(np.dot(centre, centre)) / (2 * t)
        - gamma(a, p) * t
    )
    scale = math.exp(log_prefactor)
    value = scale * result.value
    error = scale * result.error_bound + abs(value) * truncation_bound(spec.truncation, n - 1)
    logger.info("tail_exact n=%d t=%s value=%.12g error=%.3g", n, t, value, error)
    return TailEstimate(value, error, TailMethod.EXACT, t, n)


def _n2_parameters(x, a) -> Tuple[float, float]:
    x, a = as_start(x), as_drift(a)
    check_dimensions(x, a)
    if x.n != 2:
        raise InvalidInputError("the n=2 closed form needs n = 2, got {}".format(x.n))
    return float(x[1] - x[0]), float(a[1] - a[0]) / 2


def tail_n2_closed(x, a, t: float) -> TailEstimate:
    """
    Exact n=2 survival P(T' > 2t).

    The gap x_2 - x_1 is a Brownian motion of variance 2 with drift a_2 - a_1, so tau = T'/2 where T' is the
    first passage to 0 of a unit-variance motion with drift mu = (a_2 - a_1)/2 started at the gap. The first
    passage density is integrated over [2t, inf) by adaptive quadrature, plus the escape probability
    1 - e^{-2 mu gap} when mu > 0.

    :param x: Start vector of length 2.
    :param a: Drift vector of length 2.
    :param t: Time horizon.
    """
    gap, mu = _n2_parameters(x, a)
    _check_t(t)
    start = 2 * t

    def log_density(s):
        return math.log(gap) - 0.5 * math.log(2 * math.pi * s**3) - (gap + mu * s) ** 2 / (2 * s)

    anchor = log_density(start)
    tail, error = integrate.quad(
        lambda u: math.exp(log_density(start + u) - anchor), 0, np.inf, epsabs=0, epsrel=1e-12, limit=200
    )
    escape = -math.expm1(-2 * mu * gap) if mu > 0 else 0.0
    value = math.exp(anchor) * tail + escape
    return TailEstimate(value, math.exp(anchor) * error, TailMethod.CLOSED2, t, 2)


def tail_n2_reference(x, a, t: float) -> TailEstimate:
    """
    n=2 survival from the closed normal-distribution form of the first-passage law at s = 2t.

    P(T' > s) = Phi((gap + mu s) / sqrt(s)) - e^{-2 mu gap} Phi((-gap + mu s) / sqrt(s)).
    """
    gap, mu = _n2_parameters(x, a)
    _check_t(t)
    s = 2 * t
    first = math.exp(log_ndtr((gap + mu * s) / math.sqrt(s)))
    second = math.exp(-2 * mu * gap + log_ndtr((-gap + mu * s) / math.sqrt(s)))
    return TailEstimate(first - second, 1e-15 * max(first, second), TailMethod.CLOSED2, t, 2)


def i_integral(
    a, p: StablePartition = None, sr: StrongRepresentation = None, t: float = 1.0, spec: QuadratureSpec = None
):
    """
    I(a, t): integral over the shifted chamber W - f sqrt(t) of e^{-|z|^2/2 - sqrt(t) <z, f - a>} prod Delta(z-block).

    The mean coordinate contributes sqrt(2 pi / n); the rest is integrated over the gaps.

    :param a: Drift vector.
    :param p: Its stable partition.
    :param sr: Its strong representation.
    :param t: Time, positive.
    :param spec: Quadrature settings.
    :return: IntegrationResult of the full integral.
    """
    a = as_drift(a)
    _check_t(t)
    spec = spec or QuadratureSpec.from_config()
    _check_capability(a.n, spec)
    p = p or stable_partition(a)
    sr = sr or strong_representation(p)
    f = np.array([float(v) for v in p.f_full])
    coefficients = drift_coefficients(a, p)
    root = math.sqrt(t)
    region = _gap_box(np.zeros(a.n - 1), (f[:-1] - f[1:]) * root, coefficients, t, spec.truncation)
    blocks = [(s, e) for s, e in sr.blocks() if e - s > 1]

    def integrand(s):
        quadratic, centred = gap_quadratic(s)
        weight = np.ones(len(s))
        for start, end in blocks:
            weight = weight * vandermonde(centred[:, start:end])
        return np.exp(-0.5 * quadratic - root * (s @ coefficients)) * weight

    result = tensor_quadrature(integrand, region, spec)
    scale = math.sqrt(2 * math.pi / a.n)
    result.value *= scale
    result.error_bound = scale * result.error_bound + abs(result.value) * truncation_bound(spec.truncation, a.n - 1)
    return result


def proposition_tail(x, a, t: float, spec: QuadratureSpec = None) -> TailEstimate:
    """
    (2 pi)^{-n/2} prod c_{nu'_j} e^{-gamma t} t^{-k0/2} h(x) I(a, t), the intermediate form without its (1 + o(1)).

    For small t this can differ from the exact tail by more than 10%; the ratio tends to 1 as t grows.
    """
    x, a = as_start(x), as_drift(a)
    check_dimensions(x, a)
    p = stable_partition(a)
    sr = strong_representation(p)
    integral = i_integral(a, p, sr, t, spec)
    factor = (
        (2 * math.pi) ** (-x.n / 2)
        * math.prod(c_const(v) for v in sr.nu_prime)
        * math.exp(-gamma(a, p) * t)
        * t ** (-sr.k0 / 2)
        * h_eval(h_descriptor(a, p, sr), x)
    )
    return TailEstimate(factor * integral.value, abs(factor) * integral.error_bound, TailMethod.PROPOSITION, t, x.n)


def limit_probability(x, a) -> float:
    """
    P(tau = inf) = e^{-<x,a>} det[e^{x_i a_j}] for strictly increasing drifts.

    :raises InvalidInputError: If the drifts are not strictly increasing.
    """
    x, a = as_start(x), as_drift(a)
    check_dimensions(x, a)
    if not all(greater(v, u) for u, v in zip(a.values, a.values[1:])):
        raise InvalidInputError(
            "limit_probability needs strictly increasing drifts, got {}".format([str(v) for v in a])
        )
    xs, af = x.as_floats(), a.as_floats()
    shift = float(np.mean(af))
    return float(np.exp(-np.dot(xs, af - shift)) * determinant(np.exp(np.outer(xs, af - shift))))


def survival_at_infinity(x, a) -> float:
    """P(tau = inf) for any drift vector: zero unless the drifts strictly increase."""
    a = as_drift(a)
    if all(greater(v, u) for u, v in zip(a.values, a.values[1:])):
        return limit_probability(x, a)
    return 0.0


def asymptotic_tail(x, a, t: float, constant: float) -> TailEstimate:
    """
    The asymptotic form C h(x) t^{-alpha} e^{-gamma t} as a tail estimate; it may exceed 1 for small t.

    :param x: Start vector.
    :param a: Drift vector.
    :param t: Time horizon.
    :param constant: The constant C.
    """
    _check_t(t)
    law = asymptotic_law(a)
    value = constant * h_eval(law.h, x) * t ** (-float(law.alpha)) * math.exp(-law.gamma * t)
    return TailEstimate(value, 0.0, TailMethod.ASYMPTOTIC, t, law.h.drift.n)
