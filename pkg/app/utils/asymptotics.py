"""
Closed-form asymptotic exponents and prefactor of the collision time.

P_x(tau > t) ~ C h(x) t^{-alpha} e^{-gamma t}: the decay rate gamma, the polynomial exponent alpha, the
determinant prefactor h(x), plus the Vandermonde, H and Schur-ratio utilities and the expansion of the
perturbed determinant det[e^{x_i (f_j + z_j / sqrt(t))}] in powers of t^{-1/2}.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Sequence, Tuple

import mpmath
import numpy as np
from scipy.linalg import expm

from app.utils.drift_partition import (
    DriftVector,
    StablePartition,
    StrongRepresentation,
    as_drift,
    as_start,
    check_dimensions,
    mean,
    stable_partition,
    strong_representation,
)
from app.utils.errors import InvalidInputError
from app.utils.numerics import batched_det, determinant, hadamard_bound
from app.utils.settings import get_quadrature_config

logger = logging.getLogger()


def _check_partition(a: DriftVector, p: StablePartition):
    if tuple(p.drift.values) != tuple(a.values):
        raise InvalidInputError("partition was computed for {} not for {}".format(list(p.drift.values), list(a.values)))


def gamma(a, p: StablePartition = None) -> float:
    """
    Exponential decay rate: half the sum over blocks of (1/nu) * sum of squared pairwise drift differences.

    :param a: Drift vector.
    :param p: Its stable partition (computed when omitted).
    :raises InvalidInputError: If p belongs to another drift vector.
    """
    a = as_drift(a)
    p = p or stable_partition(a)
    _check_partition(a, p)
    total = Fraction(0) if a.exact else 0.0
    for start, end in p.blocks():
        block = a.values[start:end]
        pairs = sum((u - v) ** 2 for u, v in itertools.combinations(block, 2))
        total += pairs / (end - start)
    return float(total / 2)


def alpha(p: StablePartition, sr: StrongRepresentation = None) -> Fraction:
    """
    Polynomial exponent (sum C(nu'_j, 2) + (n - q) + sum C(nu_j, 2)) / 2 as an exact rational.

    :param p: Stable partition.
    :param sr: Its strong representation.
    """
    sr = sr or strong_representation(p)
    return Fraction(sr.k0 + (p.n - p.q) + sum(math.comb(v, 2) for v in p.nu), 2)


def c_const(m: int) -> float:
    """c_m = 1 / (1! 2! ... (m-1)!)."""
    return 1.0 / math.prod(math.factorial(j) for j in range(1, m))


@dataclass(frozen=True)
class HPrefactor:

    """h(x) = e^{-<x,a>} det[e^{x_i f_j} x_i^{p_j}] as per-column exponents f_j and powers p_j."""

    drift: DriftVector
    f: Tuple[float, ...]
    p: Tuple[int, ...]

    def to_json(self):
        """JSON form."""
        return {"drift": [float(v) for v in self.drift.values], "f": list(self.f), "p": list(self.p)}


def h_descriptor(a, p: StablePartition = None, sr: StrongRepresentation = None) -> HPrefactor:
    """
    Column exponents are the block means; powers restart at 0 on every strong block.

    :param a: Drift vector.
    :param p: Its stable partition.
    :param sr: Its strong representation.
    """
    a = as_drift(a)
    p = p or stable_partition(a)
    _check_partition(a, p)
    sr = sr or strong_representation(p)
    return HPrefactor(a, tuple(float(f) for f in p.f_full), sr.powers())


def h_matrix(hp: HPrefactor, x: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """Matrix [e^{x_i (f_j - shift)} x_i^{p_j}]."""
    f = np.asarray(hp.f) - shift
    return np.exp(np.outer(x, f)) * x[:, None] ** np.asarray(hp.p)[None, :]


def h_eval(hp: HPrefactor, x) -> float:
    """
    Evaluate h(x).

    Every exponent is shifted by the mean column exponent c, which leaves
    e^{-<x,a>} det[...] = e^{-<x,a-c>} det[e^{x_i (f_j - c)} x_i^{p_j}] unchanged and keeps entries moderate.

    :param hp: Prefactor descriptor.
    :param x: Start vector in the Weyl chamber.
    """
    x = as_start(x)
    check_dimensions(x, hp.drift)
    xs = x.as_floats()
    shift = float(np.mean(hp.f))
    det = determinant(h_matrix(hp, xs, shift))
    return float(np.exp(-np.dot(xs, hp.drift.as_floats() - shift)) * det)


@dataclass(frozen=True)
class AsymptoticLaw:

    """Exponents and prefactor of P_x(tau > t) ~ C h(x) t^{-alpha} e^{-gamma t}."""

    gamma: float
    alpha: Fraction
    h: HPrefactor
    partition: StablePartition
    strong: StrongRepresentation

    def to_json(self):
        """JSON form."""
        return {
            "gamma": self.gamma,
            "alpha_num": self.alpha.numerator,
            "alpha_den": self.alpha.denominator,
            "h": self.h.to_json(),
        }


def asymptotic_law(a) -> AsymptoticLaw:
    """Partition the drift vector and assemble gamma, alpha and h."""
    a = as_drift(a)
    p = stable_partition(a)
    sr = strong_representation(p)
    law = AsymptoticLaw(gamma(a, p), alpha(p, sr), h_descriptor(a, p, sr), p, sr)
    logger.info("asymptotic law: gamma=%s alpha=%s k0=%d", law.gamma, law.alpha, sr.k0)
    return law


def vandermonde(z) -> np.ndarray:
    """
    Product of (z_j - z_i) over i < j along the last axis.

    :param z: One vector or an (N, k) array.
    """
    z = np.asarray(z, dtype=float)
    k = z.shape[-1]
    result = np.ones(z.shape[:-1])
    for i, j in itertools.combinations(range(k), 2):
        result = result * (z[..., j] - z[..., i])
    return result if z.ndim > 1 else float(result)


def big_h(s) -> np.ndarray:
    """
    H(s_1, ..., s_l) = product over i < j of (s_i + ... + s_{j-1}).

    This is the Vandermonde product of the partial sums (0, s_1, s_1 + s_2, ...).

    :param s: One vector or an (N, l) array.
    """
    s = np.asarray(s, dtype=float)
    points = np.concatenate([np.zeros(s.shape[:-1] + (1,)), np.cumsum(s, axis=-1)], axis=-1)
    return vandermonde(points)


def complete_homogeneous(z: Sequence[float], degree: int) -> List[float]:
    """Complete homogeneous symmetric polynomials h_0, ..., h_degree of z."""
    h = [1.0] + [0.0] * degree
    for value in z:
        for m in range(1, degree + 1):
            h[m] += value * h[m - 1]
    return h


def schur_ratio(k: Sequence[int], z: Sequence[float]) -> float:
    """
    det[z_i^{k_j}] / det[z_i^{j-1}], evaluated as the Schur polynomial of lambda_{n+1-j} = k_j - (j-1).

    The Jacobi-Trudi determinant in complete homogeneous polynomials is a polynomial in z, so repeated
    entries of z give the continuous limit.

    :param k: Strictly increasing nonnegative integers.
    :param z: Points, as many as k.
    :raises InvalidInputError: On a dimension mismatch or exponents that are not strictly increasing.
    """
    k, z = list(k), [float(v) for v in z]
    if len(k) != len(z):
        raise InvalidInputError("schur_ratio needs |k| = |z|, got {} and {}".format(len(k), len(z)))
    if any(v < 0 for v in k) or any(u >= v for u, v in zip(k, k[1:])):
        raise InvalidInputError("exponents must be strictly increasing nonnegative integers: {}".format(k))
    n = len(k)
    if n == 0:
        return 1.0
    lam = [k[n - 1 - i] - (n - 1 - i) for i in range(n)]
    h = complete_homogeneous(z, lam[0] + n)
    matrix = [[h[lam[i] - i + j] if lam[i] - i + j >= 0 else 0.0 for j in range(n)] for i in range(n)]
    return float(np.linalg.det(np.array(matrix)))


def perturbed_det(x, z, f, t: float) -> float:
    """
    det[e^{x_i (f_j + z_j / sqrt(t))}] evaluated directly.

    When the result falls below the configured fraction of the Hadamard bound, the matrix is rebuilt and
    eliminated in extended precision.
    """
    xs = np.asarray([float(v) for v in x])
    z = np.asarray(z, dtype=float)
    f = np.asarray(f, dtype=float)
    if not (len(xs) == len(z) == len(f)):
        raise InvalidInputError("x, z and f must have equal lengths")
    matrix = np.exp(np.outer(xs, f + z / math.sqrt(t)))
    value = float(np.linalg.det(matrix))
    section = get_quadrature_config()
    if abs(value) < float(section.get("cancellation_threshold", 1e-10)) * float(hadamard_bound(matrix)):
        with mpmath.workdps(int(section.get("extended_dps", 50))):
            root = mpmath.sqrt(mpmath.mpf(t))
            w = [mpmath.mpf(fj) + mpmath.mpf(zj) / root for fj, zj in zip(f, z)]
            value = float(mpmath.det(mpmath.matrix([[mpmath.exp(mpmath.mpf(xi) * wj) for wj in w] for xi in xs])))
    return value


def divided_difference_columns(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    Divided differences of u -> e^{x_i u} at the nodes w_1..w_r, w_1..w_r-1, ... for every row x_i.

    Entry [.., i, r] is e^{x_i u}[w_1, ..., w_{r+1}], read off the first row of the matrix exponential of
    x_i times the upper bidiagonal matrix with diagonal w and unit superdiagonal.

    :param x: Row values, shape (n,).
    :param w: Nodes, shape (N, r).
    :return: Array of shape (N, n, r).
    """
    count, size = w.shape
    bidiagonal = np.zeros((count, size, size))
    bidiagonal[:, np.arange(size), np.arange(size)] = w
    bidiagonal[:, np.arange(size - 1), np.arange(1, size)] = 1.0
    scaled = x[None, :, None, None] * bidiagonal[:, None, :, :]
    return expm(scaled)[:, :, 0, :]


def factored_det_batch(x: np.ndarray, w: np.ndarray, f: Sequence[float], sr: StrongRepresentation) -> np.ndarray:
    """
    det[e^{x_i (f_j + w_j)}] without cancellation, for a batch of perturbations w.

    Within a strong block the columns share f; subtracting them in Newton form gives
    prod Delta(w_block) * det[e^{x_i f_l} * divided differences of e^{x_i u} at w_block].

    :param x: Start vector as floats.
    :param w: Perturbations, shape (N, n).
    :param f: Column exponents (constant on strong blocks).
    :param sr: Strong representation defining the blocks.
    :return: Determinants, shape (N,).
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    columns, scale = [], np.ones(len(w))
    for start, end in sr.blocks():
        block = w[:, start:end]
        dd = divided_difference_columns(x, block)
        columns.append(np.exp(x * f[start])[None, :, None] * dd)
        if end - start > 1:
            scale = scale * vandermonde(block)
    matrix = np.concatenate(columns, axis=2)
    return scale * batched_det(matrix)


def factored_det(x, z, f, sr: StrongRepresentation, t: float) -> float:
    """
    det[e^{x_i (f_j + z_j / sqrt(t))}] in factored form: t^{-k0/2} prod Delta(z_block) det[M(t)].

    :param x: Start vector.
    :param z: Perturbation.
    :param f: Column exponents.
    :param sr: Strong representation.
    :param t: Time, positive.
    """
    xs = np.asarray([float(v) for v in x])
    w = np.asarray(z, dtype=float)[None, :] / math.sqrt(t)
    return float(factored_det_batch(xs, w, [float(v) for v in f], sr)[0])


def leading_term(x, z, hp: HPrefactor, sr: StrongRepresentation, t: float) -> float:
    """
    Leading term of the perturbed determinant:
    t^{-k0/2} prod c_{nu'_j} prod Delta(z-block j) det[e^{x_k f_j} x_k^{p_j}].

    :param x: Start vector.
    :param z: Perturbation.
    :param hp: Prefactor descriptor holding f and p.
    :param sr: Strong representation.
    :param t: Time, positive.
    """
    xs = np.asarray([float(v) for v in x])
    z = np.asarray(z, dtype=float)
    blocks = math.prod(c_const(end - start) * vandermonde(z[start:end]) for start, end in sr.blocks())
    return t ** (-sr.k0 / 2) * blocks * determinant(h_matrix(hp, xs))


def _increasing_tuples(size: int, total: int, low: int = 0) -> Iterator[Tuple[int, ...]]:
    """Strictly increasing tuples of nonnegative integers >= low with the given sum."""
    if size == 0:
        if total == 0:
            yield ()
        return
    for first in range(low, total + 1):
        if first * size + size * (size - 1) // 2 > total:
            break
        for rest in _increasing_tuples(size - 1, total - first, first + 1):
            yield (first,) + rest


def _block_term(exponents: Tuple[int, ...], z: np.ndarray) -> float:
    return schur_ratio(exponents, z) * vandermonde(z) / math.prod(math.factorial(k) for k in exponents)


def det_expansion(x, z, f, sr: StrongRepresentation, t: float, order: int = 0) -> float:
    """
    Partial sum over k = k0, ..., k0 + order of t^{-k/2} T_k in the expansion of the perturbed determinant.

    Expanding every column e^{x_i z_j / sqrt(t)} in powers and collecting equal exponent sets per strong block
    gives T_k = sum over strictly increasing exponent sets K_l with total degree k of
    prod_l [g_{K_l}(z_l) Delta(z_l) / prod K_l!] det[e^{x_i f_j} x_i^{K_j}].

    :param order: Number of correction orders beyond the leading one.
    """
    xs = np.asarray([float(v) for v in x])
    z = np.asarray(z, dtype=float)
    f = np.asarray(f, dtype=float)
    blocks = sr.blocks()
    minimal = [math.comb(end - start, 2) for start, end in blocks]
    total = 0.0
    for excess in range(order + 1):
        term = 0.0
        for split in itertools.product(range(excess + 1), repeat=len(blocks)):
            if sum(split) != excess:
                continue
            choices = [
                list(_increasing_tuples(end - start, low + extra))
                for (start, end), low, extra in zip(blocks, minimal, split)
            ]
            for sets in itertools.product(*choices):
                weight = math.prod(_block_term(k, z[start:end]) for k, (start, end) in zip(sets, blocks))
                powers = np.concatenate([np.asarray(k) for k in sets])
                term += weight * determinant(np.exp(np.outer(xs, f)) * xs[:, None] ** powers[None, :])
        total += t ** (-(sr.k0 + excess) / 2) * term
    return total


def drift_coefficients(a, p: StablePartition = None) -> np.ndarray:
    """
    Coefficients c_k of the linear term sqrt(t) sum_k c_k s_k in the Gaussian exponent, per gap s_k.

    For a gap inside block l ending at r, c_k = (r - k)(f^l - mean(a_{k+1..r})); it is positive because the
    suffix means of an irreducible block lie below the block mean. Gaps between blocks carry 0.

    :param a: Drift vector.
    :param p: Its stable partition.
    :return: Array of length n - 1.
    """
    a = as_drift(a)
    p = p or stable_partition(a)
    _check_partition(a, p)
    result = np.zeros(a.n - 1)
    for start, end in p.blocks():
        block_mean = mean(a.values[start:end])
        for k in range(start, end - 1):
            result[k] = float((end - k - 1) * (block_mean - mean(a.values[k + 1 : end])))
    return result


def centered_square_identity(a: Sequence[float]) -> Tuple[float, float]:
    """Both sides of sum (mean - a_i)^2 = (1/m) sum_{u<v} (a_u - a_v)^2."""
    a = np.asarray(a, dtype=float)
    lhs = float(np.sum((a.mean() - a) ** 2))
    rhs = float(sum((u - v) ** 2 for u, v in itertools.combinations(a, 2)) / len(a))
    return lhs, rhs


def pair_cross_sum(z: Sequence[float], a: Sequence[float]) -> float:
    """sum_{u<v} (z_v - z_u)(a_u - a_v)."""
    return float(sum((z[v] - z[u]) * (a[u] - a[v]) for u, v in itertools.combinations(range(len(a)), 2)))


CROSS_TERM_FACTOR = 1  # sum z_i (mean - a_i) = (CROSS_TERM_FACTOR / m) * pair_cross_sum


def cross_term_identity(
    z: Sequence[float], a: Sequence[float], factor: float = CROSS_TERM_FACTOR
) -> Tuple[float, float]:
    """Both sides of sum z_i (mean - a_i) = (factor / m) sum_{u<v} (z_v - z_u)(a_u - a_v)."""
    a, z = np.asarray(a, dtype=float), np.asarray(z, dtype=float)
    return float(np.dot(z, a.mean() - a)), factor * pair_cross_sum(z, a) / len(a)


def brute_force_cross_term_factor(rng: np.random.Generator, samples: int = 100, size: int = 5) -> float:
    """Median over random instances of m * sum z_i (mean - a_i) / pair_cross_sum."""
    ratios = []
    for _ in range(samples):
        a, z = rng.normal(size=size), rng.normal(size=size)
        ratios.append(size * float(np.dot(z, a.mean() - a)) / pair_cross_sum(z, a))
    return float(np.median(ratios))


def shift_decomposition(a, z: Sequence[float], t: float) -> Tuple[float, float]:
    """
    Both sides of |f sqrt(t) - a sqrt(t) + z|^2 = |z|^2 + 2 gamma t + 2 sqrt(t) * cross.

    The cross term is written per block through the pairwise identity,
    cross = sum_l (1/nu_l) sum_{u<v} (z_v - z_u)(a_u - a_v).
    """
    a = as_drift(a)
    p = stable_partition(a)
    af, f, z = a.as_floats(), np.array([float(v) for v in p.f_full]), np.asarray(z, dtype=float)
    lhs = float(np.sum((f * math.sqrt(t) - af * math.sqrt(t) + z) ** 2))
    cross = sum(pair_cross_sum(z[s:e], af[s:e]) / (e - s) for s, e in p.blocks())
    rhs = float(np.sum(z**2) + 2 * gamma(a, p) * t + 2 * math.sqrt(t) * cross)
    return lhs, rhs
