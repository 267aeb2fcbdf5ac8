# apps/channel/analytics.py - closed-form link and contention analytics
import logging
import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from .params import ChannelParams, RangeRegime

logger = logging.getLogger(__name__)

# Distances below this are treated as this distance by the path-loss law
PATH_LOSS_FLOOR = 1e-3

QUAD_TOLERANCE = 1e-10
MAP_RELATIVE_TOLERANCE = 1e-10


class QuadratureError(ArithmeticError):
    """Numerical integration did not converge."""


def path_loss(r, alpha):
    """
    Power-law attenuation l(r) = r^-alpha, clamped at PATH_LOSS_FLOOR.
    """
    attenuation = np.maximum(np.asarray(r, dtype=float), PATH_LOSS_FLOOR) ** -alpha
    if np.ndim(attenuation) == 0:
        return float(attenuation)
    return attenuation


@lru_cache(maxsize=256)
def rho(threshold: float, alpha: float) -> float:
    """
    Interference integral rho(T, alpha) = T^(2/alpha) * int_{T^(-2/alpha)}^inf dz / (1 + z^(alpha/2)).

    For alpha = 4 this equals sqrt(T) * arctan(sqrt(T)).
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if not alpha > 2:
        raise ValueError(f"alpha must be greater than 2, got {alpha}")

    lower = threshold ** (-2.0 / alpha)
    result = quad(
        lambda z: 1.0 / (1.0 + z ** (alpha / 2.0)),
        lower, np.inf,
        epsabs=QUAD_TOLERANCE, epsrel=QUAD_TOLERANCE, limit=200, full_output=1,
    )
    # quad appends a diagnostic message only when it fails
    if len(result) > 3:
        raise QuadratureError(f"rho({threshold}, {alpha}) did not converge: {result[3]}")
    return threshold ** (2.0 / alpha) * result[0]


def _as_output(value):
    return float(value) if np.ndim(value) == 0 else value


def coverage_probability(r, intensity: float, params: ChannelParams):
    """
    P[SINR > T] at link distance r when the active transmitters form a PPP
    of the given intensity.

    Args:
        r (float or ndarray): Distance from the receiver to its transmitter
        intensity (float): Active transmitter intensity, p_A * lambda_t
        params (ChannelParams): Link budget

    Returns:
        float or ndarray: exp(-mu T sigma^2 r^alpha - pi lambda rho(T, alpha) r^2)
    """
    r = np.asarray(r, dtype=float)
    exponent = (
        params.fading_rate * params.threshold * params.noise_power * r ** params.alpha
        + math.pi * intensity * rho(params.threshold, params.alpha) * r ** 2
    )
    return _as_output(np.exp(-exponent))


def linearized_coverage(r, intensity: float, params: ChannelParams):
    """First-order expansion of coverage_probability, floored at zero."""
    r = np.asarray(r, dtype=float)
    score = (
        1.0
        - params.fading_rate * params.threshold * params.noise_power * r ** params.alpha
        - math.pi * intensity * rho(params.threshold, params.alpha) * r ** 2
    )
    return _as_output(np.maximum(score, 0.0))


def mean_interference(intensity: float, exclusion_radius: float, alpha: float) -> float:
    """
    Mean interference of a PPP with no interferer closer than the exclusion
    radius: 2 pi lambda D^(2 - alpha) / (alpha - 2).
    """
    if intensity < 0:
        raise ValueError(f"intensity must be non-negative, got {intensity}")
    if not exclusion_radius > 0:
        raise ValueError(f"exclusion_radius must be positive, got {exclusion_radius}")
    if not alpha > 2:
        raise ValueError(f"alpha must be greater than 2, got {alpha}")
    return 2.0 * math.pi * intensity * exclusion_radius ** (2.0 - alpha) / (alpha - 2.0)


def comm_range(params: ChannelParams, regime, intensity=None, exclusion_radius=None) -> float:
    """
    Communication radius R_d2d for the noise- or interference-limited regime.

    The interference-limited radius replaces the interference by its mean
    under the exclusion radius D.
    """
    regime = RangeRegime(regime)
    if regime is RangeRegime.NOISE_LIMITED:
        if params.noise_power == 0:
            raise ValueError("noise-limited range is unbounded when noise_power is 0")
        level = params.noise_power
    else:
        if intensity is None or not intensity > 0:
            raise ValueError(f"interference-limited range needs a positive intensity, got {intensity}")
        if exclusion_radius is None or not exclusion_radius > 0:
            raise ValueError(
                f"interference-limited range needs a positive exclusion radius, got {exclusion_radius}"
            )
        level = mean_interference(intensity, exclusion_radius, params.alpha)
    return (params.fading_rate * params.threshold * level) ** (-1.0 / params.alpha)


def matern_retention_probability(exclusion_radius: float, intensity: float) -> float:
    """Retention probability (1 - e^-n) / n of Matern type II thinning, n = lambda pi D^2."""
    if exclusion_radius < 0:
        raise ValueError(f"exclusion_radius must be non-negative, got {exclusion_radius}")
    mean_neighbors = intensity * math.pi * exclusion_radius ** 2
    if mean_neighbors == 0:
        return 1.0
    return -math.expm1(-mean_neighbors) / mean_neighbors


def exclusion_radius_from_map(access_probability: float, intensity: float) -> float:
    """
    Exclusion radius D at which Matern type II thinning of a PPP of the given
    intensity retains the target fraction of points.

    Args:
        access_probability (float): Target MAP p_A in (0, 1]
        intensity (float): Potential transmitter intensity lambda_t

    Returns:
        float: D, found by bisection on the mean neighbor count
    """
    if not 0 < access_probability <= 1:
        raise ValueError(f"access probability must be in (0, 1], got {access_probability}")
    if not intensity > 0:
        raise ValueError(f"intensity must be positive, got {intensity}")
    if access_probability == 1:
        return 0.0

    def excess(mean_neighbors):
        return -math.expm1(-mean_neighbors) / mean_neighbors - access_probability

    # Retention falls from 1 at n -> 0 to below p_A at n = 1 / p_A
    lower = 1e-12
    upper = 1.0 / access_probability + 1.0
    if excess(lower) <= 0:
        return 0.0
    mean_neighbors = bisect(excess, lower, upper, xtol=1e-300, rtol=MAP_RELATIVE_TOLERANCE, maxiter=500)
    radius = math.sqrt(mean_neighbors / (intensity * math.pi))
    logger.debug(f"Exclusion radius {radius:.6f} for p_A={access_probability}, lambda_t={intensity}")
    return radius


def exclusion_radius_from_threshold(contention_threshold: float, fading_rate: float, alpha: float) -> float:
    """
    Contention radius D = (mu P_0)^(-1/alpha): the distance at which a fixed
    transmit power 1/mu falls to the carrier-sense threshold P_0.
    """
    if not contention_threshold > 0:
        raise ValueError(f"contention threshold must be positive, got {contention_threshold}")
    return (fading_rate * contention_threshold) ** (-1.0 / alpha)
