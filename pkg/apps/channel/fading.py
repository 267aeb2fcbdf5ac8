import logging
import math

import numpy as np

from .analytics import path_loss
from .params import ChannelParams

logger = logging.getLogger(__name__)


def realized_sinr(receiver: int, server: int, retained, realization, params: ChannelParams,
                  rng: np.random.Generator) -> float:
    """
    SINR of one receiver served by a retained transmitter under Rayleigh fading.

    Every retained transmitter other than the server interferes. Fades are
    drawn fresh, one exponential (mean 1/mu) per link and per call.

    Args:
        receiver (int): Receiver index u
        server (int): Serving transmitter index x, must be retained
        retained (RetainedSet): Active transmitters
        realization (SpatialRealization): Snapshot holding both point sets
        params (ChannelParams): Link budget
        rng (Generator): Fading stream

    Returns:
        float: SINR; infinite when there is neither noise nor interference
    """
    if not retained.flags[server]:
        raise ValueError(f"transmitter {server} is not retained")

    active = np.flatnonzero(retained.flags)
    distances = realization.window.distance(
        realization.transmitters.coordinates[active], realization.receivers[receiver]
    )
    gains = rng.exponential(1.0 / params.fading_rate, size=active.size) * path_loss(
        np.atleast_1d(distances), params.alpha
    )
    serving = active == server
    signal = float(gains[serving][0])
    interference = float(gains[~serving].sum())
    denominator = params.noise_power + interference
    if denominator == 0:
        return math.inf
    return signal / denominator


def monte_carlo_coverage(r: float, intensity: float, params: ChannelParams, trials: int,
                         rng: np.random.Generator, outer_radius: float = 20.0,
                         batch_size: int = 2000) -> float:
    """
    Empirical P[SINR > T] for a receiver at distance r from its transmitter.

    Interferers form a PPP of the given intensity on the annulus between r and
    ``outer_radius`` around the receiver, redrawn with the fades in every
    trial. This is the conditional setting of coverage_probability.
    """
    if not 0 < r < outer_radius:
        raise ValueError(f"need 0 < r < outer_radius, got r={r}, outer_radius={outer_radius}")

    annulus_area = math.pi * (outer_radius ** 2 - r ** 2)
    covered = 0
    done = 0
    while done < trials:
        batch = min(batch_size, trials - done)
        counts = rng.poisson(intensity * annulus_area, size=batch)
        owners = np.repeat(np.arange(batch), counts)
        # Uniform on the annulus: radius by inverse transform on r^2
        radii = np.sqrt(rng.uniform(r ** 2, outer_radius ** 2, size=owners.size))
        fades = rng.exponential(1.0 / params.fading_rate, size=owners.size)
        interference = np.bincount(owners, weights=fades * path_loss(radii, params.alpha), minlength=batch)

        signal = rng.exponential(1.0 / params.fading_rate, size=batch) * path_loss(r, params.alpha)
        sinr = signal / (params.noise_power + interference)
        covered += int(np.count_nonzero(sinr > params.threshold))
        done += batch

    logger.debug(f"Monte Carlo coverage at r={r}: {covered}/{trials}")
    return covered / trials
