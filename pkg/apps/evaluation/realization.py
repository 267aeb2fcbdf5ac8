# apps/evaluation/realization.py - seeded sampling of one network snapshot
import logging
from typing import Dict

import numpy as np

from apps.channel.analytics import (
    comm_range, exclusion_radius_from_map, exclusion_radius_from_threshold
)
from apps.channel.params import RangePair, RangeRegime
from apps.content.catalog import sample_caches, sample_requests
from apps.content.realization import SpatialRealization
from apps.geometry.points import sample_ppp
from apps.scheduling.policies import Policy

logger = logging.getLogger(__name__)

# One independent stream per sampling stage, in this order
STREAMS = ('transmitters', 'receivers', 'caches', 'requests', 'marks', 'fading')


def realization_streams(seed: int, index: int) -> Dict[str, np.random.Generator]:
    """
    Random streams of realization ``index`` under a cell seed.

    Streams depend only on (seed, index), so realizations can run in any
    order or process and still reproduce.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return {
        name: np.random.default_rng(child)
        for name, child in zip(STREAMS, sequence.spawn(len(STREAMS)))
    }


def sample_realization(config, streams) -> SpatialRealization:
    """
    Draw transmitters, receivers, caches and requests for one snapshot.

    Args:
        config (ExperimentConfig): Densities, window and popularity skews
        streams (dict): Output of realization_streams

    Returns:
        SpatialRealization: The snapshot
    """
    window = config.window
    transmitters = sample_ppp(config.tx_intensity, window, streams['transmitters'])
    receivers = sample_ppp(config.rx_intensity, window, streams['receivers'])
    caches = sample_caches(config.placement_pmf, config.cache_size, len(transmitters), streams['caches'])
    requests = sample_requests(config.request_pmf, receivers, streams['requests'])
    return SpatialRealization(
        transmitters=transmitters,
        receivers=receivers,
        catalog=config.placement_pmf.catalog,
        caches=caches,
        requests=requests,
    )


def resolve_ranges(config, policy, access_probability: float) -> RangePair:
    """
    Communication and exclusion radii of one (policy, p_A) cell.

    D is computed when the policy thins by exclusion or the range regime is
    interference limited; a configured contention threshold fixes it,
    otherwise it is matched to p_A.
    """
    policy = Policy(policy)
    exclusion_radius = None
    if policy.needs_exclusion_radius or config.range_mode == RangeRegime.INTERFERENCE_LIMITED.value:
        if config.contention_threshold is not None:
            exclusion_radius = exclusion_radius_from_threshold(
                config.contention_threshold, config.fading_rate, config.path_loss_exponent
            )
        else:
            exclusion_radius = exclusion_radius_from_map(access_probability, config.tx_intensity)

    if config.range_mode == 'fixed':
        radius = config.comm_radius
    elif config.range_mode == RangeRegime.NOISE_LIMITED.value:
        radius = comm_range(config.channel_params, RangeRegime.NOISE_LIMITED)
    else:
        radius = comm_range(
            config.channel_params, RangeRegime.INTERFERENCE_LIMITED,
            access_probability * config.tx_intensity, exclusion_radius,
        )
    return RangePair(radius, exclusion_radius)
