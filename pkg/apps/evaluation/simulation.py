# apps/evaluation/simulation.py - one realization from sampling to per-user rates
import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from apps.bidding.bids import BidTable, compute_bid_table
from apps.channel.params import RangePair
from apps.content.realization import SpatialRealization
from apps.scheduling.policies import MarkAssignment, Policy, RetainedSet, apply_policy

from .association import associate
from .metrics import RealizationOutcome, user_rate
from .realization import realization_streams, resolve_ranges, sample_realization

logger = logging.getLogger(__name__)


def _bids(config, realization, ranges, access_probability) -> BidTable:
    active_intensity = access_probability * config.tx_intensity
    return compute_bid_table(
        realization, ranges.comm_radius, active_intensity, config.channel_params, config.scoring_mode
    )


def simulate(config, policy, access_probability: float, seed: int, index: int) -> RealizationOutcome:
    """
    Evaluate one realization of a (policy, p_A) cell.

    Samples the snapshot, resolves R_d2d and D, collects bids when the
    policy uses them, thins, associates and draws one fade per link.

    Returns:
        RealizationOutcome: Per-user mean rate with unserved receivers
        counted as 0, plus served and retained fractions
    """
    if not config.noise_power > 0:
        raise ValueError(f"rate evaluation needs noise_power > 0, got {config.noise_power}")
    policy = Policy(policy)
    streams = realization_streams(seed, index)
    realization = sample_realization(config, streams)
    ranges = resolve_ranges(config, policy, access_probability)
    marks = MarkAssignment.sample(len(realization.transmitters), streams['marks'])
    bids = _bids(config, realization, ranges, access_probability) if policy.needs_bids else None

    retained = apply_policy(policy, realization.transmitters, access_probability, marks, bids,
                            ranges.exclusion_radius)
    association = associate(realization, retained, ranges.comm_radius)
    params = config.channel_params
    rates = np.array([
        user_rate(u, association, retained, realization, params, streams['fading'])
        for u in realization.receivers.indices
    ])

    n_receivers = len(rates)
    served = association.served
    loaded = association.loads[association.loads > 0]
    outcome = RealizationOutcome(
        index=index,
        mean_rate=float(rates.mean()) if n_receivers else 0.0,
        served_fraction=float(served.mean()) if n_receivers else 0.0,
        retained_fraction=retained.fraction,
        mean_load=float(loaded.mean()) if loaded.size else None,
        served_rate=float(rates[served].mean()) if served.any() else None,
        n_receivers=n_receivers,
    )
    logger.debug(
        f"{policy.value} p_A={access_probability} #{index}: {len(realization.transmitters)} tx, "
        f"{n_receivers} rx, kept {retained.count}, mean rate {outcome.mean_rate:.4f}"
    )
    return outcome


@dataclass(frozen=True, eq=False)
class Snapshot:
    """One realization with the retention of every configured policy."""
    realization: SpatialRealization
    access_probability: float
    marks: MarkAssignment
    bids: BidTable
    retained: Dict[str, RetainedSet]
    ranges: Dict[str, RangePair]


def build_snapshot(config, access_probability: float, seed: int, index: int = 0,
                   policies: Optional[tuple] = None) -> Snapshot:
    """
    Realization ``index`` of a cell seed with bids and every policy's flags.

    The realization, marks and bids are the ones simulate() sees for the same
    seed and index.
    """
    streams = realization_streams(seed, index)
    realization = sample_realization(config, streams)
    marks = MarkAssignment.sample(len(realization.transmitters), streams['marks'])

    # R_d2d does not depend on the policy
    bids = _bids(config, realization, resolve_ranges(config, Policy.RANDOM, access_probability),
                 access_probability)

    retained, ranges = {}, {}
    for policy in (policies or config.policy_list):
        policy = Policy(policy)
        pair = resolve_ranges(config, policy, access_probability)
        ranges[policy.value] = pair
        retained[policy.value] = apply_policy(
            policy, realization.transmitters, access_probability, marks, bids, pair.exclusion_radius
        )
    return Snapshot(realization, access_probability, marks, bids, retained, ranges)
