# apps/bidding/bids.py - receiver bids collected by potential transmitters
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Tuple

import numpy as np
from scipy import stats

from apps.channel.analytics import coverage_probability, linearized_coverage
from apps.channel.params import ChannelParams
from apps.content.catalog import CacheConfig, ZipfPmf
from apps.content.realization import SpatialRealization
from apps.geometry.index import NeighborIndex

logger = logging.getLogger(__name__)


class ScoringMode(str, Enum):
    EXACT = 'exact'
    LINEARIZED = 'linearized'


@dataclass(frozen=True, eq=False)
class BidderSet:
    """
    Receivers bidding on one transmitter: in range and requesting a cached file.

    ``receivers``, ``requests`` and ``distances`` are aligned.
    """
    transmitter: int
    receivers: Tuple[int, ...]
    requests: Tuple[int, ...]
    distances: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.receivers)

    def __bool__(self):
        return bool(self.receivers)


@dataclass(frozen=True)
class LocalRequestPmf:
    """Empirical request distribution seen by one transmitter; empty without bidders."""
    probabilities: Mapping[int, float]

    def __call__(self, file_index: int) -> float:
        return self.probabilities.get(file_index, 0.0)

    def __len__(self):
        return len(self.probabilities)

    def total(self) -> float:
        return math.fsum(self.probabilities.values())


@dataclass(frozen=True, eq=False)
class BidTable:
    """Accumulated bid of every potential transmitter, in transmitter order."""
    values: np.ndarray
    mode: ScoringMode = ScoringMode.EXACT

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'mode', ScoringMode(self.mode))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, transmitter):
        return float(self.values[transmitter])


def bidder_set(transmitter: int, realization: SpatialRealization, comm_radius: float,
               index: Optional[NeighborIndex] = None) -> BidderSet:
    """
    Receivers within ``comm_radius`` of the transmitter whose request it caches.

    Args:
        transmitter (int): Potential transmitter x
        realization (SpatialRealization): Snapshot
        comm_radius (float): R_d2d
        index (NeighborIndex, optional): Prebuilt index over the receivers

    Returns:
        BidderSet: Sorted by receiver index
    """
    if not comm_radius > 0:
        raise ValueError(f"comm_radius must be positive, got {comm_radius}")
    if index is None:
        index = NeighborIndex(realization.receivers, comm_radius)

    in_range = index.ball_query(realization.transmitters[transmitter], comm_radius)
    cache = realization.caches[transmitter]
    members = [u for u in in_range if realization.requests[u] in cache]
    distances = np.array([realization.link_distance(transmitter, u) for u in members], dtype=float)
    return BidderSet(
        transmitter=transmitter,
        receivers=tuple(members),
        requests=tuple(realization.requests[u] for u in members),
        distances=distances,
    )


def local_request_pmf(bidders: BidderSet) -> LocalRequestPmf:
    """p_r^x(m) = |U_x(m)| / |U_x| over the bidders' requests."""
    if not bidders:
        return LocalRequestPmf({})
    counts = Counter(bidders.requests)
    return LocalRequestPmf({m: count / len(bidders) for m, count in sorted(counts.items())})


def accumulated_bid(bidders: BidderSet, pmf: LocalRequestPmf, intensity: float,
                    params: ChannelParams, mode=ScoringMode.EXACT) -> float:
    """
    Bid(x): every bidder contributes p_r^x(c_u) times its coverage score.

    The coverage score treats the active transmitters as a PPP of the given
    intensity; ``linearized`` mode uses the clamped first-order score instead.
    """
    if not bidders:
        return 0.0
    mode = ScoringMode(mode)
    score = coverage_probability if mode is ScoringMode.EXACT else linearized_coverage
    coverage = np.atleast_1d(score(bidders.distances, intensity, params))
    weights = np.array([pmf(m) for m in bidders.requests])
    return float(np.dot(weights, coverage))


def compute_bid_table(realization: SpatialRealization, comm_radius: float, intensity: float,
                      params: ChannelParams, mode=ScoringMode.EXACT) -> BidTable:
    index = NeighborIndex(realization.receivers, comm_radius)
    values = np.zeros(len(realization.transmitters))
    for x in realization.transmitters.indices:
        bidders = bidder_set(x, realization, comm_radius, index)
        values[x] = accumulated_bid(bidders, local_request_pmf(bidders), intensity, params, mode)
    logger.debug(f"Bid table over {len(values)} transmitters, {np.count_nonzero(values)} with bidders")
    return BidTable(values, mode)


def bidder_intensity(rx_intensity: float, cache: CacheConfig, request_pmf: ZipfPmf) -> float:
    """Intensity of receivers requesting a file in the cache, lambda_r * p_r(C_x)."""
    return rx_intensity * request_pmf.mass(cache)


def bidder_count_pmf(n: int, intensity: float, comm_radius: float) -> float:
    """P(|U_x| = n): Poisson with mean intensity * pi * R_d2d^2."""
    return float(stats.poisson.pmf(n, intensity * math.pi * comm_radius ** 2))
