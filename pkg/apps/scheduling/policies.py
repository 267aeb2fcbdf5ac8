# apps/scheduling/policies.py - retention policies producing the active transmitter set
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from apps.geometry.index import NeighborIndex
from apps.geometry.points import PointSet

logger = logging.getLogger(__name__)

# Slack for p_A * N landing just below an integer in floating point
RANK_EPSILON = 1e-9


class Policy(str, Enum):
    RANDOM = 'random'
    MATERN = 'matern'
    BIDDING_MATERN = 'bidding_matern'
    BID_ORDERING = 'bid_ordering'

    @property
    def needs_bids(self) -> bool:
        return self in (Policy.BIDDING_MATERN, Policy.BID_ORDERING)

    @property
    def needs_exclusion_radius(self) -> bool:
        return self in (Policy.MATERN, Policy.BIDDING_MATERN)


@dataclass(frozen=True, eq=False)
class MarkAssignment:
    """Contention marks m_x, iid uniform on [0, 1), one per transmitter."""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size and (values.min() < 0 or values.max() > 1):
            raise ValueError("marks must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def sample(cls, count: int, rng: np.random.Generator) -> 'MarkAssignment':
        return cls(rng.random(count))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, transmitter):
        return float(self.values[transmitter])


@dataclass(frozen=True, eq=False)
class RetainedSet:
    """Retention indicator e_x of every potential transmitter under one policy."""
    flags: np.ndarray
    policy: Policy

    def __post_init__(self):
        flags = np.array(self.flags, dtype=bool).reshape(-1)
        flags.setflags(write=False)
        object.__setattr__(self, 'flags', flags)
        object.__setattr__(self, 'policy', Policy(self.policy))

    def __len__(self):
        return len(self.flags)

    def __contains__(self, transmitter):
        return bool(self.flags[transmitter])

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.flags)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.flags))

    @property
    def fraction(self) -> float:
        """Share of potential transmitters retained; 0 when there are none."""
        if len(self.flags) == 0:
            return 0.0
        return self.count / len(self.flags)


def _check_access_probability(access_probability):
    if not 0 <= access_probability <= 1:
        raise ValueError(f"access probability must be in [0, 1], got {access_probability}")


def _check_lengths(transmitters, *columns):
    for column in columns:
        if len(column) != len(transmitters):
            raise ValueError(f"{len(column)} values for {len(transmitters)} transmitters")


def thin_random(transmitters: PointSet, access_probability: float,
                rng: Optional[np.random.Generator] = None,
                marks: Optional[MarkAssignment] = None) -> RetainedSet:
    """
    Independent activation: e_x = 1(m_x < p_A).

    Uses ``marks`` when given, otherwise draws fresh marks from ``rng``.
    """
    _check_access_probability(access_probability)
    if marks is None:
        if rng is None:
            raise ValueError("thin_random needs either marks or a random stream")
        marks = MarkAssignment.sample(len(transmitters), rng)
    _check_lengths(transmitters, marks)
    return RetainedSet(marks.values < access_probability, Policy.RANDOM)


def _wins_neighborhood(transmitters, exclusion_radius, beats):
    flags = np.ones(len(transmitters), dtype=bool)
    if exclusion_radius == 0 or len(transmitters) < 2:
        return flags
    index = NeighborIndex(transmitters, exclusion_radius)
    for x in transmitters.indices:
        neighbors = index.neighbors(x, exclusion_radius)
        if neighbors:
            flags[x] = beats(x, np.asarray(neighbors))
    return flags


def thin_matern(transmitters: PointSet, marks: MarkAssignment, exclusion_radius: float) -> RetainedSet:
    """
    Matern type II thinning: x is kept iff its mark is strictly the lowest
    among all transmitters within the exclusion radius.
    """
    if exclusion_radius < 0:
        raise ValueError(f"exclusion_radius must be non-negative, got {exclusion_radius}")
    _check_lengths(transmitters, marks)
    values = marks.values
    flags = _wins_neighborhood(
        transmitters, exclusion_radius, lambda x, others: values[x] < values[others].min()
    )
    return RetainedSet(flags, Policy.MATERN)


def thin_bidding_matern(transmitters: PointSet, bids, tiebreak: MarkAssignment,
                        exclusion_radius: float) -> RetainedSet:
    """
    Bid-driven Matern thinning.

    x is kept iff (Bid(x), m_x) is lexicographically greater than the pair
    of every transmitter within the exclusion radius; the mark only decides
    exact bid ties, highest mark winning.

    Args:
        transmitters (PointSet): Potential transmitters
        bids (BidTable): Accumulated bids
        tiebreak (MarkAssignment): Marks used on equal bids
        exclusion_radius (float): D

    Returns:
        RetainedSet: Tagged bidding_matern
    """
    if exclusion_radius < 0:
        raise ValueError(f"exclusion_radius must be non-negative, got {exclusion_radius}")
    _check_lengths(transmitters, bids, tiebreak)
    values = bids.values
    marks = tiebreak.values

    def beats(x, others):
        higher = values[x] > values[others]
        tied = (values[x] == values[others]) & (marks[x] > marks[others])
        return bool(np.all(higher | tied))

    return RetainedSet(_wins_neighborhood(transmitters, exclusion_radius, beats), Policy.BIDDING_MATERN)


def thin_bid_ordering(transmitters: PointSet, bids, access_probability: float,
                      tiebreak: MarkAssignment) -> RetainedSet:
    """
    Keep exactly floor(p_A * N) transmitters, highest (bid, mark) first.
    """
    _check_access_probability(access_probability)
    _check_lengths(transmitters, bids, tiebreak)
    count = len(transmitters)
    keep = min(count, math.floor(access_probability * count + RANK_EPSILON))

    flags = np.zeros(count, dtype=bool)
    if keep > 0:
        # lexsort sorts by the last key first, ascending
        ranking = np.lexsort((tiebreak.values, bids.values))
        flags[ranking[count - keep:]] = True
    return RetainedSet(flags, Policy.BID_ORDERING)


def apply_policy(policy, transmitters: PointSet, access_probability: float, marks: MarkAssignment,
                 bids=None, exclusion_radius: Optional[float] = None) -> RetainedSet:
    """
    Run the named policy on one realization.

    Args:
        policy (Policy or str): random | matern | bidding_matern | bid_ordering
        transmitters (PointSet): Potential transmitters
        access_probability (float): MAP p_A
        marks (MarkAssignment): Contention marks, also the bid tiebreak
        bids (BidTable, optional): Required by the bid-driven policies
        exclusion_radius (float, optional): Required by the Matern policies

    Returns:
        RetainedSet: Retention flags tagged with the policy
    """
    policy = Policy(policy)
    if policy.needs_bids and bids is None:
        raise ValueError(f"policy {policy.value} needs a bid table")
    if policy.needs_exclusion_radius and exclusion_radius is None:
        raise ValueError(f"policy {policy.value} needs an exclusion radius")

    if policy is Policy.RANDOM:
        retained = thin_random(transmitters, access_probability, marks=marks)
    elif policy is Policy.MATERN:
        retained = thin_matern(transmitters, marks, exclusion_radius)
    elif policy is Policy.BIDDING_MATERN:
        retained = thin_bidding_matern(transmitters, bids, marks, exclusion_radius)
    else:
        retained = thin_bid_ordering(transmitters, bids, access_probability, marks)

    logger.debug(f"{policy.value} at p_A={access_probability}: kept {retained.count}/{len(retained)}")
    return retained
