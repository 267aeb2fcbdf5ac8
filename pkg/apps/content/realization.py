from dataclasses import dataclass
from typing import Tuple

from apps.geometry.points import PointSet, Window

from .catalog import CacheConfig, Catalog, RequestAssignment


@dataclass(frozen=True, eq=False)
class SpatialRealization:
    """
    One network snapshot: potential transmitters with their caches and
    receivers with their requests.
    """
    transmitters: PointSet
    receivers: PointSet
    catalog: Catalog
    caches: Tuple[CacheConfig, ...]
    requests: RequestAssignment

    def __post_init__(self):
        if len(self.caches) != len(self.transmitters):
            raise ValueError(
                f"{len(self.caches)} cache configurations for {len(self.transmitters)} transmitters"
            )
        if len(self.requests) != len(self.receivers):
            raise ValueError(
                f"{len(self.requests)} requests for {len(self.receivers)} receivers"
            )

    @property
    def window(self) -> Window:
        return self.transmitters.window

    def caches_request(self, transmitter: int, receiver: int) -> bool:
        """Cache-hit condition c_u in C_x."""
        return self.requests[receiver] in self.caches[transmitter]

    def link_distance(self, transmitter: int, receiver: int) -> float:
        return self.window.distance(self.transmitters[transmitter], self.receivers[receiver])
