import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from apps.geometry.index import NeighborIndex

logger = logging.getLogger(__name__)

UNSERVED = -1


@dataclass(frozen=True, eq=False)
class Association:
    """
    Serving transmitter of every receiver (UNSERVED when none) and the load
    N~ of every transmitter.
    """
    servers: np.ndarray
    loads: np.ndarray

    def server(self, receiver: int) -> Optional[int]:
        server = int(self.servers[receiver])
        return None if server == UNSERVED else server

    def load(self, transmitter: int) -> int:
        return int(self.loads[transmitter])

    @property
    def served(self) -> np.ndarray:
        return self.servers != UNSERVED

    @property
    def served_count(self) -> int:
        return int(np.count_nonzero(self.served))


def associate(realization, retained, comm_radius: float) -> Association:
    """
    Attach every receiver to the nearest retained transmitter within the
    communication radius that caches its requested file.

    Equal distances go to the lower transmitter index.
    """
    n_tx = len(realization.transmitters)
    servers = np.full(len(realization.receivers), UNSERVED, dtype=int)
    if n_tx and retained.count:
        index = NeighborIndex(realization.transmitters, comm_radius)
        for u in realization.receivers.indices:
            eligible = [
                x for x in index.ball_query(realization.receivers[u], comm_radius)
                if retained.flags[x] and realization.caches_request(x, u)
            ]
            if eligible:
                distances = [realization.link_distance(x, u) for x in eligible]
                servers[u] = eligible[int(np.argmin(distances))]

    loads = np.bincount(servers[servers != UNSERVED], minlength=n_tx)
    return Association(servers=servers, loads=loads)
