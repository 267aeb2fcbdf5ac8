# apps/core/config.py - experiment configuration consumed by the engine
import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from apps.bidding.bids import ScoringMode
from apps.channel.params import ChannelParams
from apps.content.catalog import zipf_pmf
from apps.geometry.points import Window
from apps.scheduling.policies import Policy

# Grid points closer than this to the stop value are still included
GRID_TOLERANCE = 1e-9

RANGE_MODES = ('noise_limited', 'interference_limited', 'fixed')


def parse_pa_grid(text) -> Tuple[float, ...]:
    """
    Parse a MAP grid given as ``start:stop:step`` (stop included) or as a
    comma separated list.

    Examples:
        '0.1:1.0:0.1' -> (0.1, 0.2, ..., 1.0)
        '0.2, 0.5'    -> (0.2, 0.5)
    """
    if isinstance(text, (list, tuple)):
        values = [float(value) for value in text]
    elif ':' in str(text):
        parts = str(text).split(':')
        if len(parts) != 3:
            raise ValueError(f"grid range must be start:stop:step, got '{text}'")
        start, stop, step = (float(part) for part in parts)
        if not step > 0:
            raise ValueError(f"grid step must be positive, got {step}")
        if stop < start:
            raise ValueError(f"grid stop {stop} is below start {start}")
        count = math.floor((stop - start) / step + GRID_TOLERANCE) + 1
        # Rounding turns 0.30000000000000004 back into 0.3
        values = [round(start + i * step, 12) for i in range(count)]
    else:
        values = [float(part) for part in str(text).split(',') if part.strip()]

    if not values:
        raise ValueError("grid must contain at least one value")
    if any(not np.isfinite(value) for value in values):
        raise ValueError("grid values must be finite")
    if len(set(values)) != len(values):
        raise ValueError("grid values must be distinct")
    return tuple(values)


def format_pa_grid(values) -> str:
    return ', '.join(repr(float(value)) for value in values)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated experiment parameters. Defaults reproduce the skewed
    performance-evaluation setting.
    """
    x_min: float = -5.0
    x_max: float = 5.0
    y_min: float = -5.0
    y_max: float = 5.0
    boundary_mode: str = 'plain'
    tx_intensity: float = 3.0
    rx_intensity: float = 3.0
    catalog_size: int = 100
    cache_size: int = 10
    request_skew: float = 5.0
    placement_skew: float = 2.5
    path_loss_exponent: float = 4.0
    fading_rate: float = 1.0
    noise_power: float = 10.0
    sinr_threshold: float = 0.01
    bandwidth: float = 1.0
    range_mode: str = 'noise_limited'
    comm_radius: Optional[float] = None
    contention_threshold: Optional[float] = None
    scoring_mode: str = ScoringMode.EXACT.value
    policies: Tuple[str, ...] = tuple(policy.value for policy in Policy)
    pa_grid: Tuple[float, ...] = field(default_factory=lambda: parse_pa_grid('0.1:1.0:0.1'))
    realizations: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'policies', tuple(Policy(p).value for p in self.policies))
        object.__setattr__(self, 'pa_grid', tuple(float(p) for p in self.pa_grid))

    @cached_property
    def window(self) -> Window:
        return Window(self.x_min, self.x_max, self.y_min, self.y_max, self.boundary_mode)

    @cached_property
    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            alpha=self.path_loss_exponent,
            fading_rate=self.fading_rate,
            noise_power=self.noise_power,
            threshold=self.sinr_threshold,
            bandwidth=self.bandwidth,
        )

    @cached_property
    def request_pmf(self):
        return zipf_pmf(self.request_skew, self.catalog_size)

    @cached_property
    def placement_pmf(self):
        return zipf_pmf(self.placement_skew, self.catalog_size)

    @property
    def policy_list(self) -> Tuple[Policy, ...]:
        return tuple(Policy(p) for p in self.policies)

    def replace(self, **changes) -> 'ExperimentConfig':
        return replace(self, **changes)

    def to_dict(self) -> dict:
        """JSON-safe payload, the form shipped to workers."""
        data = asdict(self)
        data['policies'] = list(self.policies)
        data['pa_grid'] = list(self.pa_grid)
        return data

    @classmethod
    def from_dict(cls, data) -> 'ExperimentConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(**data)


DEFAULTS = ExperimentConfig().to_dict()
