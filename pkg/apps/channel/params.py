from dataclasses import dataclass
from enum import Enum
from typing import Optional


class RangeRegime(str, Enum):
    NOISE_LIMITED = 'noise_limited'
    INTERFERENCE_LIMITED = 'interference_limited'


@dataclass(frozen=True)
class ChannelParams:
    """
    Link budget shared by every transmitter-receiver pair.

    Attributes:
        alpha: Path-loss exponent, l(r) = r^-alpha
        fading_rate: Rate mu of the exponential virtual powers (mean 1/mu)
        noise_power: Receiver noise sigma^2
        threshold: SINR threshold T for a successful transmission
        bandwidth: Effective bandwidth W in Hz
    """
    alpha: float = 4.0
    fading_rate: float = 1.0
    noise_power: float = 10.0
    threshold: float = 0.01
    bandwidth: float = 1.0

    def __post_init__(self):
        if not self.alpha > 2:
            raise ValueError(f"alpha must be greater than 2, got {self.alpha}")
        if not self.fading_rate > 0:
            raise ValueError(f"fading_rate must be positive, got {self.fading_rate}")
        if self.noise_power < 0:
            raise ValueError(f"noise_power must be non-negative, got {self.noise_power}")
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class RangePair:
    """
    Communication radius R_d2d and exclusion radius D of one experiment cell.

    D is None when neither the policy nor the range regime needs it.
    """
    comm_radius: float
    exclusion_radius: Optional[float] = None

    def __post_init__(self):
        if not self.comm_radius > 0:
            raise ValueError(f"comm_radius must be positive, got {self.comm_radius}")
        if self.exclusion_radius is not None and self.exclusion_radius < 0:
            raise ValueError(f"exclusion_radius must be non-negative, got {self.exclusion_radius}")
