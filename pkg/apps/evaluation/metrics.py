# apps/evaluation/metrics.py - per-user rates and Monte Carlo aggregation
import logging
import math
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np
from scipy import stats

from apps.channel.fading import realized_sinr

logger = logging.getLogger(__name__)


def user_rate(receiver: int, association, retained, realization, params, rng: np.random.Generator) -> float:
    """
    Rate of one receiver: (W / N~) log2(1 + SINR) when SINR >= T, else 0.

    Unserved receivers get 0. With zero noise and no interferer the SINR,
    and so the rate, is infinite.
    """
    server = association.server(receiver)
    if server is None:
        return 0.0
    sinr = realized_sinr(receiver, server, retained, realization, params, rng)
    if sinr < params.threshold:
        return 0.0
    return params.bandwidth / association.load(server) * math.log2(1.0 + sinr)


def load_pmf(mean_receivers: float, k: int) -> float:
    """
    Zero-truncated Poisson P(N~ = k | N~ > 0) for a cell holding
    ``mean_receivers`` receivers on average.
    """
    if not mean_receivers > 0:
        raise ValueError(f"mean number of receivers must be positive, got {mean_receivers}")
    if k < 1:
        raise ValueError(f"load is conditioned on at least one receiver, got k={k}")
    return float(stats.poisson.pmf(k, mean_receivers) / -math.expm1(-mean_receivers))


def load_nonempty_probability(mean_receivers: float) -> float:
    """P(N~ > 0) = 1 - exp(-Lambda_r)."""
    return -math.expm1(-mean_receivers)


def mean_cell_receivers(rx_intensity: float, comm_radius: float) -> float:
    return rx_intensity * math.pi * comm_radius ** 2


@dataclass(frozen=True)
class RealizationOutcome:
    """
    Statistics of one realization.

    ``mean_load`` and ``served_rate`` are None when no transmitter carries
    load (nobody is served).
    """
    index: int
    mean_rate: float
    served_fraction: float
    retained_fraction: float
    mean_load: Optional[float]
    served_rate: Optional[float]
    n_receivers: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data) -> 'RealizationOutcome':
        return cls(**data)


@dataclass(frozen=True)
class MetricsRow:
    """
    One (policy, p_A) cell of a sweep.

    ``served_rate`` is the mean rate over served receivers only; it is logged
    but not part of the CSV layout, so rows read back from a report lack it.
    """
    policy: str
    access_probability: float
    mean_rate: float
    stderr: float
    served_fraction: float
    mean_load: float
    retained_fraction: float
    n_realizations: int
    served_rate: Optional[float] = None


def _mean_defined(values) -> float:
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else 0.0


def aggregate(policy: str, access_probability: float, outcomes: List[RealizationOutcome]) -> MetricsRow:
    """
    Pool independent realizations into a report row.

    The standard error is the sample standard deviation of the per-realization
    mean rates over sqrt(n); it is 0 for a single realization.
    """
    if not outcomes:
        raise ValueError("cannot aggregate zero realizations")
    rates = np.array([outcome.mean_rate for outcome in outcomes])
    n = len(rates)
    stderr = float(rates.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MetricsRow(
        policy=policy,
        access_probability=access_probability,
        mean_rate=float(rates.mean()),
        stderr=stderr,
        served_fraction=float(np.mean([outcome.served_fraction for outcome in outcomes])),
        mean_load=_mean_defined([outcome.mean_load for outcome in outcomes]),
        retained_fraction=float(np.mean([outcome.retained_fraction for outcome in outcomes])),
        n_realizations=n,
        served_rate=_mean_defined([outcome.served_rate for outcome in outcomes]),
    )


class MetricsReport:
    """Ordered collection of sweep rows, one per (policy, p_A) cell."""

    def __init__(self, rows=None):
        self.rows = list(rows or [])

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def append(self, row: MetricsRow):
        self.rows.append(row)

    def policies(self) -> List[str]:
        return list(dict.fromkeys(row.policy for row in self.rows))

    def for_policy(self, policy) -> List[MetricsRow]:
        policy = getattr(policy, 'value', policy)
        return [row for row in self.rows if row.policy == policy]

    def row(self, policy, access_probability) -> Optional[MetricsRow]:
        for row in self.for_policy(policy):
            if math.isclose(row.access_probability, access_probability, abs_tol=1e-12):
                return row
        return None


@dataclass(frozen=True)
class PolicyComparison:
    """Mean-rate gap of a challenger policy over a baseline at one p_A."""
    access_probability: float
    gap: float
    pooled_stderr: float
    relative_gain: Optional[float]

    @property
    def z_score(self) -> float:
        if self.pooled_stderr == 0:
            return math.inf if self.gap > 0 else (-math.inf if self.gap < 0 else 0.0)
        return self.gap / self.pooled_stderr

    def is_significant(self, sigmas: float = 2.0) -> bool:
        return self.z_score > sigmas


def compare_policies(report: MetricsReport, baseline, challenger) -> List[PolicyComparison]:
    """
    Gap in mean rate between two policies at every p_A both were run at.

    Args:
        report (MetricsReport): Sweep output
        baseline (str or Policy): Reference policy
        challenger (str or Policy): Policy expected to do better

    Returns:
        list: One PolicyComparison per shared p_A, in the challenger's order
    """
    comparisons = []
    for row in report.for_policy(challenger):
        reference = report.row(baseline, row.access_probability)
        if reference is None:
            continue
        gap = row.mean_rate - reference.mean_rate
        relative = gap / reference.mean_rate if reference.mean_rate > 0 else None
        comparisons.append(PolicyComparison(
            access_probability=row.access_probability,
            gap=gap,
            pooled_stderr=math.hypot(row.stderr, reference.stderr),
            relative_gain=relative,
        ))
    return comparisons
