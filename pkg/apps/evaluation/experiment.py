# apps/evaluation/experiment.py - Monte Carlo cells and MAP sweeps
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from apps.scheduling.policies import Policy

from .metrics import MetricsReport, MetricsRow, RealizationOutcome, aggregate
from .tasks import simulate_realization

logger = logging.getLogger(__name__)


def cell_seeds(seed: int, policies: Sequence, grid: Sequence[float]) -> Dict[Tuple[str, float], int]:
    """
    Independent sub-seed of every (policy, p_A) cell, derived from the
    master seed in policy-major order.
    """
    cells = [(Policy(policy).value, float(p)) for policy in policies for p in grid]
    if len(set(cells)) != len(cells):
        raise ValueError("every (policy, p_A) cell must appear once")
    children = np.random.SeedSequence(seed).spawn(len(cells))
    return {
        cell: int(child.generate_state(1, dtype=np.uint64)[0])
        for cell, child in zip(cells, children)
    }


def run_experiment(config, policy, access_probability: float, n_realizations: Optional[int] = None,
                   seed: Optional[int] = None) -> MetricsRow:
    """
    Monte Carlo estimate of one (policy, p_A) cell.

    Realizations are dispatched as Celery tasks (run in-process when tasks
    are eager) and collected in index order, so the row only depends on the
    seed.

    Args:
        config (ExperimentConfig): Validated configuration
        policy (str or Policy): Retention policy
        access_probability (float): MAP p_A
        n_realizations (int, optional): Defaults to config.realizations
        seed (int, optional): Cell seed, defaults to config.seed

    Returns:
        MetricsRow: Aggregated statistics
    """
    policy = Policy(policy)
    n_realizations = config.realizations if n_realizations is None else n_realizations
    seed = config.seed if seed is None else seed
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be at least 1, got {n_realizations}")

    payload = config.to_dict()
    pending = [
        simulate_realization.delay(payload, policy.value, access_probability, seed, index)
        for index in range(n_realizations)
    ]
    outcomes = [RealizationOutcome.from_dict(result.get()) for result in pending]

    row = aggregate(policy.value, access_probability, outcomes)
    logger.info(
        f"{policy.value} p_A={access_probability}: mean rate {row.mean_rate:.5f} "
        f"(+/- {row.stderr:.5f}), served {row.served_fraction:.3f}, "
        f"served-only rate {row.served_rate:.5f}, kept {row.retained_fraction:.3f}"
    )
    return row


def sweep(config, policies=None, grid=None) -> MetricsReport:
    """
    Run every (policy, p_A) cell, policies outermost.

    Each cell gets its own sub-seed of the master seed.
    """
    policies = [Policy(p) for p in (policies or config.policies)]
    grid = list(config.pa_grid if grid is None else grid)
    if not grid:
        raise ValueError("p_A grid must not be empty")

    seeds = cell_seeds(config.seed, policies, grid)
    report = MetricsReport()
    for policy in policies:
        for access_probability in grid:
            seed = seeds[(policy.value, float(access_probability))]
            report.append(run_experiment(config, policy, float(access_probability), seed=seed))
    logger.info(f"Sweep finished: {len(report)} cells, {config.realizations} realizations each")
    return report
