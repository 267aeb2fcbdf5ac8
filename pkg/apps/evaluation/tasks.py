from celery import shared_task
import logging

from apps.core.config import ExperimentConfig

from .simulation import simulate

logger = logging.getLogger(__name__)


@shared_task
def simulate_realization(config_data, policy, access_probability, seed, index):
    """
    Evaluate one realization on a worker.

    Args:
        config_data (dict): ExperimentConfig.to_dict() payload
        policy (str): Policy name
        access_probability (float): MAP p_A
        seed (int): Cell seed
        index (int): Realization index

    Returns:
        dict: RealizationOutcome.to_dict()
    """
    try:
        config = ExperimentConfig.from_dict(config_data)
        return simulate(config, policy, access_probability, seed, index).to_dict()
    except Exception as e:
        logger.error(f"Realization {index} of {policy} at p_A={access_probability} failed: {str(e)}")
        raise
