from django.conf import settings
from rest_framework import serializers

from apps.bidding.bids import ScoringMode
from apps.geometry.points import BoundaryMode
from apps.scheduling.policies import Policy

from .config import DEFAULTS, RANGE_MODES, ExperimentConfig, parse_pa_grid


class AccessGridField(serializers.Field):
    """MAP grid written as start:stop:step or a comma list."""

    default_error_messages = {
        'invalid': 'Invalid grid: {reason}',
        'range': 'Grid values must lie in [0, 1].',
    }

    def to_internal_value(self, data):
        try:
            values = parse_pa_grid(data)
        except ValueError as exc:
            self.fail('invalid', reason=exc)
        if any(not 0 <= value <= 1 for value in values):
            self.fail('range')
        return values

    def to_representation(self, value):
        return list(value)


def positive(name):
    def check(value):
        if value is not None and not value > 0:
            raise serializers.ValidationError(f"{name} must be greater than 0.")
    return check


def realizations_default():
    return settings.D2DSIM_DEFAULT_REALIZATIONS


class ExperimentConfigSerializer(serializers.Serializer):
    """
    Validates a flat experiment document. Every field is optional and falls
    back to the performance-evaluation defaults; ``save()`` returns an
    ExperimentConfig.
    """
    x_min = serializers.FloatField(default=DEFAULTS['x_min'])
    x_max = serializers.FloatField(default=DEFAULTS['x_max'])
    y_min = serializers.FloatField(default=DEFAULTS['y_min'])
    y_max = serializers.FloatField(default=DEFAULTS['y_max'])
    boundary_mode = serializers.ChoiceField(
        choices=[mode.value for mode in BoundaryMode], default=DEFAULTS['boundary_mode']
    )

    tx_intensity = serializers.FloatField(default=DEFAULTS['tx_intensity'], validators=[positive('tx_intensity')])
    rx_intensity = serializers.FloatField(min_value=0, default=DEFAULTS['rx_intensity'])
    catalog_size = serializers.IntegerField(min_value=2, default=DEFAULTS['catalog_size'])
    cache_size = serializers.IntegerField(min_value=1, default=DEFAULTS['cache_size'])
    request_skew = serializers.FloatField(min_value=0, default=DEFAULTS['request_skew'])
    placement_skew = serializers.FloatField(min_value=0, default=DEFAULTS['placement_skew'])

    path_loss_exponent = serializers.FloatField(default=DEFAULTS['path_loss_exponent'])
    fading_rate = serializers.FloatField(default=DEFAULTS['fading_rate'], validators=[positive('fading_rate')])
    noise_power = serializers.FloatField(min_value=0, default=DEFAULTS['noise_power'])
    sinr_threshold = serializers.FloatField(default=DEFAULTS['sinr_threshold'], validators=[positive('sinr_threshold')])
    bandwidth = serializers.FloatField(default=DEFAULTS['bandwidth'], validators=[positive('bandwidth')])

    range_mode = serializers.ChoiceField(choices=RANGE_MODES, default=DEFAULTS['range_mode'])
    comm_radius = serializers.FloatField(
        required=False, allow_null=True, default=None, validators=[positive('comm_radius')]
    )
    contention_threshold = serializers.FloatField(
        required=False, allow_null=True, default=None, validators=[positive('contention_threshold')]
    )
    scoring_mode = serializers.ChoiceField(
        choices=[mode.value for mode in ScoringMode], default=DEFAULTS['scoring_mode']
    )

    policies = serializers.ListField(
        child=serializers.ChoiceField(choices=[policy.value for policy in Policy]),
        allow_empty=False,
        default=DEFAULTS['policies'],
    )
    pa_grid = AccessGridField(default=tuple(DEFAULTS['pa_grid']))
    realizations = serializers.IntegerField(min_value=1, default=realizations_default)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, default=DEFAULTS['seed'])

    def validate_path_loss_exponent(self, value):
        """Finite mean interference needs alpha > 2."""
        if not value > 2:
            raise serializers.ValidationError("path_loss_exponent must be greater than 2.")
        return value

    def validate_policies(self, value):
        # Keep the first occurrence of each policy, in the given order
        return list(dict.fromkeys(value))

    def validate(self, data):
        errors = {}
        if not data['x_max'] > data['x_min']:
            errors['x_max'] = "x_max must be greater than x_min."
        if not data['y_max'] > data['y_min']:
            errors['y_max'] = "y_max must be greater than y_min."
        if data['cache_size'] >= data['catalog_size']:
            errors['cache_size'] = (
                f"N_cache must be < M (N_cache={data['cache_size']}, M={data['catalog_size']})."
            )

        if data['range_mode'] == 'fixed' and data.get('comm_radius') is None:
            errors['comm_radius'] = "comm_radius is required when range_mode is fixed."
        # Without noise a lone server gives an unbounded SINR and rate
        if data['noise_power'] == 0:
            errors['noise_power'] = "noise_power must be greater than 0 for rate evaluation."

        grid = data['pa_grid']
        exclusion_policies = {Policy.MATERN.value, Policy.BIDDING_MATERN.value}
        if exclusion_policies & set(data['policies']) and min(grid) <= 0:
            errors['pa_grid'] = "matern policies need every p_A in (0, 1]."
        elif data['range_mode'] == 'interference_limited' and not all(0 < p < 1 for p in grid):
            errors['pa_grid'] = "interference_limited range needs every p_A in (0, 1)."

        if errors:
            raise serializers.ValidationError(errors)
        return data

    def create(self, validated_data):
        return ExperimentConfig(**validated_data)
