from ekf.filter import (
    FilterParams, TrackCount, NavState, Observation, init, propagate, initialize_feature, predict_measurement,
    measurement_jacobian, update, back_project, measure_from_match, position_marginal, feature_marginal,
    observations_for_update, marginalize_features, marginalize_stale,
)

__all__ = [
    'FilterParams', 'TrackCount', 'NavState', 'Observation', 'init', 'propagate', 'initialize_feature',
    'predict_measurement', 'measurement_jacobian', 'update', 'back_project', 'measure_from_match',
    'position_marginal', 'feature_marginal', 'observations_for_update', 'marginalize_features',
    'marginalize_stale',
]
