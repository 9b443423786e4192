from sim.config import RunConfig, TrialConfig, build_config, load_config, dump_config, trial_config, steps_for
from sim.trajectory import Truth, circular_speed, circular_segment, generate_trajectory
from sim.trial import StepRecord, TrialResult, TrialStreams, trial_streams, run_trial
from sim.montecarlo import McSummary, Comparison, summarize, run_trials, monte_carlo, compare_profiles

__all__ = [
    'RunConfig', 'TrialConfig', 'build_config', 'load_config', 'dump_config', 'trial_config', 'steps_for',
    'Truth', 'circular_speed', 'circular_segment', 'generate_trajectory',
    'StepRecord', 'TrialResult', 'TrialStreams', 'trial_streams', 'run_trial',
    'McSummary', 'Comparison', 'summarize', 'run_trials', 'monte_carlo', 'compare_profiles',
]
