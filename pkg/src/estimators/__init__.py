from .alignment_estimator import (
    AlignmentEstimate,
    AlignmentEstimator,
    BruteForceEstimator,
    MaxLikelihoodEstimator,
    MaxRowEstimator,
    ThresholdEstimator,
    brute_force_ml,
    default_threshold,
    get_estimator,
    max_likelihood,
    max_row,
    threshold_test,
)

__all__ = [
    'AlignmentEstimate',
    'AlignmentEstimator',
    'BruteForceEstimator',
    'MaxLikelihoodEstimator',
    'MaxRowEstimator',
    'ThresholdEstimator',
    'brute_force_ml',
    'default_threshold',
    'get_estimator',
    'max_likelihood',
    'max_row',
    'threshold_test',
]
