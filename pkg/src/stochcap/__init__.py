"""Stochastic highway capacity from censored traffic-flow observations."""

from .aggregate import aggregate_minutes, rolling_intervals
from .classify import classify, classify_detailed
from .ingest import filter_events, parse_events, pce_of
from .estimate import (EstimationError, OptimizerConfig, fit_mle, log_likelihood, plm_estimate,
                       survival_to_cdf, weibull_cdf)
from .model import (ClassifierConfig, CfbCurve, ErrorReport, Observation, ObservationSet,
                    StepSurvivalFunction, WeibullParams)
from .simulate import (DemandConfig, sample_times_to_breakdown, simulate_time_to_breakdown,
                       synth_observations)
from .transform import (breakdown_prob_over, capacity_at_probability, compare_scenarios,
                        survival_prob_over, time_to_breakdown_stats)
from .validate import compare_methods, empirical_cfb, error_metrics, exposure_histogram, predicted_cfb

__version__ = "0.1.0"
