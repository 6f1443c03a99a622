"""Byzantine-resilient gradient aggregation, adversaries, and a round-based SGD simulator.

The package has five layers:

* `aggregation`  pure choice functions (Krum, multi-Krum, average, linear
                 combinations, squared-distance medoid) plus the
                 deviation constant eta(n, f) and the resilience angle;
* `adversary`    omniscient Byzantine strategies;
* `problems`     synthetic costs, gradient estimators, learning rates;
* `simulator`    the synchronous parameter-server round loop;
* `resilience`   Monte Carlo verification of the resilience conditions.

`cli` exposes all of it as the `byzgrad` command.
"""

from .aggregation import (AggregationInput, KrumScore, ResilienceAngle, RuleSpec,
                          SelectionResult, apply_rule, as_vector, average, eta,
                          krum_scores, krum_select, linear_combination,
                          multi_krum_select, pairwise_sq_distances, resilience_angle,
                          sq_dist_medoid_select)
from .adversary import (AdversaryView, AttackSpec, apply_attack, collusion_medoid_attack,
                        gaussian_noise_attack, omniscient_linear_attack, sign_flip_attack,
                        silence_attack)
from .errors import (AttackInapplicable, ConfigError, DivergenceDetected, InvalidInput,
                     InvalidSchedule, InvalidView, PreconditionViolation,
                     UnsupportedCombination)
from .problems import (CosineBowl, GaussianEstimator, LeastSquares, MinibatchEstimator,
                       Quadratic, cost, estimate_gradient, local_sigma, lr_schedule,
                       true_gradient)
from .resilience import ResilienceReport, check_safety_radius, estimate_resilience
from .simulator import (ExperimentConfig, ExperimentTrace, RoundRecord, RoundState,
                        run_experiment, run_round)
from .streams import SubstreamSource, substream

__version__ = "0.1.0"

__all__ = [
    "AdversaryView", "AggregationInput", "AttackInapplicable", "AttackSpec",
    "ConfigError", "CosineBowl", "DivergenceDetected", "ExperimentConfig",
    "ExperimentTrace", "GaussianEstimator", "InvalidInput", "InvalidSchedule",
    "InvalidView", "KrumScore", "LeastSquares", "MinibatchEstimator",
    "PreconditionViolation", "Quadratic", "ResilienceAngle", "ResilienceReport",
    "RoundRecord", "RoundState", "RuleSpec", "SelectionResult", "SubstreamSource",
    "UnsupportedCombination", "apply_attack", "apply_rule", "as_vector", "average",
    "check_safety_radius", "collusion_medoid_attack", "cost", "estimate_gradient",
    "estimate_resilience", "eta", "gaussian_noise_attack", "krum_scores", "krum_select",
    "linear_combination", "local_sigma", "lr_schedule", "multi_krum_select",
    "omniscient_linear_attack", "pairwise_sq_distances", "resilience_angle",
    "run_experiment", "run_round", "sign_flip_attack", "silence_attack",
    "sq_dist_medoid_select", "substream", "true_gradient",
]
