"""Representative-scenario prediction for two-stage stochastic programs.

Learn to predict one demand realization per instance such that solving
the small deterministic surrogate for that realization yields a
near-optimal first-stage decision for the full stochastic program.
"""

from .cflp import CflpInstance, GeneratorConfig, generate_instance, to_two_stage
from .evaluation import (ComparisonReport, ExactRecord, MethodResult, build_report,
                         diff_ratio, evaluate_instance, grb_time_to_quality, run_exact)
from .features import FeatureVector, extract_features
from .learn import Dataset, Model, predict, train_ann, train_lr
from .mip import MipProblem, MipSolution, SolverConfig, solve_lp, solve_mip
from .rs_search import ScenarioLabel, SearchConfig, find_representative_scenario
from .two_stage import (FirstStageSolution, ObjectiveEvaluator, Scenario,
                        TwoStageInstance, build_extensive_form, build_surrogate,
                        evaluate_objective)

__version__ = "0.1.0"
