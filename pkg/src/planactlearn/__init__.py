"""Plan, act and learn: online abstract-model learning from continuous perceptions."""
from planactlearn.coherence import estimate_divergence, gaussian_kl, percent_learned
from planactlearn.domain import ExtendedDomain, Histories, PlanningProblem, StateVarSchema, TransitionFn
from planactlearn.learning import LearningParams
from planactlearn.pal import PAL, RunConfig, RunOutcome, run
from planactlearn.perception import GaussianPerception, PerceptionTable
from planactlearn.world import Building, NoiseModel, World, generate_building

__version__ = "0.1.0"

__all__ = [
    "Building",
    "ExtendedDomain",
    "GaussianPerception",
    "Histories",
    "LearningParams",
    "NoiseModel",
    "PAL",
    "PerceptionTable",
    "PlanningProblem",
    "RunConfig",
    "RunOutcome",
    "StateVarSchema",
    "TransitionFn",
    "World",
    "estimate_divergence",
    "gaussian_kl",
    "generate_building",
    "percent_learned",
    "run",
]
