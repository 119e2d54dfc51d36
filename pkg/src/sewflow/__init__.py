"""Mean-field particle simulation of law-dependent jump SDEs with
Wasserstein-space sewing diagnostics."""

from .measures import EmpiricalMeasure, InitialLawSpec, MeasureStats, moment_norm, sample_initial
from .model import AttractD, Linear1D, builtin_model, gaussian_increment, poisson_step_noise, verify_model_consistency
from .noise import CanonicalNoise
from .partitions import (
    Partition,
    dyadic_partition,
    eta_project,
    gamma_iterate,
    gamma_refine,
    is_simple_subpartition,
    lambda_coarsen,
    lambda_iterate,
    project_partition,
)
from .scheme import Ensemble, LawFlow, compose_scheme, dyadic_scheme, euler_step, law_input_sde, reference_flow, run_levels
from .wasserstein import CouplingPlan, coupled_distance, coupling_map_apply, optimal_plan, w_distance

__version__ = "0.1.0"
