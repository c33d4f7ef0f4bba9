"""Partial-information bounds and disentanglement metrics for latent representations."""
from .attacks import AttackConfig, AttackKind, attack_dataset, redundancy_attack, reflection_matrix, synergy_attack
from .classic import InterventionConfig, betavae_metric, factorvae_metric
from .dataset import AnnotatedDataset, FactorSpec, build_dataset, factor_entropy, read_jsonl, write_jsonl
from .estimator import (
    MIEstimate,
    MITable,
    brute_force_mi,
    estimate_latent_mi,
    estimate_mi,
    estimate_mi_table,
    quadrature_mi_1d,
)
from .pid import PIDBounds, aggregate_pid, interaction_information, mig, pid_bounds, unibound
from .prob import (
    Categorical,
    Continuous,
    DiagGaussian,
    FullGaussian,
    LatentLayout,
    Mixed,
    VariableSubset,
    block_det_inv,
    gaussian_entropy,
    log_marginal_density,
    sample_posterior,
)
from .report import EvaluationRequest, evaluate, sweep
from .synth import SyntheticSpec, synthesize
from .toy import ToyConfig, toy_attacked_pid, toy_consistency_check, toy_mi_terms, toy_scores

__version__ = "0.1.0"
