"""Privacy-preserving group membership verification and identification."""
__version__ = "0.1.0"

from .errors import (DegenerateCodeError, EvaluationError, FormatError, GMVError,
                     NumericalFailureError, ParameterError)
from .ternary import embed, reconstruct_unit, ternarize
from .procrustes import orthogonal_procrustes
from .model import GroupModel, GroupPartition, load_model, save_model
from .aoe import learn_aoe
from .eoa import learn_eoa
from .baseline import baseline_aoe_enroll, baseline_eoa_enroll
from .data import gen_synthetic, load_descriptors, partition_groups, save_descriptors, split_queries
from .evaluation import evaluate, verify_curve

__all__ = [
    "GMVError", "ParameterError", "DegenerateCodeError", "NumericalFailureError",
    "EvaluationError", "FormatError", "ternarize", "embed", "reconstruct_unit",
    "orthogonal_procrustes", "GroupModel", "GroupPartition", "load_model", "save_model",
    "learn_aoe", "learn_eoa", "baseline_aoe_enroll", "baseline_eoa_enroll", "gen_synthetic",
    "load_descriptors", "partition_groups", "save_descriptors", "split_queries", "evaluate",
    "verify_curve",
]
