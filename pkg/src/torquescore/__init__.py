"""Motion difficulty scoring from perturbation-induced torque sensitivity."""

__version__ = "0.1.0"

from .difficulty import DifficultyBreakdown, DiversityWeights, compute_mds  # noqa: E402
from .motion import Clip, MotionSequence, estimate_derivatives, load_motion, partition_clips  # noqa: E402
from .perturbation import PerturbationConfig, StackedJacobian, sequence_jacobians  # noqa: E402
from .rigidbody import (  # noqa: E402
    GeneralizedState,
    JointSpec,
    KinematicModel,
    bias_term,
    default_humanoid,
    forward_kinematics,
    inverse_dynamics,
    load_model,
    mass_matrix,
)

__all__ = [
    "Clip",
    "DifficultyBreakdown",
    "DiversityWeights",
    "GeneralizedState",
    "JointSpec",
    "KinematicModel",
    "MotionSequence",
    "PerturbationConfig",
    "StackedJacobian",
    "bias_term",
    "compute_mds",
    "default_humanoid",
    "estimate_derivatives",
    "forward_kinematics",
    "inverse_dynamics",
    "load_model",
    "load_motion",
    "mass_matrix",
    "partition_clips",
    "sequence_jacobians",
]
