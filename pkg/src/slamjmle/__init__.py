"""Joint maximum likelihood estimation for structured latent attribute models."""

from .adg import ADGEM, ConvergenceWarning
from .datagen import SimConfig, simulate
from .evaluation import accuracy_report, align_columns
from .stage_two import TwoStageSLAM

__all__ = ["ADGEM", "ConvergenceWarning", "SimConfig", "TwoStageSLAM", "accuracy_report", "align_columns", "simulate"]
__version__ = "0.1.0"
