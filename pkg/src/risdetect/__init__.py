"""Worst-case device activity detection through a reconfigurable intelligent surface."""
from .baseline import QuadraticDesignParams, fit_curvature, quadratic_design
from .channel import ChannelSampler, ChannelStatistics, SystemParams, channel_statistics
from .detection import (detect, detection_probabilities, min_prob_detection,
                        monte_carlo_rates, prob_detection)
from .estimators import GlrtDetector, MinMaxPhaseDesigner, QuadraticPhaseDesigner
from .geometry import CoverageArea, Location, sample_area
from .objectives import ObjectiveKind, approximation_errors, worst_case_objective
from .optimizer import MmConfig, MmTrace, mm_optimize, optimize_design, select_rho
from .ris import PhaseDesign, RisGeometry, reflection_pattern
from .scenario import Scenario
from .special import marcum_q1

__version__ = "0.1.0"

__all__ = [
    "ChannelSampler", "ChannelStatistics", "CoverageArea", "GlrtDetector", "Location",
    "MinMaxPhaseDesigner", "MmConfig", "MmTrace", "ObjectiveKind", "PhaseDesign",
    "QuadraticDesignParams", "QuadraticPhaseDesigner", "RisGeometry", "Scenario",
    "SystemParams", "approximation_errors", "channel_statistics", "detect",
    "detection_probabilities", "fit_curvature", "marcum_q1", "min_prob_detection",
    "mm_optimize", "monte_carlo_rates", "optimize_design", "prob_detection",
    "quadratic_design", "reflection_pattern", "sample_area", "select_rho",
    "worst_case_objective",
]
