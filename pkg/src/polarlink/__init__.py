"""Polarization-aware movable-antenna link simulator and sum-rate optimizer."""

__version__ = "0.1.0"

from .channel import (ChannelMatrix, channel_matrix, element_gain, matching_efficiency,
                      radiation_factor, reflection_coefficients)
from .geometry import (AntennaPose, SphericalAngles, cartesian_to_spherical,
                       emission_angle, incident_angle, polarization_direction,
                       polarization_matching_angle, receiver_normal,
                       spherical_to_cartesian, transmitted_angle)
from .harness import (RunRecord, Scenario, make_scenario, monte_carlo_half_energy,
                      run_configuration, sweep)
from .medium import MediumParams
from .mimo import (BeamformingSolution, LinkMetrics, Precoder, PowerAllocation,
                   link_metrics, solve_beamforming, water_filling, zf_precoder)
from .optimizer import (Constraints, ConvergenceTrace, LayoutVariables, OptimizerConfig,
                        OptimizeResult, objective, optimize, quantize_angles,
                        separation_projection)

__all__ = [
    "AntennaPose", "BeamformingSolution", "ChannelMatrix", "Constraints",
    "ConvergenceTrace", "LayoutVariables", "LinkMetrics", "MediumParams",
    "OptimizeResult", "OptimizerConfig", "PowerAllocation", "Precoder",
    "RunRecord", "Scenario", "SphericalAngles", "cartesian_to_spherical",
    "channel_matrix", "element_gain", "emission_angle", "incident_angle",
    "link_metrics", "make_scenario", "matching_efficiency", "monte_carlo_half_energy",
    "objective", "optimize", "polarization_direction", "polarization_matching_angle",
    "quantize_angles", "radiation_factor", "receiver_normal", "reflection_coefficients",
    "run_configuration", "separation_projection", "solve_beamforming",
    "spherical_to_cartesian", "sweep", "transmitted_angle", "water_filling",
    "zf_precoder",
]
