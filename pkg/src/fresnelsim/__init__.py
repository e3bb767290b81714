"""Two-dimensional multi-frequency channel simulator built on Fresnel diffraction."""

from .fresnel import SPEED_OF_LIGHT, FresnelPair, fr_term, fresnel_arg, fresnel_cs
from .geometry import Aperture, GeometryError, Point2, Segment
from .propagation import Antenna, FrequencySpec, PathModel, Transmitter
from .scenario import PathSpec, Reflector, RoughnessSpec, Scenario, ScenarioError, load_scenario, read_scenario
from .analysis import ChannelTrace, compute_trace

__all__ = [
    "SPEED_OF_LIGHT", "FresnelPair", "fr_term", "fresnel_arg", "fresnel_cs",
    "Aperture", "GeometryError", "Point2", "Segment",
    "Antenna", "FrequencySpec", "PathModel", "Transmitter",
    "PathSpec", "Reflector", "RoughnessSpec", "Scenario", "ScenarioError", "load_scenario", "read_scenario",
    "ChannelTrace", "compute_trace",
]
