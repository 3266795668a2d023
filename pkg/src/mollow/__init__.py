"""Coherent nonlinear optics of a single two-level emitter under pump-probe driving."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    BlochState,
    DriveConfig,
    EmitterParams,
    angular_rates,
    generalized_rabi,
    monochromatic_steady_state,
    saturation_parameter,
)
from .floquet import FloquetSolution, floquet_solve, coherence_time_series  # noqa: E402
from .detection import (  # noqa: E402
    DetectionParams,
    SpectrumSeries,
    beat_map,
    dressed_frequencies,
    fwm_power,
    scattered_amplitude,
    switching_contrast,
    transmission_spectrum,
)

__all__ = [
    "BlochState",
    "DetectionParams",
    "DriveConfig",
    "EmitterParams",
    "FloquetSolution",
    "SpectrumSeries",
    "angular_rates",
    "beat_map",
    "coherence_time_series",
    "dressed_frequencies",
    "floquet_solve",
    "fwm_power",
    "generalized_rabi",
    "monochromatic_steady_state",
    "saturation_parameter",
    "scattered_amplitude",
    "switching_contrast",
    "transmission_spectrum",
]
