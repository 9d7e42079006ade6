"""Rotary-echo magnetometry toolkit: spin dynamics, noise ensembles,
spectral estimation and sensitivity analysis for a driven two-level sensor."""

__version__ = "0.1.0"

from . import calcium, config, dynamics, models, noise, sensing, spectral, units

__all__ = [
    "__version__",
    "calcium",
    "config",
    "dynamics",
    "models",
    "noise",
    "sensing",
    "spectral",
    "units",
]
