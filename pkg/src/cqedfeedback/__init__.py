"""Two-excitation coherent feedback in waveguide cavity QED.

Modules:
    core: parameters, mode grids, amplitude state and norm.
    continuous: full integro-differential and reduced delay models.
    analytic: transfer functions, closed forms, steady state, regimes.
    discrete: periodic-comb coupling scheme and mode-coupling ratios.
    entanglement: Schmidt analysis of the two-photon amplitude.
    presets, cli: scenario definitions and the command-line driver.
"""

from .core import (AmplitudeState, ContinuousModeGrid, DiscreteModeSet, PhysicalParams,
                   TimeSeriesRecord, derive_params, initial_state, symmetrize_check, total_norm)

__all__ = [
    "AmplitudeState",
    "ContinuousModeGrid",
    "DiscreteModeSet",
    "PhysicalParams",
    "TimeSeriesRecord",
    "derive_params",
    "initial_state",
    "symmetrize_check",
    "total_norm",
]

__version__ = "0.1.0"
