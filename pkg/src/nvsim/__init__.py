"""nvsim: NV-ensemble simulator for optically induced effective magnetic fields.

Library modules: optics (polarization + field/absorption models), spindyn
(Bloch-vector evolution), bath (decoherence models), pulseseq (sequence IR
and engines), readout (photon statistics and the field estimator), fitkit
(nonlinear least squares), config/cli (experiment runner).
"""

__version__ = "0.1.0"

from .bath import BathConfig, OUConfig
from .optics import BeamSpec, EffectiveFieldModel, JonesVector
from .pulseseq import (Sequence, SimConfig, build_beff, build_double_psd,
                       build_hahn, build_rabi, simulate)
from .readout import ReadoutConfig, estimate_beff, sensitivity
from .spindyn import BlochState, Constants

__all__ = [
    "__version__", "BathConfig", "OUConfig", "BeamSpec", "EffectiveFieldModel",
    "JonesVector", "Sequence", "SimConfig", "build_beff", "build_double_psd",
    "build_hahn", "build_rabi", "simulate", "ReadoutConfig", "estimate_beff",
    "sensitivity", "BlochState", "Constants",
]
