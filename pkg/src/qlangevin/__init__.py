"""Quantum Langevin equation: response, fluctuations, thermodynamics and simulation."""
__version__ = "0.1.0"

from .bath import BlackbodyRadiation, Ohmic, SingleRelaxation, TabulatedImpedance, make_bath
from .quadrature import QuadratureSpec, SpectralIntegrand, integrate_spectral
from .response import ResponseFunction, SystemConfig
from .units import REDUCED, ThermalState, UnitSystem

__all__ = [
    "BlackbodyRadiation", "Ohmic", "SingleRelaxation", "TabulatedImpedance", "make_bath",
    "QuadratureSpec", "SpectralIntegrand", "integrate_spectral",
    "ResponseFunction", "SystemConfig", "REDUCED", "ThermalState", "UnitSystem",
]
