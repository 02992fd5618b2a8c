"""Sympathetic cooling of a membrane oscillator by laser-coupled cold atoms.

Library layout:
  params     -- constants, parameter dataclasses, validation
  configio   -- config files with unit suffixes
  cavity     -- membrane-in-the-middle optics (analytic + transfer matrix)
  lattice    -- optical lattice depth, trap frequency, scattering
  coupling   -- coupling constant, sympathetic rate, cooperativity
  optomech   -- cavity cooling, optical spring, laser-noise bath
  dynamics   -- stochastic time-domain and analytic frequency-domain models
  analysis   -- PSD, band-power temperature, calibration and step fits
  scenarios  -- named experiments (fig2a replay, step scans, ground state)
  cli        -- `symcool` command-line entry point
"""

from .params import (CONSTANTS, AtomEnsemble, CavityGeometry, CouplingBudget,
                     ExperimentConfig, LaserNoiseParams, LatticeParams,
                     MembraneMode, effective_mass_plate, validate)
from .configio import load_config

__all__ = [
    "CONSTANTS", "AtomEnsemble", "CavityGeometry", "CouplingBudget",
    "ExperimentConfig", "LaserNoiseParams", "LatticeParams", "MembraneMode",
    "effective_mass_plate", "validate", "load_config",
]

__version__ = "0.1.0"
