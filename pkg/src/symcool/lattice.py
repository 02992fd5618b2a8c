"""Retro-reflected optical lattice at the atoms.

Single-beam dipole potential V0, the standing-wave potential
U(r, x) = exp(-2 r^2/w0^2) [V_d - V_m sin^2(k_L x + phi/2)] with
V_d = V0 (1 + eta t^2)^2 and V_m = 4 eta t^2 V0, the position-dependent
axial trap frequency, and the photon scattering rate.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import CONSTANTS, LatticeParams  # noqa: F401  (re-export)

# Trap frequency measured by parametric-heating spectroscopy at the baseline
# operating point; the analysis may use this instead of the calculated value.
MEASURED_TRAP_FREQUENCY = 2 * math.pi * 302e3  # rad/s

# Independently measured reflected-power fraction, for comparison with eta^2 t^4.
MEASURED_PR_OVER_P0 = 0.51

_DETUNING_WARN = 2 * math.pi * 1e9  # below this the two-level expression degrades


@dataclass(frozen=True)
class LatticeField:
    """Derived lattice quantities at the beam centre."""
    V0: float          # J, single-beam dipole potential
    V_d: float         # J, constant offset V0 (1 + eta t^2)^2
    V_m: float         # J, modulation depth 4 eta t^2 V0
    Omega_a0: float    # rad/s, axial trap frequency at r = 0
    Gamma_sc0: float   # 1/s, scattering rate at the lattice centre
    Pr_over_P0: float  # reflected power fraction eta^2 t^4


def dipole_potential_depth(P0, w0, Delta_LA, constants=CONSTANTS):
    """Single-beam dipole potential V0 = (hbar Gamma^2 / 12 Delta) I0/I_s, I0 = 2 P0/(pi w0^2).

    Sign follows the detuning: red (Delta < 0) gives an attractive V0 < 0.
    """
    if Delta_LA == 0:
        raise ValueError("atom-light detuning must be nonzero")
    if abs(Delta_LA) < _DETUNING_WARN:
        warnings.warn("detuning within the excited-state hyperfine splitting scale; "
                      "two-level dipole potential is a rough approximation", stacklevel=2)
    I0 = 2 * P0 / (math.pi * w0 ** 2)
    return constants.hbar * constants.Gamma_D2 ** 2 / (12 * Delta_LA) * I0 / constants.I_s


def lattice_field(params, budget, constants=CONSTANTS, m_atom=None):
    """Evaluate the derived lattice quantities for one parameter set."""
    if m_atom is None:
        m_atom = constants.m_Rb87
    eta = math.sqrt(budget.eta2)
    t2 = budget.t2
    V0 = dipole_potential_depth(params.P0, params.w0, params.Delta_LA, constants)
    V_d = V0 * (1 + eta * t2) ** 2
    V_m = 4 * eta * t2 * V0
    Omega_a0 = math.sqrt(2 * abs(V_m) * params.k_L ** 2 / m_atom) if V_m != 0 else 0.0
    Gamma_sc0 = constants.Gamma_D2 * V_d / (constants.hbar * params.Delta_LA)
    return LatticeField(V0=V0, V_d=V_d, V_m=V_m, Omega_a0=Omega_a0,
                        Gamma_sc0=Gamma_sc0, Pr_over_P0=budget.eta2 * t2 ** 2)


def dipole_potential(r, x, field, params):
    """Full lattice potential U(r, x); lam/2-periodic in x, Gaussian in r."""
    envelope = np.exp(-2 * np.asarray(r, dtype=float) ** 2 / params.w0 ** 2)
    axial = field.V_d - field.V_m * np.sin(params.k_L * np.asarray(x, dtype=float) + params.phi / 2) ** 2
    return envelope * axial


def trap_frequency(r, field, params, constants=CONSTANTS, m_atom=None):
    """Axial trap frequency Omega_a(r) = sqrt(2 |V_m| k_L^2 / m) exp(-r^2/w0^2)."""
    if m_atom is None:
        m_atom = constants.m_Rb87
    if field.V_m == 0:
        raise ValueError("trap frequency undefined for zero lattice modulation")
    omega0 = math.sqrt(2 * abs(field.V_m) * params.k_L ** 2 / m_atom)
    return omega0 * np.exp(-np.asarray(r, dtype=float) ** 2 / params.w0 ** 2)


def scattering_rate(r, x, field, params, constants=CONSTANTS, at="well"):
    """Photon scattering rate Gamma * U / (hbar Delta_LA).

    at="well" (default) evaluates U on the full-depth V_d scale at a
    potential minimum, which is what the headline centre value uses;
    at="point" evaluates U(r, x) literally; at="peak" uses the spatial
    maximum of |U| along x.
    """
    envelope = np.exp(-2 * np.asarray(r, dtype=float) ** 2 / params.w0 ** 2)
    if at == "well":
        u = field.V_d * envelope if field.V0 < 0 else (field.V_d - field.V_m) * envelope
    elif at == "peak":
        u = max((field.V_d, field.V_d - field.V_m), key=abs) * envelope
    elif at == "point":
        u = dipole_potential(r, x, field, params)
    else:
        raise ValueError(f"unknown evaluation mode {at!r}")
    return constants.Gamma_D2 * u / (constants.hbar * params.Delta_LA)


def reflected_power_ratio(budget):
    """Expected reflected power fraction P_r/P0 = eta^2 t^4."""
    return budget.eta2 * budget.t2 ** 2


def power_for_trap_frequency(Omega_a0_target, params, budget, constants=CONSTANTS):
    """Invert Omega_a0 ~ sqrt(P0): power that puts the centre trap frequency on target."""
    ref = lattice_field(params, budget, constants)
    if ref.Omega_a0 == 0:
        raise ValueError("reference lattice has zero modulation")
    return params.P0 * (Omega_a0_target / ref.Omega_a0) ** 2
