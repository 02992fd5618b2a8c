"""Atom-membrane coupling: single-phonon coupling constant, spring constant,
sympathetic cooling rate (single-frequency and ensemble-integrated),
cooperativity and the ground-state criterion.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import CONSTANTS


def zero_point_amplitude(mass, omega, constants=CONSTANTS):
    """x_0 = sqrt(hbar / 2 m omega)."""
    return math.sqrt(constants.hbar / (2 * mass * omega))


def coupling_constant(N, Omega_a, Omega_m, M_eff, finesse, r_m,
                      m_atom=None, g_prefactor=1.0, constants=CONSTANTS):
    """Single-phonon coupling g_N = |r_m| Omega_a sqrt(N m Omega_a / M Omega_m) (2F/pi).

    g_prefactor scales the result by G/G_max for operation off the
    maximal-slope point.
    """
    if N < 0:
        raise ValueError("atom number must be non-negative")
    if m_atom is None:
        m_atom = constants.m_Rb87
    return (g_prefactor * abs(r_m) * Omega_a
            * math.sqrt(N * m_atom * Omega_a / (M_eff * Omega_m))
            * 2 * finesse / math.pi)


def spring_constant(N, Omega_a, finesse, r_m, m_atom=None, g_prefactor=1.0,
                    constants=CONSTANTS):
    """Coupling spring constant K = 2 |r_m| (2F/pi) N m Omega_a^2 (N/m)."""
    if m_atom is None:
        m_atom = constants.m_Rb87
    return g_prefactor * 2 * abs(r_m) * (2 * finesse / math.pi) * N * m_atom * Omega_a ** 2


def force_on_atoms(x_m, K):
    """Lattice-displacement force on the atomic centre of mass: F_cm = -K x_m."""
    return -K * np.asarray(x_m, dtype=float)


def force_on_membrane(x_a, K, eta2, t2):
    """Radiation-pressure backaction on the membrane: smaller by eta^2 t^2."""
    return -eta2 * t2 * K * np.asarray(x_a, dtype=float)


def sympathetic_rate(g_N, Omega_a, Omega_m, Gamma_a, eta2, t2):
    """Sympathetic cooling rate and membrane frequency pull.

    Gamma_sym = g^2 eta^2 t^2 Gamma_a / ((Omega_a - Omega_m)^2 + (Gamma_a/2)^2),
    delta_Omega_m = (Omega_a - Omega_m) Gamma_sym / Gamma_a.
    """
    if Gamma_a <= 0:
        raise ValueError("Gamma_a must be positive")
    detune = Omega_a - Omega_m
    gamma_sym = g_N ** 2 * eta2 * t2 * Gamma_a / (detune ** 2 + (Gamma_a / 2) ** 2)
    return gamma_sym, detune * gamma_sym / Gamma_a


def cooperativity(g_N, eta2, t2, Gamma_a, Gamma_m):
    """Atom-membrane cooperativity C = 4 g^2 eta^2 t^2 / (Gamma_a Gamma_m)."""
    if Gamma_a <= 0 or Gamma_m <= 0:
        raise ValueError("rates must be positive")
    return 4 * g_N ** 2 * eta2 * t2 / (Gamma_a * Gamma_m)


@dataclass(frozen=True)
class CouplingResult:
    g_N: float            # rad/s
    K: float              # N/m
    Gamma_sym: float      # 1/s
    delta_Omega_m: float  # rad/s
    C: float
    x_m0: float           # m
    x_a0: float           # m


def coupling_result(N, Omega_a, Omega_m, M_eff, finesse, r_m, Gamma_a, Gamma_m,
                    eta2, t2, m_atom=None, g_prefactor=1.0, constants=CONSTANTS):
    """Evaluate the full coupling bundle at one operating point."""
    if m_atom is None:
        m_atom = constants.m_Rb87
    g = coupling_constant(N, Omega_a, Omega_m, M_eff, finesse, r_m, m_atom,
                          g_prefactor, constants)
    K = spring_constant(N, Omega_a, finesse, r_m, m_atom, g_prefactor, constants)
    gamma_sym, d_om = sympathetic_rate(g, Omega_a, Omega_m, Gamma_a, eta2, t2)
    return CouplingResult(
        g_N=g, K=K, Gamma_sym=gamma_sym, delta_Omega_m=d_om,
        C=cooperativity(g, eta2, t2, Gamma_a, Gamma_m),
        x_m0=zero_point_amplitude(M_eff, Omega_m, constants),
        x_a0=zero_point_amplitude(N * m_atom, Omega_a, constants) if N > 0 else math.inf,
    )


# -- ensemble-integrated rate ------------------------------------------------

def lattice_atom_number(n_a, w0, R_a):
    """Atoms inside the lattice beam volume, N_lat = 2 R_a pi w0^2 n_a."""
    return 2 * R_a * math.pi * w0 ** 2 * n_a


def resonant_atom_number(n_a, w0, R_a, Gamma_a, Omega_m):
    """Resonantly coupled atoms N_r = pi^2 n_a w0^2 R_a Gamma_a / Omega_m."""
    if R_a < 5 * w0:
        warnings.warn("cloud radius not large compared to the beam waist; "
                      "the resonant-shell picture degrades", stacklevel=2)
    return math.pi ** 2 * n_a * w0 ** 2 * R_a * Gamma_a / Omega_m


def step_height(g_Nr, eta2, t2, Gamma_a):
    """Plateau value of the ensemble-integrated rate, 4 g_Nr^2 eta^2 t^2 / Gamma_a."""
    return 4 * g_Nr ** 2 * eta2 * t2 / Gamma_a


def _antiderivative(x, a, b):
    # int x^2 / ((x-a)^2 + b^2) dx
    #   = x + a*log((x-a)^2 + b^2) + ((a^2 - b^2)/b) * arctan((x-a)/b)
    return (x + a * np.log((x - a) ** 2 + b ** 2)
            + (a * a - b * b) / b * np.arctan((x - a) / b))


def ensemble_rate_closed_form(Omega_a0, Omega_m, Gamma_a, g_Nr, eta2, t2,
                              Omega_lower=0.0):
    """Ensemble-integrated sympathetic cooling rate (exact closed form).

    Integrates the single-atom rate over the Gaussian beam profile,
    expressed as a frequency integral from Omega_lower (0 for a cloud much
    wider than the beam; pass Omega_a(R_a) for the exact lower limit) up to
    Omega_a0. Monotone step around Omega_a0 = Omega_m of width Gamma_a and
    height 4 g_Nr^2 eta^2 t^2 / Gamma_a.
    """
    Omega_a0 = np.asarray(Omega_a0, dtype=float)
    if np.any(Omega_a0 < 0):
        raise ValueError("Omega_a0 must be non-negative")
    a, b = Omega_m, Gamma_a / 2
    # prefactor B such that Gamma = B * int dx x^2/((x-a)^2+b^2):
    # B = step_height / (2 pi Omega_m^2 / Gamma_a)
    B = step_height(g_Nr, eta2, t2, Gamma_a) * Gamma_a / (2 * math.pi * Omega_m ** 2)
    val = B * (_antiderivative(Omega_a0, a, b) - _antiderivative(Omega_lower, a, b))
    return np.where(Omega_a0 > Omega_lower, val, 0.0) if val.ndim else (float(val) if Omega_a0 > Omega_lower else 0.0)


def ensemble_rate_step_approx(Omega_a0, Omega_m, Gamma_a, g_Nr, eta2, t2):
    """Two-arctan approximation, valid for Gamma_a << Omega_m."""
    Omega_a0 = np.asarray(Omega_a0, dtype=float)
    pref = step_height(g_Nr, eta2, t2, Gamma_a) / math.pi
    return pref * (np.arctan(2 * Omega_m / Gamma_a)
                   + np.arctan(2 * (Omega_a0 - Omega_m) / Gamma_a))


@dataclass(frozen=True)
class EnsembleCouplingResult:
    N_r: float
    N_lat: float
    g_Nr: float           # rad/s
    Gamma_sym_int: float  # 1/s
    step_height: float    # 1/s


def ensemble_result(n_a, w0, R_a, Gamma_a, Omega_a0, Omega_m, M_eff, finesse,
                    r_m, eta2, t2, m_atom=None, g_prefactor=1.0,
                    exact_lower_limit=False, constants=CONSTANTS):
    """Ensemble coupling bundle: N_r, N_lat, g_Nr and the integrated rate."""
    if m_atom is None:
        m_atom = constants.m_Rb87
    N_r = resonant_atom_number(n_a, w0, R_a, Gamma_a, Omega_m)
    N_lat = lattice_atom_number(n_a, w0, R_a)
    g_Nr = coupling_constant(N_r, Omega_m, Omega_m, M_eff, finesse, r_m,
                             m_atom, g_prefactor, constants)
    lower = Omega_a0 * math.exp(-(R_a / w0) ** 2) if exact_lower_limit else 0.0
    rate = ensemble_rate_closed_form(Omega_a0, Omega_m, Gamma_a, g_Nr, eta2, t2,
                                     Omega_lower=lower)
    return EnsembleCouplingResult(N_r=N_r, N_lat=N_lat, g_Nr=g_Nr,
                                  Gamma_sym_int=float(rate),
                                  step_height=step_height(g_Nr, eta2, t2, Gamma_a))


def ground_state_criterion(C, T_bath, Omega_m, constants=CONSTANTS):
    """Classical ground-state-cooling criterion C > n_bath = k_B T_bath / hbar Omega_m."""
    if T_bath < 0 or Omega_m <= 0:
        raise ValueError("T_bath must be non-negative and Omega_m positive")
    n_bath = constants.k_B * T_bath / (constants.hbar * Omega_m)
    return {"n_bath": n_bath, "satisfied": C > n_bath}
