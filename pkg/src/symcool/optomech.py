"""Cavity optomechanical cooling, optical spring, laser-noise bath heating,
absorption heating, equilibrium temperatures and the power-calibration model.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import CONSTANTS, LaserNoiseParams  # noqa: F401  (re-export)
from .cavity import intracavity_photons

# Observed membrane frequency shift with total coupled power, and the share
# of it explained by the optical spring, kept as cross-check reference data.
FREQ_SHIFT_PER_WATT = -2 * math.pi * 11e3  # rad/s per W
OPTICAL_SPRING_FRACTION = 0.89

_REF_ABSORBED_FRAC = 4e-6


@dataclass(frozen=True)
class OptomechResult:
    Gamma_opt: float        # 1/s
    delta_Omega_opt: float  # rad/s
    n_bar_c: float
    g0: float               # rad/s
    T_L: float              # K
    T_bath: float           # K (support + laser noise + absorption offset)
    T_opt: float            # K


def single_photon_coupling(G, M_eff, Omega_m, constants=CONSTANTS):
    """g0 = G x_m0 with x_m0 = sqrt(hbar / 2 M Omega_m)."""
    return abs(G) * math.sqrt(constants.hbar / (2 * M_eff * Omega_m))


def total_input_power(P0, budget, P_det=0.0):
    """Power coupled to the cavity mode: P_tot = eta^2 (t^2 P0 + P_det)."""
    return budget.eta2 * (budget.t2 * P0 + P_det)


def optomech_cooling_rate(g0, n_bar_c, kappa, Delta, Omega_m):
    """Sideband-asymmetry cooling rate; positive (cooling) for Delta < 0."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    lor_minus = kappa / (kappa ** 2 / 4 + (Delta + Omega_m) ** 2)
    lor_plus = kappa / (kappa ** 2 / 4 + (Delta - Omega_m) ** 2)
    return g0 ** 2 * n_bar_c * (lor_minus - lor_plus)


def optical_spring(Gamma_opt, kappa, Omega_m, Delta=None):
    """delta_Omega_opt = -(kappa / 8 Omega_m) Gamma_opt, valid for kappa >> |Delta|, Omega_m."""
    if kappa < 8 * Omega_m or (Delta is not None and kappa < 8 * abs(Delta)):
        warnings.warn("optical-spring expression assumes kappa >> |Delta|, Omega_m",
                      stacklevel=2)
    return -(kappa / (8 * Omega_m)) * Gamma_opt


def parametric_instability(Gamma_opt, Gamma_m, Delta):
    """Flag the anti-damping instability: Delta > 0 with |Gamma_opt| > Gamma_m."""
    return Delta > 0 and Gamma_opt < 0 and abs(Gamma_opt) > Gamma_m


def laser_noise_temperature(noise, G, n_bar_c, Delta, kappa, M_eff, Gamma_m,
                            Omega_m, constants=CONSTANTS):
    """Effective bath-temperature increase from intensity and frequency noise.

    T_L = [S_F,int + S_F,freq] / (4 M Gamma_m k_B), with
    S_F,int  = (hbar G n_c)^2 S_I and
    S_F,freq = (hbar G n_c)^2 (8 Delta / kappa^2)^2 S_phidot.
    """
    if not (Omega_m < abs(Delta) < kappa / 4) and (noise.S_phidot > 0):
        warnings.warn("frequency-noise conversion assumes Omega_m < |Delta| << kappa",
                      stacklevel=2)
    f_rad = constants.hbar * abs(G) * n_bar_c  # mean radiation-pressure force
    s_int = f_rad ** 2 * noise.S_I
    s_freq = f_rad ** 2 * (8 * Delta / kappa ** 2) ** 2 * noise.S_phidot
    return (s_int + s_freq) / (4 * M_eff * Gamma_m * constants.k_B)


def equilibrium_temperature(T_bath, Gamma_m, Gamma_opt=0.0, Gamma_sym=0.0):
    """Steady-state mode temperature T = T_bath Gamma_m / (Gamma_m + Gamma_opt + Gamma_sym)."""
    total = Gamma_m + Gamma_opt + Gamma_sym
    if total <= 0:
        raise ValueError("total damping must be positive")
    return T_bath * Gamma_m / total


def calibration_model(P_tot, alpha, beta, T0, Gamma_m):
    """Forward model T_opt(P_tot) = Gamma_m (T0 + beta P_tot^2) / (Gamma_m + alpha P_tot)."""
    P_tot = np.asarray(P_tot, dtype=float)
    if np.any(P_tot < 0):
        raise ValueError("P_tot must be non-negative")
    out = Gamma_m * (T0 + beta * P_tot ** 2) / (Gamma_m + alpha * P_tot)
    return float(out) if out.ndim == 0 else out


def alpha_from_physics(g0, kappa, Delta, Omega_m, omega_c, constants=CONSTANTS):
    """Calibration slope alpha such that Gamma_opt = alpha * P_tot exactly."""
    n_per_watt = intracavity_photons(1.0, Delta, kappa, omega_c)
    return optomech_cooling_rate(g0, n_per_watt, kappa, Delta, Omega_m)


def beta_from_noise(noise, G, kappa, Delta, omega_c, M_eff, Gamma_m,
                    constants=CONSTANTS):
    """Calibration curvature beta such that T_L = beta * P_tot^2 exactly."""
    n_per_watt = intracavity_photons(1.0, Delta, kappa, omega_c)
    f_per_watt = constants.hbar * abs(G) * n_per_watt
    s = f_per_watt ** 2 * (noise.S_I + (8 * Delta / kappa ** 2) ** 2 * noise.S_phidot)
    return s / (4 * M_eff * Gamma_m * constants.k_B)


def absorption_heating(P0, absorbed_frac=_REF_ABSORBED_FRAC, dT_abs_per_W=None):
    """Bath-temperature offset from absorbed light, linear in incident power.

    The default coefficient folds the reference absorbed fraction; passing a
    different absorbed_frac rescales it proportionally.
    """
    if P0 < 0 or absorbed_frac < 0:
        raise ValueError("inputs must be non-negative")
    if dT_abs_per_W is None:
        dT_abs_per_W = (2.3 / 16.5e-3) * (absorbed_frac / _REF_ABSORBED_FRAC)
    return dT_abs_per_W * P0


def optomech_point(G, M_eff, Omega_m, Gamma_m, kappa, Delta, P0, budget, noise,
                   omega_c, T0=295.0, include_noise_heating=True,
                   include_absorption=False, constants=CONSTANTS):
    """Assemble the optomechanical quantities at one operating point."""
    g0 = single_photon_coupling(G, M_eff, Omega_m, constants)
    p_tot = total_input_power(P0, budget, noise.P_det)
    n_c = intracavity_photons(p_tot, Delta, kappa, omega_c)
    gamma_opt = optomech_cooling_rate(g0, n_c, kappa, Delta, Omega_m)
    t_l = laser_noise_temperature(noise, G, n_c, Delta, kappa, M_eff, Gamma_m,
                                  Omega_m, constants) if include_noise_heating else 0.0
    t_bath = T0 + t_l + (absorption_heating(P0, noise.absorbed_frac,
                                            noise.dT_abs_per_W) if include_absorption else 0.0)
    return OptomechResult(
        Gamma_opt=gamma_opt,
        delta_Omega_opt=optical_spring(gamma_opt, kappa, Omega_m, Delta),
        n_bar_c=n_c, g0=g0, T_L=t_l, T_bath=t_bath,
        T_opt=equilibrium_temperature(t_bath, Gamma_m, gamma_opt),
    )
