"""Membrane-in-the-middle cavity optics.

Analytic model: resonance frequency omega_c(x_m), dispersive coupling
G = -d omega_c / d x_m, reflected phase of a single-sided cavity, and the
intracavity photon number. Numeric model: 2x2 field transfer matrices
(front mirror | gap | membrane slab | gap | back mirror) giving the
transmission spectrum, from which peak positions and linewidths (hence the
position-dependent finesse) are extracted.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .params import CONSTANTS


def thin_film_reflectivity(d, n_refr, lam):
    """Field reflectivity of a dielectric slab at normal incidence.

    Returns the complex amplitude; its magnitude is the |r_m| used
    downstream. d -> 0 and the half-wave slab (n*d = lam/2) are both
    transparent.
    """
    if not 0 < d < lam:
        raise ValueError("thin_film_reflectivity expects 0 < d < lam")
    delta = 2 * math.pi * n_refr * d / lam
    r01 = (1 - n_refr) / (1 + n_refr)
    num = r01 * (1 - np.exp(2j * delta))
    den = 1 - r01 ** 2 * np.exp(2j * delta)
    return num / den


@dataclass(frozen=True)
class MembraneOptics:
    r_m: complex                 # field reflectivity (magnitude used downstream)
    d: float = 42e-9             # m
    n_refr: float = 2.0
    absorption_frac: float = 4e-6

    @property
    def r_mag(self):
        return abs(self.r_m)


@dataclass(frozen=True)
class ResonancePeak:
    omega: float                 # rad/s
    kappa: float                 # rad/s, FWHM of the transmission peak
    finesse: float
    transmission: float
    converged: bool
    message: str = ""


class CavityModel:
    """Cavity geometry plus membrane optics; all optics queries live here."""

    def __init__(self, geometry, membrane, r_mag=None):
        self.geometry = geometry
        self.membrane = membrane
        # magnitude used by the analytic formulas; the slab model has its own
        self.r_mag = membrane.r_mag if r_mag is None else float(r_mag)
        if not 0 <= self.r_mag < 1:
            raise ValueError("|r_m| must lie in [0, 1)")
        self._finesse_endpoints = None

    @property
    def omega_FSR(self):
        return math.pi * CONSTANTS.c / self.geometry.length_L

    @property
    def omega_0(self):
        # chosen so omega_c(lam/8) = 2*pi*c/lam; downstream only uses
        # omega_c ~ 2*pi*c/lam and derivatives
        if self.geometry.omega_0 is not None:
            return self.geometry.omega_0
        return 2 * math.pi * CONSTANTS.c / self.geometry.lam - self.omega_FSR / 2

    # -- analytic model ----------------------------------------------------

    def cavity_resonance(self, x_m):
        """omega_c(x_m) = (omega_FSR/pi) arccos[|r_m| cos(4 pi x_m/lam)] + omega_0."""
        theta = 4 * math.pi * np.asarray(x_m, dtype=float) / self.geometry.lam
        return self.omega_FSR / math.pi * np.arccos(self.r_mag * np.cos(theta)) + self.omega_0

    def dispersive_coupling(self, x_m):
        """G(x_m) = -d omega_c/d x_m, evaluated analytically (signed)."""
        lam = self.geometry.lam
        theta = 4 * math.pi * np.asarray(x_m, dtype=float) / lam
        r = self.r_mag
        return -(4 * self.omega_FSR * r / lam) * np.sin(theta) / np.sqrt(1 - r ** 2 * np.cos(theta) ** 2)

    def g_max(self):
        """Maximal |G| = 4 pi c |r_m| / (L lam), reached at x_m = lam/8 mod lam/4."""
        return 4 * math.pi * CONSTANTS.c * self.r_mag / (self.geometry.length_L * self.geometry.lam)

    # -- transfer-matrix model ----------------------------------------------

    def transmission(self, omega, x_m):
        """Transmitted intensity through mirror-gap-slab-gap-mirror at displacement x_m."""
        g = self.geometry
        mem = self.membrane
        omega = np.asarray(omega, dtype=float)
        k = omega / CONSTANTS.c
        L_front = g.front_fraction * g.length_L
        L1 = L_front + x_m - mem.d / 2
        L2 = (g.length_L - L_front) - x_m - mem.d / 2
        if L1 <= 0 or L2 <= 0:
            raise ValueError("membrane displaced outside the cavity")

        one = np.ones_like(omega)

        def interface(r, t):
            return np.stack([np.stack([one / t, r / t * one], -1),
                             np.stack([r / t * one, one / t], -1)], -2)

        def gap(phase):
            z = np.zeros_like(omega, dtype=complex)
            return np.stack([np.stack([np.exp(-1j * phase), z], -1),
                             np.stack([z, np.exp(1j * phase)], -1)], -2)

        n = mem.n_refr
        r01, t01 = (1 - n) / (1 + n), 2 / (1 + n)
        r10, t10 = -r01, 2 * n / (1 + n)
        m = (interface(math.sqrt(g.R1), math.sqrt(1 - g.R1))
             @ gap(k * L1)
             @ interface(r01, t01) @ gap(n * k * mem.d) @ interface(r10, t10)
             @ gap(k * L2)
             @ interface(math.sqrt(g.R2), math.sqrt(1 - g.R2)))
        tau = 1.0 / m[..., 0, 0]
        return np.abs(tau) ** 2

    def refine_peak(self, x_m, omega_guess, span, rounds=6, points=801):
        """Iteratively zoom the transmission grid onto the local maximum."""
        w = float(omega_guess)
        for _ in range(rounds):
            grid = np.linspace(w - span / 2, w + span / 2, points)
            w = grid[int(np.argmax(self.transmission(grid, x_m)))]
            span /= points / 20  # refinement factor ~40 per round
        return w

    def fit_resonance(self, x_m, omega_guess=None, span=None):
        """Locate the transmission peak near omega_guess and bisect its half-maximum width."""
        if omega_guess is None:
            omega_guess = 2 * math.pi * CONSTANTS.c / self.geometry.lam
        if span is None:
            span = 1.0 * self.omega_FSR
        w_pk = self.refine_peak(x_m, omega_guess, span)
        t_pk = float(self.transmission(np.array([w_pk]), x_m)[0])
        half = t_pk / 2

        def excess(w):
            return float(self.transmission(np.array([w]), x_m)[0]) - half

        try:
            dw = self.omega_FSR * 1e-5
            lo = w_pk - dw
            while excess(lo) > 0:
                dw *= 1.6
                lo = w_pk - dw
                if dw > self.omega_FSR:
                    raise RuntimeError("no lower half-maximum crossing within one FSR")
            w_lo = brentq(excess, lo, w_pk, xtol=1e-3)
            dw = self.omega_FSR * 1e-5
            hi = w_pk + dw
            while excess(hi) > 0:
                dw *= 1.6
                hi = w_pk + dw
                if dw > self.omega_FSR:
                    raise RuntimeError("no upper half-maximum crossing within one FSR")
            w_hi = brentq(excess, w_pk, hi, xtol=1e-3)
        except RuntimeError as exc:
            return ResonancePeak(w_pk, math.nan, math.nan, t_pk, False, str(exc))
        kappa = w_hi - w_lo
        return ResonancePeak(w_pk, kappa, self.omega_FSR / kappa, t_pk, True)

    def track_branch(self, x_values, omega_start=None):
        """Follow one resonance branch across membrane displacements.

        Returns (peak omegas, kappas) arrays; the search window for each x
        re-centres on the previous peak so the branch is not lost at the
        steep-slope points.
        """
        x_values = np.asarray(x_values, dtype=float)
        if omega_start is None:
            omega_start = 2 * math.pi * CONSTANTS.c / self.geometry.lam
        w_prev = self.refine_peak(x_values[0], omega_start, 1.0 * self.omega_FSR)
        omegas, kappas = [], []
        for x in x_values:
            pk = self.fit_resonance(x, omega_guess=w_prev, span=0.08 * self.omega_FSR)
            w_prev = pk.omega
            omegas.append(pk.omega)
            kappas.append(pk.kappa)
        return np.array(omegas), np.array(kappas)

    def finesse_endpoints(self, n_scan=81):
        """Finesse/kappa at the two maximal-|G| points of the tracked branch.

        Returns ((F_low, kappa_low_F), (F_high, kappa_high_F)) sorted by
        finesse. Cached: the scan costs a few thousand transfer matrices.
        """
        if self._finesse_endpoints is None:
            lam = self.geometry.lam
            xs = np.linspace(0, lam / 2, n_scan)
            omegas, _ = self.track_branch(xs)
            slope = np.gradient(omegas, xs)
            pts = [xs[int(np.argmax(slope))], xs[int(np.argmin(slope))]]
            peaks = [self.fit_resonance(x, omega_guess=self.refine_peak(
                x, omegas[np.argmin(np.abs(xs - x))], 0.08 * self.omega_FSR)) for x in pts]
            pair = sorted(((p.finesse, p.kappa) for p in peaks), key=lambda fk: fk[0])
            self._finesse_endpoints = tuple(pair)
        return self._finesse_endpoints

    def kappa_map(self, x_values):
        """kappa(x_m) from transfer-matrix fits (not interpolated)."""
        _, kappas = self.track_branch(np.asarray(x_values, dtype=float))
        return kappas

    def operating_point(self, x_m, Delta, finesse=None):
        """Bundle the quantities downstream modules need at one (x_m, Delta)."""
        if finesse is None:
            pk = self.fit_resonance(x_m)
            finesse, kappa = pk.finesse, pk.kappa
        else:
            kappa = self.omega_FSR / finesse
        return CavityOperatingPoint(
            x_m=x_m,
            omega_c=float(self.cavity_resonance(x_m)),
            G=float(self.dispersive_coupling(x_m)),
            finesse=finesse,
            kappa=kappa,
            Delta=Delta,
        )


@dataclass(frozen=True)
class CavityOperatingPoint:
    x_m: float
    omega_c: float
    G: float
    finesse: float
    kappa: float
    Delta: float

    @property
    def small_detuning(self):
        # downstream small-detuning approximations assume |Delta| < kappa/2
        return abs(self.Delta) < self.kappa / 2


def transfer_matrix_spectrum(model, x_m, omega_grid):
    """Transmitted intensity on omega_grid; grid should span >= one FSR."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    if omega_grid.ptp() < model.omega_FSR:
        raise ValueError("omega grid must span at least one free spectral range")
    return model.transmission(omega_grid, x_m)


def reflected_phase(Delta, kappa):
    """Phase of the beam reflected from a single-sided cavity.

    Continuous branch 2*arctan(2 Delta/kappa); on |Delta| < kappa/2 this
    equals arctan[kappa Delta / ((kappa/2)^2 - Delta^2)]. Odd in Delta.
    """
    return 2 * np.arctan(2 * np.asarray(Delta, dtype=float) / kappa)


def dphi_dDelta(Delta, kappa):
    """d phi / d Delta = kappa / ((kappa/2)^2 + Delta^2); equals 4/kappa on resonance."""
    return kappa / ((kappa / 2) ** 2 + np.asarray(Delta, dtype=float) ** 2)


def intracavity_photons(P_in, Delta, kappa, omega_c):
    """Mean intracavity photon number for drive power P_in coupled to the mode."""
    if P_in < 0:
        raise ValueError("P_in must be non-negative")
    lorentz = kappa / (kappa ** 2 / 4 + Delta ** 2)
    return lorentz * P_in / (CONSTANTS.hbar * omega_c)
