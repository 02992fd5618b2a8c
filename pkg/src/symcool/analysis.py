"""Data-analysis pipeline: spectral estimation, band-power (zero-span)
temperature, equipartition conversion, calibration / step-model / decay fits.

All fitters are deterministic given the data and initial guess. Parameter
uncertainties come from the Jacobian-based covariance at the optimum.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal
from scipy.optimize import least_squares

from .params import CONSTANTS
from .coupling import ensemble_rate_closed_form

# noise-equivalent bandwidth in bins, window name -> NENBW
WINDOWS = {"rectangular": 1.0, "hann": 1.5}


@dataclass
class PsdEstimate:
    omega: np.ndarray       # rad/s grid
    S_x: np.ndarray         # m^2/Hz, one-sided
    segments: int
    window: str

    @property
    def f(self):
        return self.omega / (2 * math.pi)


@dataclass
class FitResult:
    names: list
    values: np.ndarray
    uncertainties: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    diagnostic: str = ""

    def __getitem__(self, name):
        return self.values[self.names.index(name)]

    def uncertainty(self, name):
        return self.uncertainties[self.names.index(name)]


def estimate_psd(series, segment_length, window="hann", overlap=None,
                 detrend="constant"):
    """Averaged windowed periodogram of the membrane record, one-sided.

    Normalised as a density: sum(S_x) * df equals the sample variance
    (within estimator tolerance; exactly for a rectangular window with
    detrend=False).
    """
    x = np.asarray(series.x_m, dtype=float)
    if x.size == 0:
        raise ValueError("empty series")
    if segment_length > x.size:
        raise ValueError("segment_length exceeds the series length")
    fs = 1.0 / series.dt
    win = "boxcar" if window == "rectangular" else window
    if overlap is None:
        overlap = segment_length // 2 if window == "hann" else 0
    f, pxx = signal.welch(x, fs=fs, window=win, nperseg=segment_length,
                          noverlap=overlap, detrend=detrend)
    n_seg = 1 + (x.size - segment_length) // max(1, segment_length - overlap)
    return PsdEstimate(omega=2 * math.pi * f, S_x=pxx, segments=n_seg,
                       window=window)


def psd_variance(psd):
    """Integral of the PSD (m^2/Hz) over frequency: the variance it represents."""
    return float(np.trapezoid(psd.S_x, psd.omega) / (2 * math.pi))


def equipartition_temperature(variance, M_eff, Omega_m, constants=CONSTANTS):
    """T = M Omega_m^2 <x^2> / k_B."""
    if M_eff <= 0 or Omega_m <= 0 or variance < 0:
        raise ValueError("need positive mass/frequency and non-negative variance")
    return M_eff * Omega_m ** 2 * variance / constants.k_B


def spectral_peak(x, dt, center, halfspan):
    """Angular frequency of the strongest spectral line within center +- halfspan."""
    x = np.asarray(x, dtype=float)
    power = np.abs(np.fft.rfft(x - x.mean())) ** 2
    omega = 2 * math.pi * np.fft.rfftfreq(x.size, dt)
    sel = (omega >= center - halfspan) & (omega <= center + halfspan)
    if not np.any(sel):
        return center
    idx = np.nonzero(sel)[0]
    return float(omega[idx[np.argmax(power[idx])]])


def band_power_temperature(series, center, bandwidth, calibration,
                           gamma_tot=None, t_grid_dt=1e-3, auto_center=True):
    """Zero-span measurement: band power around `center` mapped to kelvin.

    Parks on the observed spectral peak near `center` (what the analyzer
    operator does; auto_center=False trusts `center` verbatim), demodulates,
    low-passes at half the bandwidth (4th-order zero-phase Butterworth) and
    converts the envelope power to temperature via the equipartition
    constant `calibration` (M Omega^2 / k_B times any scale factor).
    Returns (t, T) sampled on a t_grid_dt grid. Emulates a spectrum analyzer
    at ~Omega_m with BW >> Gamma_tot; both bandwidth conditions are warned
    when violated.
    """
    if gamma_tot is not None and bandwidth < 5 * gamma_tot:
        warnings.warn("bandwidth is not large compared to the total damping rate",
                      stacklevel=2)
    if bandwidth > center / 5:
        warnings.warn("bandwidth is not small compared to the centre frequency",
                      stacklevel=2)
    if auto_center:
        center = spectral_peak(series.x_m, series.dt, center, 2 * bandwidth)
    t = series.t
    z = series.x_m * np.exp(-1j * center * t)
    f_cut = bandwidth / 2 / (2 * math.pi)
    sos = signal.butter(4, f_cut, btype="low", fs=1.0 / series.dt, output="sos")
    zf = signal.sosfiltfilt(sos, z)
    # x = Re[a e^{i w t}] => <x^2> = |a|^2/2 and the filtered baseband is a/2
    power = 2.0 * np.abs(zf) ** 2
    temp = calibration * power
    stride = max(1, int(round(t_grid_dt / series.dt)))
    return t[::stride], temp[::stride]


def equipartition_calibration(M_eff, Omega_m, scale=1.0, constants=CONSTANTS):
    """Calibration constant for band_power_temperature; scale absorbs the
    day-to-day detection-sensitivity factor."""
    return scale * M_eff * Omega_m ** 2 / constants.k_B


def _ls_fit(names, model, p0, x, y, bounds=None, kwargs=None):
    def resid(p):
        return model(x, *p) - y

    res = least_squares(resid, p0, bounds=bounds or (-np.inf, np.inf),
                        **(kwargs or {}))
    m, n = res.fun.size, len(p0)
    dof = max(m - n, 1)
    sigma2 = float(res.fun @ res.fun) / dof
    try:
        jtj_inv = np.linalg.inv(res.jac.T @ res.jac)
        unc = np.sqrt(np.maximum(np.diag(jtj_inv) * sigma2, 0.0))
    except np.linalg.LinAlgError:
        unc = np.full(n, np.inf)
    return FitResult(names=list(names), values=res.x, uncertainties=unc,
                     residual_norm=float(np.linalg.norm(res.fun)),
                     converged=bool(res.success), iterations=int(res.nfev),
                     diagnostic="" if res.success else res.message)


def fit_calibration(P_tot, T_opt, Gamma_m, initial_guess=None):
    """Fit T_opt(P) = Gamma_m (T0 + beta P^2) / (Gamma_m + alpha P).

    Initial-guess policy: T0 from the lowest-power temperatures; alpha from
    the drop of the highest-power point below T0 assuming beta = 0; beta
    seeded at a small fraction of the implied curvature scale. The basin is
    broad: guesses perturbed by +-50% land on the same optimum for clean
    data. initial_guess=(alpha, beta, T0) overrides the policy.
    """
    P = np.asarray(P_tot, dtype=float)
    T = np.asarray(T_opt, dtype=float)
    if P.size < 5:
        raise ValueError("need at least 5 calibration points")
    pos = P[P > 0]
    if pos.max() / pos.min() < 3:
        raise ValueError("calibration powers must span at least a factor of 3")
    if initial_guess is None:
        order = np.argsort(P)
        t0_guess = float(T[order[0]]) if P[order[0]] == 0 else float(T[order[:2]].mean())
        p_hi, t_hi = float(P[order[-1]]), float(T[order[-1]])
        alpha_guess = max(Gamma_m * (t0_guess / max(t_hi, 1e-12) - 1) / p_hi, 1e-9)
        beta_guess = 0.01 * t0_guess / p_hi ** 2
        initial_guess = [alpha_guess, beta_guess, t0_guess]

    from .optomech import calibration_model

    def model(p, alpha, beta, t0):
        return calibration_model(p, alpha, beta, t0, Gamma_m)

    return _ls_fit(["alpha", "beta", "T0"], model, list(initial_guess), P, T,
                   bounds=([0, 0, 0], [np.inf, np.inf, np.inf]))


def extract_gamma_sym(T_sym, T_opt, T_bath, Gamma_m):
    """Gamma_sym = Gamma_m (T_bath/T_sym - T_bath/T_opt) from measured temperatures.

    T_sym > T_opt (possible with noisy inputs) yields a signed negative rate
    with a warning rather than an error, preserving estimator linearity.
    """
    if min(T_sym, T_opt, T_bath) <= 0:
        raise ValueError("temperatures must be positive")
    if T_sym > T_opt:
        warnings.warn("T_sym exceeds T_opt; returning a negative rate", stacklevel=2)
    return Gamma_m * (T_bath / T_sym - T_bath / T_opt)


def fit_step_model(Omega_a0, Gamma_sym, fixed):
    """Fit the ensemble-integrated step model with the density n_a free.

    `fixed` carries every other parameter: Omega_m, Gamma_a, eta2, t2, M_eff,
    finesse, r_m, w0, R_a, m_atom (optional), g_prefactor (optional).
    The model is linear in n_a (g_Nr^2 scales with N_r), so identifiability
    reduces to the data actually sampling the step; flat-zero data is
    flagged unidentifiable with unbounded uncertainty.
    """
    from .coupling import coupling_constant, resonant_atom_number

    x = np.asarray(Omega_a0, dtype=float)
    y = np.asarray(Gamma_sym, dtype=float)
    m_atom = fixed.get("m_atom", CONSTANTS.m_Rb87)

    def model(omega_a0, n_a):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            n_r = resonant_atom_number(n_a, fixed["w0"], fixed["R_a"],
                                       fixed["Gamma_a"], fixed["Omega_m"])
        g_nr = coupling_constant(n_r, fixed["Omega_m"], fixed["Omega_m"],
                                 fixed["M_eff"], fixed["finesse"], fixed["r_m"],
                                 m_atom, fixed.get("g_prefactor", 1.0))
        return ensemble_rate_closed_form(omega_a0, fixed["Omega_m"],
                                         fixed["Gamma_a"], g_nr,
                                         fixed["eta2"], fixed["t2"])

    n0 = fixed.get("n_a_guess", 5e15)
    fit = _ls_fit(["n_a"], model, [n0], x, y, bounds=([0], [np.inf]))
    basis = model(x, n0)
    if float(np.max(np.abs(basis))) <= 0 or not np.isfinite(fit.uncertainties[0]) \
            or (np.max(np.abs(y)) == 0 and np.max(np.abs(basis)) / n0 < 1e-30):
        fit.converged = False
        fit.diagnostic = "unidentifiable: data does not sample the step"
        fit.uncertainties = np.array([np.inf])
    rel_unc = fit.uncertainties[0] / fit.values[0] if fit.values[0] > 0 else np.inf
    if rel_unc > 1e3:
        fit.converged = False
        fit.diagnostic = "unidentifiable: n_a uncertainty unbounded"
    return fit


def fit_lorentzian_psd(psd, guess_omega=None):
    """Fit a + h (G/2)^2 / ((w-w0)^2 + (G/2)^2) to a PSD; returns omega_0, gamma, height, floor."""
    w = psd.omega
    s = psd.S_x
    i_pk = int(np.argmax(s))
    w0 = guess_omega if guess_omega is not None else w[i_pk]
    h0 = float(s[i_pk])
    above = s > h0 / 2
    g0 = max(float(w[above].max() - w[above].min()), float(w[1] - w[0]))

    def model(wg, omega_0, gamma, height, floor):
        return floor + height * (gamma / 2) ** 2 / ((wg - omega_0) ** 2 + (gamma / 2) ** 2)

    return _ls_fit(["omega_0", "gamma", "height", "floor"], model,
                   [w0, g0, h0, 0.0], w, s,
                   bounds=([w.min(), 0, 0, 0], [w.max(), np.inf, np.inf, np.inf]))


def fit_exponential_decay(t, y):
    """Fit y(t) = y_inf + (y_0 - y_inf) exp(-rate t); returns rate, y_0, y_inf."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    y0, yinf = float(y[0]), float(y[-1])
    span = abs(y0 - yinf)
    if span == 0:
        raise ValueError("no decay to fit")
    # crude rate guess from the 1/e crossing
    target = yinf + (y0 - yinf) / math.e
    idx = np.argmin(np.abs(y - target))
    rate0 = 1.0 / max(t[idx] - t[0], (t[1] - t[0]))

    def model(tg, rate, a0, ainf):
        return ainf + (a0 - ainf) * np.exp(-rate * (tg - tg[0]))

    return _ls_fit(["rate", "y_0", "y_inf"], model, [rate0, y0, yinf], t, y,
                   bounds=([0, -np.inf, -np.inf], [np.inf, np.inf, np.inf]))
