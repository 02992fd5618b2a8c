"""Physical constants, experiment parameters and configuration validation.

Unit conventions: SI throughout. All angular frequencies are stored in
rad/s; anything printed in Hz is divided by 2*pi exactly once at the I/O
boundary (see configio).
"""

from dataclasses import dataclass, field, replace
import math

ATOMIC_MASS_UNIT = 1.66054e-27  # kg


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34   # J s
    k_B: float = 1.380649e-23       # J/K
    c: float = 299792458.0          # m/s
    m_Rb87: float = 86.909 * ATOMIC_MASS_UNIT  # kg
    I_s: float = 17.0               # W/m^2, saturation intensity, cycling transition
    Gamma_D2: float = 2 * math.pi * 6.1e6  # rad/s, D2 natural linewidth

    def __post_init__(self):
        for name, v in vars(self).items():
            if not v > 0:
                raise ValueError(f"constant {name} must be strictly positive")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class MembraneMode:
    """Fundamental drum mode of the membrane plus plate geometry."""
    Omega_m: float                  # rad/s
    Gamma_m: float                  # 1/s, energy damping rate
    M_eff: float                    # kg
    Q_m: float = None               # dimensionless; derived if omitted
    T0: float = 295.0               # K, support temperature
    rho: float = 2700.0             # kg/m^3
    thickness_d: float = 42e-9      # m
    side_l: float = 1.5e-3          # m
    n_refr: float = 2.0

    def __post_init__(self):
        if self.Q_m is None:
            object.__setattr__(self, "Q_m", self.Omega_m / self.Gamma_m)


@dataclass(frozen=True)
class CavityGeometry:
    length_L: float                 # m
    R1: float                       # intensity reflectivity, front mirror
    R2: float                       # intensity reflectivity, back mirror
    lam: float                      # m, optical wavelength
    membrane_pos_x: float = 0.0     # m, operating displacement
    omega_0: float = None           # rad/s frequency offset; default pins omega_c(lam/8)=2*pi*c/lam
    front_fraction: float = 0.5     # membrane longitudinal position as fraction of L

    @property
    def omega_FSR(self):
        return math.pi * CONSTANTS.c / self.length_L


@dataclass(frozen=True)
class AtomEnsemble:
    N_atoms: float                  # prepared atom number
    n_a: float                      # atoms/m^3 (value used in modeling)
    R_a: float                      # m, cloud radius
    Gamma_a: float                  # 1/s, laser cooling rate
    T_atoms: float = 40e-6          # K
    tau_molasses: float = 0.65      # s, 1/e atom-number lifetime
    n_a_imaging: float = None       # atoms/m^3, absorption-imaging value
    n_a_fit: float = None           # atoms/m^3, step-model fit value
    N_r_ref: float = None           # reference resonant atom number


@dataclass(frozen=True)
class CouplingBudget:
    eta2: float                     # cavity mode-coupling efficiency (intensity)
    t2: float                       # optical path transmittance (intensity)

    def __post_init__(self):
        for name in ("eta2", "t2"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")


@dataclass(frozen=True)
class LatticeParams:
    P0: float                       # W, incoming power at the atoms
    w0: float                       # m, beam waist (1/e^2 intensity radius)
    Delta_LA: float                 # rad/s, signed atom-light detuning
    k_L: float = None               # rad/m; derived from wavelength if omitted
    phi: float = 0.0                # rad, standing-wave phase from the cavity
    wavelength: float = 780e-9      # m

    def __post_init__(self):
        if self.k_L is None:
            object.__setattr__(self, "k_L", 2 * math.pi / self.wavelength)


@dataclass(frozen=True)
class LaserNoiseParams:
    S_I: float = 0.0                # 1/Hz, relative intensity noise PSD at Omega_m
    S_phidot: float = 0.0           # (rad/s)^2/Hz, frequency-noise PSD at Omega_m
    P_det: float = 0.0              # W, detection beam power
    absorbed_frac: float = 4e-6     # single-pass absorbed power fraction
    dT_abs_per_W: float = 2.3 / 16.5e-3  # K per incident watt


@dataclass(frozen=True)
class ProtocolPhase:
    """One piecewise-constant segment of the experimental sequence."""
    duration: float                 # s
    P0: float                       # W
    Gamma_a: float                  # 1/s
    atoms_present: bool = True
    n_a_decay_tau: float = math.inf  # s; atom-number 1/e time during this phase


@dataclass(frozen=True)
class ProtocolSchedule:
    phases: tuple

    def __post_init__(self):
        if any(p.duration <= 0 for p in self.phases):
            raise ValueError("phase durations must be positive")

    @property
    def total_duration(self):
        return sum(p.duration for p in self.phases)


@dataclass(frozen=True)
class ExperimentConfig:
    membrane: MembraneMode
    cavity: CavityGeometry
    atoms: AtomEnsemble
    budget: CouplingBudget
    lattice: LatticeParams
    noise: LaserNoiseParams = field(default_factory=LaserNoiseParams)
    constants: PhysicalConstants = CONSTANTS
    r_m: float = 0.42               # membrane field reflectivity magnitude
    scenario: dict = field(default_factory=dict)  # per-scenario calibration knobs

    @property
    def cloud_much_larger_than_waist(self):
        return self.atoms.R_a >= 5.0 * self.lattice.w0


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def add(self, path, message):
        self.violations.append(f"{path}: {message}")

    def __str__(self):
        return "ok" if self.ok else "\n".join(self.violations)


_REL_TOL_Q = 1e-9


def validate(config):
    """Check every invariant; violations are data, not exceptions.

    Returns a ValidationReport listing each violated constraint with its
    field path. An empty report means the config is usable by all modules.
    """
    rep = ValidationReport()
    m, cav, at, bud, lat = (config.membrane, config.cavity, config.atoms,
                            config.budget, config.lattice)

    for path, v in (("membrane.Omega_m", m.Omega_m), ("membrane.Gamma_m", m.Gamma_m),
                    ("membrane.M_eff", m.M_eff), ("membrane.rho", m.rho),
                    ("membrane.thickness_d", m.thickness_d), ("membrane.side_l", m.side_l),
                    ("membrane.T0", m.T0)):
        if not v > 0:
            rep.add(path, f"must be positive, got {v}")
    q_expected = m.Omega_m / m.Gamma_m
    if abs(m.Q_m - q_expected) > _REL_TOL_Q * q_expected:
        rep.add("membrane.Q_m", f"inconsistent with Omega_m/Gamma_m = {q_expected:.6g}, got {m.Q_m:.6g}")
    if not m.thickness_d < cav.lam / 5:
        rep.add("membrane.thickness_d", "not small compared to the wavelength")

    if not cav.length_L > 0:
        rep.add("cavity.length_L", "must be positive")
    if not (0 < cav.R1 < cav.R2 <= 1):
        rep.add("cavity.R1/R2", f"require 0 < R1 < R2 <= 1, got R1={cav.R1}, R2={cav.R2}")
    if not 0 < cav.front_fraction < 1:
        rep.add("cavity.front_fraction", "must lie strictly inside the cavity")

    for path, v in (("atoms.N_atoms", at.N_atoms), ("atoms.n_a", at.n_a),
                    ("atoms.R_a", at.R_a), ("atoms.Gamma_a", at.Gamma_a),
                    ("atoms.T_atoms", at.T_atoms), ("atoms.tau_molasses", at.tau_molasses)):
        if not v > 0:
            rep.add(path, f"must be positive, got {v}")

    if not 0 <= config.r_m < 1:
        rep.add("r_m", f"field reflectivity magnitude must lie in [0, 1), got {config.r_m}")

    if not lat.w0 > 0:
        rep.add("lattice.w0", "must be positive")
    if lat.Delta_LA == 0:
        rep.add("lattice.Delta_LA", "must be nonzero")

    n = config.noise
    for path, v in (("noise.S_I", n.S_I), ("noise.S_phidot", n.S_phidot),
                    ("noise.P_det", n.P_det), ("noise.absorbed_frac", n.absorbed_frac),
                    ("noise.dT_abs_per_W", n.dT_abs_per_W)):
        if v < 0:
            rep.add(path, f"must be non-negative, got {v}")

    return rep


def effective_mass_plate(rho, d, l):
    """Calculated effective mass rho*d*l^2/4 of a square plate's fundamental mode."""
    if not (rho > 0 and d > 0 and l > 0):
        raise ValueError("effective_mass_plate requires positive inputs")
    return rho * d * l * l / 4.0


# Measured effective mass exceeds the plate calculation by this factor for
# the baseline membrane (optical mode off the membrane's geometric centre).
MEASURED_TO_CALCULATED_MASS = 2.2
