"""Line-oriented config files: [section] headers, key = value pairs, # comments.

Numeric values accept unit suffixes. Frequency suffixes (Hz, kHz, MHz, GHz)
convert to angular units, i.e. "274 kHz" parses to 2*pi*274e3 rad/s; the
inverse `in_hz` divides by 2*pi exactly once for display. No general unit
algebra -- only the suffixes below.
"""

import math
import os

from .params import (AtomEnsemble, CavityGeometry, CouplingBudget, ExperimentConfig,
                     LaserNoiseParams, LatticeParams, MembraneMode)

# suffix -> (scale, angular)
_SUFFIXES = {
    "Hz": (1.0, True),
    "kHz": (1e3, True),
    "MHz": (1e6, True),
    "GHz": (1e9, True),
    "mW": (1e-3, False),
    "uW": (1e-6, False),
    "W": (1.0, False),
    "nm": (1e-9, False),
    "um": (1e-6, False),
    "mm": (1e-3, False),
    "m": (1.0, False),
    "K": (1.0, False),
    "uK": (1e-6, False),
    "ng": (1e-12, False),   # 1 ng = 1e-12 kg
    "s": (1.0, False),
}

ENV_CONFIG_DIR = "SYMCOOL_CONFIG_DIR"


class ConfigError(ValueError):
    pass


def parse_value(text):
    """Parse '16.5 mW' / '-8 GHz' / '0.57' into an SI float."""
    parts = text.strip().split()
    if len(parts) == 1:
        try:
            return float(parts[0])
        except ValueError as exc:
            raise ConfigError(f"cannot parse value {text!r}") from exc
    if len(parts) == 2:
        num, suffix = parts
        if suffix not in _SUFFIXES:
            raise ConfigError(f"unknown unit suffix {suffix!r} in {text!r}")
        scale, angular = _SUFFIXES[suffix]
        value = float(num) * scale
        return 2 * math.pi * value if angular else value
    raise ConfigError(f"cannot parse value {text!r}")


def in_hz(omega):
    """Angular frequency to Hz for display; the single 2*pi I/O division."""
    return omega / (2 * math.pi)


def read_sections(path):
    """Raw parse: dict of section -> dict of key -> SI float."""
    sections = {}
    current = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                sections.setdefault(current, {})
                continue
            if "=" not in line or current is None:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value' inside a [section]")
            key, _, val = line.partition("=")
            sections[current][key.strip()] = parse_value(val)
    return sections


def apply_overrides(sections, overrides):
    """Apply 'section.key=value' strings (CLI --set) on top of parsed sections."""
    for item in overrides:
        try:
            dotted, val = item.split("=", 1)
            section, key = dotted.strip().split(".", 1)
        except ValueError as exc:
            raise ConfigError(f"override {item!r} is not of the form section.key=value") from exc
        sections.setdefault(section, {})[key.strip()] = parse_value(val)
    return sections


def resolve_path(path):
    """Find a config file, trying $SYMCOOL_CONFIG_DIR then the repo configs/."""
    if os.path.exists(path):
        return path
    candidates = []
    env_dir = os.environ.get(ENV_CONFIG_DIR)
    if env_dir:
        candidates.append(os.path.join(env_dir, path))
    here = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    candidates.append(os.path.join(here, "configs", path))
    for cand in candidates:
        if os.path.exists(cand):
            return cand
    raise ConfigError(f"config file not found: {path!r} (tried {candidates})")


def _need(sec, name, key):
    if key not in sec:
        raise ConfigError(f"missing key {name}.{key}")
    return sec[key]


def build_config(sections):
    mem = sections.get("membrane", {})
    cav = sections.get("cavity", {})
    ats = sections.get("atoms", {})
    lat = sections.get("lattice", {})
    bud = sections.get("budget", {})
    noi = sections.get("noise", {})

    membrane = MembraneMode(
        Omega_m=_need(mem, "membrane", "frequency"),
        Gamma_m=_need(mem, "membrane", "gamma"),
        M_eff=_need(mem, "membrane", "mass"),
        Q_m=mem.get("q_factor"),
        T0=mem.get("support_temperature", 295.0),
        rho=mem.get("density", 2700.0),
        thickness_d=mem.get("thickness", 42e-9),
        side_l=mem.get("side", 1.5e-3),
        n_refr=mem.get("n_refr", 2.0),
    )
    cavity = CavityGeometry(
        length_L=_need(cav, "cavity", "length"),
        R1=_need(cav, "cavity", "R1"),
        R2=_need(cav, "cavity", "R2"),
        lam=cav.get("wavelength", 780e-9),
        membrane_pos_x=cav.get("membrane_pos", 0.0),
        front_fraction=cav.get("front_fraction", 0.5),
    )
    atoms = AtomEnsemble(
        N_atoms=ats.get("prepared_number", 2e9),
        n_a=ats.get("density", ats.get("density_fit", 4.5e15)),
        R_a=_need(ats, "atoms", "radius"),
        Gamma_a=_need(ats, "atoms", "gamma_cooling"),
        T_atoms=ats.get("temperature", 40e-6),
        tau_molasses=ats.get("molasses_lifetime", 0.65),
        n_a_imaging=ats.get("density_imaging"),
        n_a_fit=ats.get("density_fit"),
        N_r_ref=ats.get("resonant_number_ref"),
    )
    budget = CouplingBudget(eta2=_need(bud, "budget", "eta2"), t2=_need(bud, "budget", "t2"))
    lattice = LatticeParams(
        P0=_need(lat, "lattice", "power"),
        w0=_need(lat, "lattice", "waist"),
        Delta_LA=_need(lat, "lattice", "detuning"),
        wavelength=cavity.lam,
    )
    noise = LaserNoiseParams(
        S_I=noi.get("intensity_noise", 0.0),
        S_phidot=(2 * math.pi) ** 2 * noi.get("freq_noise_hz2_per_hz", 0.0),
        P_det=noi.get("detection_power", 0.0),
        absorbed_frac=noi.get("absorbed_frac", 4e-6),
        dT_abs_per_W=noi.get("dT_abs_per_W", 2.3 / 16.5e-3),
    )
    scenario = {name: dict(sec) for name, sec in sections.items()
                if name not in ("membrane", "cavity", "atoms", "lattice", "budget", "noise")}
    return ExperimentConfig(membrane=membrane, cavity=cavity, atoms=atoms,
                            budget=budget, lattice=lattice, noise=noise,
                            r_m=cav.get("r_m", 0.42), scenario=scenario)


def load_config(path, overrides=()):
    sections = read_sections(resolve_path(path))
    apply_overrides(sections, overrides)
    return build_config(sections)
