"""Physical parameters and unit conversions for a colliding atom pair.

All derived quantities are in Hartree atomic units. Default species values
are literature-scale numbers for a Rb-like pair; they are configuration
inputs, not ground truth, and exact potentials differ between sources.
"""

import math
from dataclasses import dataclass, field

from .constants import FIELD_AU_PER_KVCM, KB_AU_PER_K, ME_PER_AMU


def field_to_au(strength_kvcm):
    """Convert a dc field from kV/cm to atomic units (linear)."""
    if strength_kvcm < 0:
        raise ValueError(f"field must be >= 0 kV/cm, got {strength_kvcm}")
    return strength_kvcm * FIELD_AU_PER_KVCM


def temperature_to_energy(t_nk):
    """Collision energy (a.u.) for a temperature given in nK."""
    if t_nk <= 0:
        raise ValueError(f"temperature must be positive, got {t_nk} nK")
    return t_nk * 1e-9 * KB_AU_PER_K


def energy_to_temperature(e_au):
    """Inverse of :func:`temperature_to_energy` (result in nK)."""
    return e_au / (1e-9 * KB_AU_PER_K)


def amu_to_au(mass_amu):
    """Atomic mass in amu to electron masses."""
    return mass_amu * ME_PER_AMU


def characteristic_length(n, c_n, mu):
    """Length scale beta_n = (2 mu C_n)^(1/(n-2)) of a -C_n/R^n tail.

    Only the tails actually used by the quantum-defect layer are supported
    (n = 3 and n = 6).
    """
    if n not in (3, 6):
        raise ValueError(f"unsupported tail power n={n}")
    if c_n <= 0:
        raise ValueError(f"tail coefficient must be positive, got {c_n}")
    return (2.0 * mu * c_n) ** (1.0 / (n - 2))


@dataclass(frozen=True)
class SystemParams:
    """Masses, dispersion coefficients and polarizabilities, all in a.u.

    ``mu`` is the reduced mass (M/2 for identical atoms). ``target_a_sc``
    is the zero-field s-wave scattering length the short-range model is
    tuned to reproduce, in units of a0.
    """

    mu: float
    c6: float
    c8: float = 0.0
    c10: float = 0.0
    alpha_a: float = 319.2
    alpha_b: float = 319.2
    target_a_sc: float = 100.0
    label: str = ""

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("reduced mass must be positive")
        if self.c6 <= 0:
            raise ValueError("c6 must be positive")
        if self.alpha_a <= 0 or self.alpha_b <= 0:
            raise ValueError("polarizabilities must be positive")

    @classmethod
    def rb85_like(cls, target_a_sc=100.0):
        """Approximate Rb-85 pair defaults (dispersion values literature-scale,
        not tied to any particular published potential)."""
        mass = amu_to_au(84.911789732)
        return cls(
            mu=mass / 2.0,
            c6=4700.0,
            c8=5.5e5,
            c10=7.7e7,
            alpha_a=319.2,
            alpha_b=319.2,
            target_a_sc=target_a_sc,
            label="Rb85-like",
        )


def induced_dipole_coefficient(field, params):
    """C_E = 2 E^2 alpha_A alpha_B, strength of the induced dipole term."""
    return 2.0 * field.strength_au**2 * params.alpha_a * params.alpha_b


@dataclass(frozen=True)
class FieldSpec:
    """A dc field strength together with its derived a.u. quantities."""

    strength_kvcm: float
    strength_au: float
    c_e: float

    @classmethod
    def from_kvcm(cls, strength_kvcm, params):
        au = field_to_au(strength_kvcm)
        c_e = 2.0 * au**2 * params.alpha_a * params.alpha_b
        return cls(strength_kvcm=strength_kvcm, strength_au=au, c_e=c_e)

    @classmethod
    def zero(cls):
        return cls(strength_kvcm=0.0, strength_au=0.0, c_e=0.0)


@dataclass(frozen=True)
class EnergySpec:
    """Collision energy in nK bookkeeping plus derived a.u. energy and k."""

    temperature_nk: float
    e_au: float
    k: float

    @classmethod
    def from_nk(cls, t_nk, mu):
        e = temperature_to_energy(t_nk)
        return cls(temperature_nk=t_nk, e_au=e, k=math.sqrt(2.0 * mu * e))

    @classmethod
    def from_au(cls, e_au, mu):
        if e_au <= 0:
            raise ValueError("scattering energy must be positive")
        return cls(
            temperature_nk=energy_to_temperature(e_au),
            e_au=e_au,
            k=math.sqrt(2.0 * mu * e_au),
        )
