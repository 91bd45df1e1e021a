import math
from typing import Annotated, Self

from pydantic import Field, PositiveFloat, model_validator
from scipy import constants

from .base import FrozenModel

TwoPi = 2.0 * math.pi


class AtomicParams(FrozenModel):
    """Atomic and laser constants of the four-level EIT ladder.

    Rates and detunings are angular (rad/s). Defaults reproduce the Rb
    ladder parameter set used throughout the studies, with an on-resonance
    RF field.
    """

    atom_density: Annotated[
        PositiveFloat,
        Field(description="N_a, atoms per m^3"),
    ] = 4.13e13
    probe_dipole: Annotated[
        PositiveFloat,
        Field(description="μ_p, C·m"),
    ] = 1.06e-29
    rf_dipole: Annotated[
        PositiveFloat,
        Field(description="μ_RF, C·m"),
    ] = 7.85e-26
    decay_21: Annotated[
        PositiveFloat,
        Field(description="γ21, rad/s"),
    ] = TwoPi * 6.066e6
    coupling_rabi: Annotated[
        PositiveFloat,
        Field(description="Ω_c, rad/s"),
    ] = TwoPi * 40e6
    probe_detuning: Annotated[
        float,
        Field(description="Δ_p, rad/s"),
    ] = 0.0
    coupling_detuning: Annotated[
        float,
        Field(description="Δ_c, rad/s"),
    ] = TwoPi * 10e3
    rf_detuning: Annotated[
        float,
        Field(description="Δ_RF, rad/s"),
    ] = 0.0
    probe_wavelength: Annotated[
        PositiveFloat,
        Field(description="λ_pr, m"),
    ] = 780.24e-9
    vacuum_permittivity: PositiveFloat = constants.epsilon_0
    reduced_planck: PositiveFloat = constants.hbar

    @model_validator(mode="after")
    def check_rf_detuning(self) -> Self:
        if self.coupling_detuning + self.rf_detuning == 0.0:
            raise ValueError(
                "coupling_detuning + rf_detuning must be nonzero",
            )
        return self

    @property
    def probe_wavenumber(self) -> float:
        return TwoPi / self.probe_wavelength

    @property
    def susceptibility_prefactor(self) -> float:
        """2π N_a μ_p² / (ε0 ħ)."""
        return (
            TwoPi
            * self.atom_density
            * self.probe_dipole**2
            / (self.vacuum_permittivity * self.reduced_planck)
        )

    @property
    def coupling_quarter(self) -> float:
        """Ω_c² / 4."""
        return self.coupling_rabi**2 / 4.0
