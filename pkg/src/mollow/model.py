"""Shared parameter types and unit conventions.

Frequencies handed in by users are in MHz (cycles per microsecond).  Internally
the Bloch equations run on angular rates in rad/us; :func:`angular_rates` and
:func:`to_angular` are the only places that multiply by 2*pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

TWO_PI = 2.0 * math.pi

# slack on the positivity bound |rho_01|^2 <= rho_ee * (1 - rho_ee)
PURITY_TOL = 1e-9


def to_angular(f_mhz):
    """MHz -> rad/us.  Works on scalars and numpy arrays."""
    return TWO_PI * f_mhz


@dataclass(frozen=True)
class EmitterParams:
    """A two-level emitter (the zero-phonon line of a single molecule).

    Attributes
    ----------
    gamma : float
        Natural linewidth (FWHM) in MHz.
    nu_mol_offset : float
        Molecular resonance relative to the pump frequency in MHz, so the pump
        detuning is ``-nu_mol_offset`` (see :attr:`pump_detuning`).
    branching : float
        Fraction of excited-state decay going into the zero-phonon line.
    wavelength : float, optional
        Transition wavelength in nm, only needed for cross sections.
    """

    gamma: float = 20.0
    nu_mol_offset: float = 0.0
    branching: float = 0.5
    wavelength: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not 0 < self.branching <= 1:
            raise ValueError(f"branching must lie in (0, 1], got {self.branching}")
        if self.wavelength is not None and not self.wavelength > 0:
            raise ValueError(f"wavelength must be > 0, got {self.wavelength}")

    @property
    def pump_detuning(self) -> float:
        return -self.nu_mol_offset


@dataclass(frozen=True)
class DriveConfig:
    """Pump and probe fields, all in MHz.

    ``delta_pump`` is nu_pump - nu_mol and ``delta_pp`` is nu_probe - nu_pump.
    Both fields are real (co-phased at t = 0).
    """

    omega_pump: float = 0.0
    omega_probe: float = 0.0
    delta_pump: float = 0.0
    delta_pp: float = 0.0

    def __post_init__(self):
        if self.omega_pump < 0 or self.omega_probe < 0:
            raise ValueError("Rabi frequencies must be non-negative")

    def with_(self, **changes) -> "DriveConfig":
        return replace(self, **changes)

    @property
    def probe_detuning(self) -> float:
        """nu_probe - nu_mol in MHz."""
        return self.delta_pump + self.delta_pp


@dataclass(frozen=True)
class BlochState:
    """Slowly varying coherence (pump frame) and excited-state population."""

    coherence: complex = 0j
    population: float = 0.0

    def check(self, tol: float = PURITY_TOL) -> None:
        p = self.population
        if not -tol <= p <= 1 + tol:
            raise ValueError(f"population {p} outside [0, 1]")
        if abs(self.coherence) ** 2 > p * (1 - p) + tol:
            raise ValueError(
                f"|coherence|^2 = {abs(self.coherence) ** 2:.3e} exceeds "
                f"p(1-p) = {p * (1 - p):.3e}"
            )

    @property
    def is_physical(self) -> bool:
        try:
            self.check()
        except ValueError:
            return False
        return True


def angular_rates(e: EmitterParams) -> tuple[float, float]:
    """Population and coherence decay rates ``(gamma1, gamma2)`` in rad/us.

    Dephasing is purely radiative, so ``gamma2 = gamma1 / 2``.
    """
    gamma1 = to_angular(e.gamma)
    return gamma1, 0.5 * gamma1


def saturation_parameter(omega: float, delta: float, gamma: float) -> float:
    """S = omega^2 / (2 (delta^2 + gamma^2 / 4)), all inputs in MHz."""
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    return omega * omega / (2.0 * (delta * delta + gamma * gamma / 4.0))


def monochromatic_steady_state(e: EmitterParams, omega: float, delta: float) -> BlochState:
    """Steady state under a single field of Rabi frequency ``omega`` detuned by ``delta`` (MHz).

    The coherence is the fixed point of the Bloch equations in
    :mod:`mollow.dynamics` with the probe switched off.
    """
    if omega < 0:
        raise ValueError("omega must be non-negative")
    s = saturation_parameter(omega, delta, e.gamma)
    if math.isinf(s):
        return BlochState(0j, 0.5)
    _, gamma2 = angular_rates(e)
    pop = s / (2.0 * (1.0 + s))
    coh = 0.5j * to_angular(omega) / ((gamma2 + 1j * to_angular(delta)) * (1.0 + s))
    return BlochState(complex(coh), pop)


def generalized_rabi(omega_pump: float, delta_pump: float) -> float:
    """Dressed-state splitting sqrt(omega^2 + delta^2) in MHz."""
    return math.hypot(omega_pump, delta_pump)
