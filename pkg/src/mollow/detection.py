"""Observables built from Floquet solutions.

The detected slowly varying field, referenced to a unit-amplitude probe, is

    A(t) = exp(i omega_d t) + eps_pump - psi * sum_n f_n exp(i n omega_d t)

where ``f_n`` are the scattered-field harmonics normalised so that a weak
resonant probe without pump gives ``f_1 = 1``.  Probe transmission is
``|1 - psi f_1|^2``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .floquet import DEFAULT_N_MAX, FloquetSolution, solve_sweep
from .model import (
    DriveConfig,
    EmitterParams,
    angular_rates,
    generalized_rabi,
    monochromatic_steady_state,
    to_angular,
)

log = logging.getLogger(__name__)

PUMP_SUPPRESSION_FIBER = 200.0


@dataclass(frozen=True)
class DetectionParams:
    psi: float = 1.0
    eps_pump: float = 0.0
    fluor_scale: float = 1.0

    def __post_init__(self):
        if not 0 <= self.psi <= 1:
            raise ValueError(f"psi must lie in [0, 1], got {self.psi}")
        if self.eps_pump < 0:
            raise ValueError("eps_pump must be >= 0")
        if self.eps_pump > 1:
            raise ValueError("pump leakage above the probe level (suppression < 1)")
        if not self.fluor_scale > 0:
            raise ValueError("fluor_scale must be > 0")

    @classmethod
    def from_dip(cls, depth: float, **kw) -> "DetectionParams":
        """Mode matching reproducing a weak-probe, pump-off dip of ``depth``."""
        return cls(psi=psi_from_dip(depth), **kw)

    @classmethod
    def fiber_filtered(cls, psi: float, suppression: float = PUMP_SUPPRESSION_FIBER) -> "DetectionParams":
        return cls(psi=psi, eps_pump=1.0 / math.sqrt(suppression))


def psi_from_dip(depth: float) -> float:
    """Psi = 1 - sqrt(1 - depth)."""
    if not 0 <= depth <= 1:
        raise ValueError(f"dip depth must lie in [0, 1], got {depth}")
    return 1.0 - math.sqrt(1.0 - depth)


@dataclass(frozen=True)
class SpectrumSeries:
    x: np.ndarray
    y: np.ndarray
    kind: str
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-D arrays of equal length")
        dx = np.diff(x)
        if x.size > 1 and not (np.all(dx > 0) or np.all(dx < 0)):
            raise ValueError("x must be strictly monotone")
        bad = ~np.isfinite(y)
        if self.kind == "contrast_db":
            bad &= ~np.isposinf(y)
        if np.any(bad):
            raise ValueError(f"non-finite {self.kind} values at x = {x[bad]}")


@dataclass(frozen=True)
class BeatMap:
    deltas: np.ndarray  # MHz
    k: np.ndarray  # harmonic orders 1..k_max
    magnitude: np.ndarray  # shape (len(deltas), len(k)), one-sided amplitude

    def db(self, floor: float = 1e-300) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(self.magnitude, floor))


@dataclass(frozen=True)
class DressedMarkers:
    """Annotation positions on the probe-pump detuning axis (MHz)."""

    lower: float
    pump: float
    upper: float
    bare_resonance: float
    stark_resonance: Optional[float]
    gain: Optional[float]

    def as_list(self) -> list[float]:
        return [self.lower, self.pump, self.upper]


def _normalisation(e: EmitterParams, omega_probe: float) -> complex:
    if omega_probe <= 0:
        raise ValueError("scattered amplitudes need a non-zero probe")
    _, gamma2 = angular_rates(e)
    return -2j * gamma2 / to_angular(omega_probe)


def scattered_amplitude(sol: FloquetSolution, e: EmitterParams, n: int) -> complex:
    """Normalised scattered field f_n at frequency nu_pump + n delta_pp."""
    if abs(n) > sol.n_max:
        raise ValueError(f"|n| = {abs(n)} exceeds n_max = {sol.n_max}")
    return _normalisation(e, sol.drive.omega_probe) * sol.coherence(n)


def _zero_beat_f1(e: EmitterParams, d: DriveConfig) -> complex:
    # co-phased fields at the same frequency act as one field; the probe's share
    # of the scattered field is the change it makes to the coherence
    both = monochromatic_steady_state(e, d.omega_pump + d.omega_probe, d.delta_pump)
    pump = monochromatic_steady_state(e, d.omega_pump, d.delta_pump)
    return _normalisation(e, d.omega_probe) * (both.coherence - pump.coherence)


def scattered_spectrum(e: EmitterParams, d: DriveConfig, deltas, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """f_n over a grid of beat detunings; shape ``(M, 2 n_max + 1)``.

    Zero beat is not a harmonic problem; there only f_1 is defined (column
    ``n_max + 1``) and every other column is NaN.
    """
    deltas = np.asarray(deltas, dtype=float)
    norm = _normalisation(e, d.omega_probe)
    out = np.full((deltas.size, 2 * n_max + 1), np.nan + 0j)
    nz = deltas != 0
    if np.any(nz):
        c, _, _ = solve_sweep(e, d, deltas[nz], n_max)
        out[nz] = norm * c
    if np.any(~nz):
        out[~nz, n_max + 1] = _zero_beat_f1(e, d)
    return out


def transmission_spectrum(
    e: EmitterParams,
    d: DriveConfig,
    deltas,
    det: DetectionParams,
    n_max: int = DEFAULT_N_MAX,
) -> SpectrumSeries:
    """Probe transmission |1 - psi f_1|^2 over the beat grid ``deltas`` (MHz).

    ``d.delta_pp`` is ignored; every other field of ``d`` is held fixed.
    """
    deltas = np.asarray(deltas, dtype=float)
    f1 = scattered_spectrum(e, d, deltas, n_max)[:, n_max + 1]
    t = np.abs(1.0 - det.psi * f1) ** 2
    return SpectrumSeries(deltas, t, "transmission", _echo(e, d, det, n_max))


def switching_contrast(
    e: EmitterParams,
    det: DetectionParams,
    pump_on: DriveConfig,
    deltas,
    n_max: int = DEFAULT_N_MAX,
) -> tuple[SpectrumSeries, SpectrumSeries, SpectrumSeries]:
    """Pump-off and pump-on transmission and their ratio in dB.

    Returns ``(t_off, t_on, contrast_db)``.  Points where T_off vanishes (ideal
    extinction with a vanishing probe) carry +inf contrast and are listed in
    ``contrast.params["unbounded_at"]``.
    """
    t_on = transmission_spectrum(e, pump_on, deltas, det, n_max)
    t_off = transmission_spectrum(e, pump_on.with_(omega_pump=0.0), deltas, det, n_max)
    with np.errstate(divide="ignore"):
        ratio = 10.0 * np.log10(t_on.y) - 10.0 * np.log10(t_off.y)
    singular = t_off.y == 0
    ratio[singular] = np.inf
    if np.any(singular):
        log.warning("T_off = 0 at delta = %s MHz; contrast unbounded", t_off.x[singular])
    params = dict(t_on.params, unbounded_at=t_off.x[singular].tolist())
    return t_off, t_on, SpectrumSeries(t_on.x, ratio, "contrast_db", params)


def fwm_power(
    e: EmitterParams,
    d: DriveConfig,
    det: DetectionParams,
    n_max: int = DEFAULT_N_MAX,
    reference: str = "probe",
) -> float:
    """Power of the mixing field at nu_probe - 2 delta_pp.

    With ``reference="probe"`` the power is |psi f_{-1}|^2, i.e. relative to the
    incident probe power.  With ``reference="gamma"`` it is quoted relative to a
    beam whose Rabi frequency equals the linewidth, which exposes the absolute
    Omega_pump^4 Omega_probe^2 growth.
    """
    if d.delta_pp == 0:
        raise ValueError("fwm_power needs a non-zero beat")
    f = scattered_spectrum(e, d, [d.delta_pp], n_max)[0, n_max - 1]
    rel = abs(det.psi * f) ** 2
    if reference == "probe":
        return rel
    if reference == "gamma":
        return rel * (d.omega_probe / e.gamma) ** 2
    raise ValueError(f"unknown reference {reference!r}")


def field_harmonics(f: np.ndarray, det: DetectionParams) -> np.ndarray:
    """Detected-field harmonics a_n (n = -N..N) from scattered harmonics f_n."""
    n_max = (f.shape[-1] - 1) // 2
    a = -det.psi * np.asarray(f, dtype=complex)
    a[..., n_max + 1] += 1.0
    a[..., n_max] += det.eps_pump
    return a


def intensity_harmonics(a: np.ndarray, k_max: int) -> np.ndarray:
    """I_k = sum_n a_{n+k} conj(a_n) for k = 1..k_max."""
    size = a.shape[-1]
    out = np.zeros(a.shape[:-1] + (k_max,), dtype=complex)
    for k in range(1, k_max + 1):
        if k < size:
            out[..., k - 1] = np.sum(a[..., k:] * np.conj(a[..., : size - k]), axis=-1)
    return out


def beat_map(
    e: EmitterParams,
    det: DetectionParams,
    pump: DriveConfig,
    deltas,
    n_max: int = DEFAULT_N_MAX,
    k_max: int = 3,
) -> BeatMap:
    """One-sided Fourier amplitudes 2|I_k| of the detected intensity at k delta_pp."""
    if k_max > n_max:
        raise ValueError("k_max must not exceed n_max")
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas == 0):
        raise ValueError("beat maps need non-zero delta values")
    f = scattered_spectrum(e, pump, deltas, n_max)
    a = field_harmonics(f, det)
    mag = 2.0 * np.abs(intensity_harmonics(a, k_max))
    return BeatMap(deltas, np.arange(1, k_max + 1), mag)


def dressed_frequencies(e: EmitterParams, pump: DriveConfig) -> DressedMarkers:
    """Dressed-state markers relative to the pump frequency.

    Sidebands sit at -/+ the generalized Rabi frequency.  The bare molecular
    line is at ``-delta_pump``; for a detuned pump the light-shifted absorption
    sits on the molecule's side at ``-sign(delta) * Omega'`` and the
    three-photon gain feature on the opposite side.
    """
    w = generalized_rabi(pump.omega_pump, pump.delta_pump)
    if pump.delta_pump == 0:
        stark = gain = None
    else:
        stark = -math.copysign(w, pump.delta_pump)
        gain = -stark
    return DressedMarkers(-w, 0.0, w, -pump.delta_pump, stark, gain)


def _echo(e, d, det, n_max) -> dict:
    return {"emitter": asdict(e), "drive": asdict(d), "detection": asdict(det), "n_max": n_max}
