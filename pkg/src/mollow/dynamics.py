"""Time-domain optical Bloch equations under two-colour driving.

Working variables are the pump-frame coherence sigma and the excited-state
population p, evolving as

    d sigma/dt = (-i Delta - gamma2) sigma + i (W(t) / 2) (1 - 2 p)
    d p/dt     = -gamma1 p + Im[conj(W(t)) sigma]

with W(t) = 2 pi (omega_pump + omega_probe exp(i 2 pi delta_pp t)).  Times
are exposed in ns, rates are rad/us.  The classical RK4 integrator here doubles
as the brute-force oracle for :mod:`mollow.floquet`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    BlochState,
    DriveConfig,
    EmitterParams,
    angular_rates,
    generalized_rabi,
    to_angular,
)

NS = 1e-3  # ns -> us
STEPS_PER_CYCLE_MIN = 50  # stability floor
# default resolution; near a pure state RK4 at 50-100 steps per cycle can
# overshoot the 1e-9 purity slack
STEPS_PER_CYCLE = 200


class IntegrationError(RuntimeError):
    pass


class TransientError(IntegrationError):
    """The trajectory did not settle onto its periodic orbit."""


@dataclass(frozen=True)
class TimeTrace:
    times: np.ndarray  # ns
    fluorescence: np.ndarray  # photons/us, gamma1 * p
    population: np.ndarray
    rabi_envelope: np.ndarray  # |Omega(t)| in MHz
    coherence: np.ndarray | None = None
    phase: np.ndarray | None = None  # beat phase delta_pp * t, folded traces only


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float  # ns
    t_end: float  # ns
    transient_periods: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if self.transient_periods < 0:
            raise ValueError("transient_periods must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @classmethod
    def for_drive(
        cls,
        e: EmitterParams,
        d: DriveConfig,
        periods: int = 3,
        transient_periods: int | None = None,
        steps_per_cycle: int = STEPS_PER_CYCLE,
    ) -> "IntegratorConfig":
        """A configuration whose step divides the beat period exactly.

        The transient defaults to 10 beat periods or 10/gamma1, whichever is
        longer; ``periods`` settled periods follow it.  ``steps_per_cycle``
        below the stability floor of 50 is rejected.
        """
        if d.delta_pp == 0:
            raise ValueError("for_drive needs a non-zero beat")
        if steps_per_cycle < STEPS_PER_CYCLE_MIN:
            raise ValueError(f"steps_per_cycle must be >= {STEPS_PER_CYCLE_MIN}")
        period = 1e3 / abs(d.delta_pp)  # ns
        gamma1, _ = angular_rates(e)
        if transient_periods is None:
            transient_periods = max(10, math.ceil(10.0 / (gamma1 * NS) / period))
        f_max = max_frequency(e, d)
        per_period = max(2, math.ceil(steps_per_cycle * f_max * period * NS))
        per_period += per_period % 2
        dt = period / per_period
        return cls(dt=dt, t_end=period * (transient_periods + periods), transient_periods=transient_periods)


def max_frequency(e: EmitterParams, d: DriveConfig) -> float:
    """Fastest oscillation the integrator must resolve, in MHz.

    The generalized Rabi frequency is taken at the peak of the beat envelope,
    where both fields add.
    """
    peak = generalized_rabi(d.omega_pump + d.omega_probe, d.delta_pump)
    return max(abs(d.delta_pp), peak, e.gamma)


def check_step(e: EmitterParams, d: DriveConfig, cfg: IntegratorConfig) -> None:
    limit = 1e3 / (STEPS_PER_CYCLE_MIN * max_frequency(e, d))
    if cfg.dt > limit * (1 + 1e-12):
        raise ValueError(f"dt = {cfg.dt:g} ns exceeds the stability limit {limit:g} ns")


def rabi_field(d: DriveConfig, t_ns):
    """Complex combined Rabi frequency W(t) in MHz (not angular)."""
    t = np.asarray(t_ns, dtype=float) * NS
    return d.omega_pump + d.omega_probe * np.exp(2j * np.pi * d.delta_pp * t)


def bloch_rhs(state: BlochState, t: float, e: EmitterParams, d: DriveConfig) -> BlochState:
    """Time derivative of ``state`` at time ``t`` (ns), per microsecond."""
    gamma1, gamma2 = angular_rates(e)
    w = to_angular(complex(rabi_field(d, t)))
    s, p = state.coherence, state.population
    ds = (-1j * to_angular(d.delta_pump) - gamma2) * s + 0.5j * w * (1 - 2 * p)
    dp = -gamma1 * p + (w.conjugate() * s).imag
    return BlochState(ds, dp)


def integrate(
    e: EmitterParams,
    d: DriveConfig,
    cfg: IntegratorConfig,
    initial: BlochState | None = None,
) -> TimeTrace:
    """Fixed-step RK4 from t = 0 to ``cfg.t_end``, sampling every step."""
    check_step(e, d, cfg)
    if initial is None:
        initial = BlochState()
    gamma1, gamma2 = angular_rates(e)
    a = -1j * to_angular(d.delta_pump) - gamma2
    wp = to_angular(d.omega_pump)
    ws = to_angular(d.omega_probe)
    wd = to_angular(d.delta_pp)
    n = cfg.n_steps
    h = cfg.dt * NS

    times = np.arange(n + 1) * cfg.dt
    # probe phasor at every half step, so the loop does no transcendental calls
    half = np.exp(1j * wd * h * 0.5 * np.arange(2 * n + 1))
    fields = (wp + ws * half).tolist()

    coh = np.empty(n + 1, dtype=complex)
    pop = np.empty(n + 1)
    s, p = complex(initial.coherence), float(initial.population)
    coh[0], pop[0] = s, p
    hh = 0.5 * h
    for k in range(n):
        w0, w1, w2 = fields[2 * k], fields[2 * k + 1], fields[2 * k + 2]
        k1s = a * s + 0.5j * w0 * (1 - 2 * p)
        k1p = -gamma1 * p + (w0.conjugate() * s).imag
        s2, p2 = s + hh * k1s, p + hh * k1p
        k2s = a * s2 + 0.5j * w1 * (1 - 2 * p2)
        k2p = -gamma1 * p2 + (w1.conjugate() * s2).imag
        s3, p3 = s + hh * k2s, p + hh * k2p
        k3s = a * s3 + 0.5j * w1 * (1 - 2 * p3)
        k3p = -gamma1 * p3 + (w1.conjugate() * s3).imag
        s4, p4 = s + h * k3s, p + h * k3p
        k4s = a * s4 + 0.5j * w2 * (1 - 2 * p4)
        k4p = -gamma1 * p4 + (w2.conjugate() * s4).imag
        s = s + h / 6 * (k1s + 2 * k2s + 2 * k3s + k4s)
        p = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        coh[k + 1], pop[k + 1] = s, p
    if not (np.all(np.isfinite(pop)) and np.all(np.isfinite(coh))):
        raise IntegrationError("integration diverged")
    envelope = np.abs(rabi_field(d, times))
    return TimeTrace(times, gamma1 * pop, pop, envelope, coh)


def _period_samples(trace: TimeTrace, d: DriveConfig) -> tuple[float, int]:
    period = 1e3 / abs(d.delta_pp)
    dt = trace.times[1] - trace.times[0]
    per = period / dt
    return period, int(round(per)) if abs(per - round(per)) < 1e-9 * per else 0


def folded_trace(trace: TimeTrace, d: DriveConfig, cfg: IntegratorConfig, n_phase: int | None = None) -> TimeTrace:
    """Average the settled periods of ``trace`` onto one beat period.

    The first ``cfg.transient_periods`` periods are dropped.  The phase axis is
    ``|delta_pp| * t`` shifted so that phase 0 falls on the zero of the beat
    envelope (fields in antiphase); ``times`` of the result are measured from
    that zero.  When the step divides the period into an even number of samples
    the data are folded directly, otherwise each period is linearly
    interpolated onto a uniform grid of ``n_phase`` points.
    """
    if d.delta_pp == 0:
        raise ValueError("folding needs a non-zero beat")
    period, per = _period_samples(trace, d)
    t0 = cfg.transient_periods * period
    n_periods = int(math.floor((trace.times[-1] - t0) / period + 1e-9))
    if n_periods < 1:
        raise IntegrationError(
            f"trace of {trace.times[-1]:g} ns is shorter than "
            f"{cfg.transient_periods} + 1 beat periods ({period:g} ns each)"
        )
    if per and per % 2 == 0 and n_phase is None:
        i0 = int(round(t0 / (trace.times[1] - trace.times[0])))
        sl = slice(i0, i0 + n_periods * per)
        n_phase = per

        def fold(y):
            return y[sl].reshape(n_periods, per).mean(axis=0)
    else:
        n_phase = n_phase or max(256, per + per % 2)
        if n_phase % 2:
            raise ValueError("n_phase must be even")
        grid = np.arange(n_phase) * period / n_phase

        def fold(y):
            acc = np.zeros(n_phase, dtype=np.result_type(y, float))
            for j in range(n_periods):
                tj = t0 + j * period + grid
                if np.iscomplexobj(y):
                    acc += np.interp(tj, trace.times, y.real) + 1j * np.interp(tj, trace.times, y.imag)
                else:
                    acc += np.interp(tj, trace.times, y)
            return acc / n_periods

    # envelope zero sits half a period after every whole period (co-phased fields)
    half = n_phase // 2

    def roll(y):
        return None if y is None else np.roll(fold(y), -half)

    phase = np.arange(n_phase) / n_phase
    return TimeTrace(
        times=phase * period,
        fluorescence=roll(trace.fluorescence),
        population=roll(trace.population),
        rabi_envelope=roll(trace.rabi_envelope),
        coherence=roll(trace.coherence),
        phase=phase,
    )


def steady_harmonics_oracle(
    e: EmitterParams,
    d: DriveConfig,
    cfg: IntegratorConfig | None = None,
    n_max: int = 10,
    tol: float = 1e-8,
    max_periods: int = 400,
):
    """Harmonics of the periodic steady state by brute-force integration.

    Integrates period by period until the mean population changes by less than
    ``tol`` between consecutive periods, then projects the last period onto
    ``exp(i n omega_d t)``.  The step must divide the beat period.

    Returns ``(c, p)`` with ``c`` for n = -n_max..n_max and ``p`` for
    n = -n_max..n_max.
    """
    if d.delta_pp == 0:
        raise ValueError("the oracle needs a non-zero beat")
    if cfg is None:
        cfg = IntegratorConfig.for_drive(e, d, periods=1, steps_per_cycle=200)
    period = 1e3 / abs(d.delta_pp)
    per = period / cfg.dt
    if abs(per - round(per)) > 1e-9 * per:
        raise ValueError("dt must divide the beat period for the oracle")
    per = int(round(per))
    one = IntegratorConfig(cfg.dt, period, 0)
    # transient first, then period by period
    warm = IntegratorConfig(cfg.dt, period * max(cfg.transient_periods, 1), 0)
    tr = integrate(e, d, warm)
    state = BlochState(tr.coherence[-1], tr.population[-1])
    last = None
    for _ in range(max_periods):
        # each call starts on a whole number of periods, so restarting at t = 0 is exact
        tr = integrate(e, d, one, state)
        mean = tr.population[:-1].mean()
        state = BlochState(tr.coherence[-1], tr.population[-1])
        if last is not None and abs(mean - last) < tol:
            break
        last = mean
    else:
        raise TransientError(f"no settled orbit after {max_periods} periods for {d}")
    n = np.arange(-n_max, n_max + 1)
    ph = np.exp(-2j * np.pi * np.outer(n, np.arange(per)) / per)
    if d.delta_pp < 0:
        ph = ph.conj()
    c = ph @ tr.coherence[:-1] / per
    p = ph @ tr.population[:-1] / per
    return c, p


def population_decay(e: EmitterParams, t_ns, p0: float = 1.0) -> np.ndarray:
    """Free spontaneous decay p0 * exp(-gamma1 t) with no fields applied."""
    gamma1, _ = angular_rates(e)
    return p0 * np.exp(-gamma1 * np.asarray(t_ns, dtype=float) * NS)
