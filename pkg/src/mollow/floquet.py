"""Harmonic-balance steady state of the bichromatically driven Bloch equations.

The periodic steady state is expanded in harmonics of the pump-probe beat
``omega_d = 2*pi*delta_pp``::

    sigma(t) = sum_n c_n exp(i n omega_d t),   n = -N..N
    p(t)     = sum_n p_n exp(i n omega_d t),   p_{-n} = conj(p_n)

Matching coefficients of the Bloch equations (see :func:`mollow.dynamics.bloch_rhs`)
gives, for every n,

    (gamma2 + i(n omega_d + Delta)) c_n + i Wp p_n + i Ws p_{n-1}
        = (i/2) (Wp [n == 0] + Ws [n == 1])
    (gamma1 + i n omega_d) p_n
        + (i/2) (Wp c_n + Ws c_{n+1} - Wp conj(c_{-n}) - Ws conj(c_{1-n})) = 0

with Wp, Ws the pump and probe Rabi rates.  The unknowns are split into real
and imaginary parts so that ``p_{-n} = conj(p_n)`` holds by construction and
the system is real and square: 2(2N+1) coherence reals, one real p_0 and 2N
reals for p_1..p_N.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .model import DriveConfig, EmitterParams, angular_rates, to_angular

log = logging.getLogger(__name__)

DEFAULT_N_MAX = 10
TRUNCATION_PROBE = 5
TRUNCATION_RTOL = 1e-8


class FloquetError(RuntimeError):
    """The balance system could not be solved."""


@dataclass(frozen=True)
class FloquetSolution:
    n_max: int
    c: np.ndarray  # c_n for n = -n_max..n_max
    p: np.ndarray  # p_n for n = 0..n_max
    drive: DriveConfig
    residual: float
    truncation_warning: bool = False
    truncation_change: float = field(default=0.0, compare=False)

    def coherence(self, n: int) -> complex:
        if abs(n) > self.n_max:
            return 0j
        return complex(self.c[n + self.n_max])

    def population(self, n: int) -> complex:
        if abs(n) > self.n_max:
            return 0j
        if n >= 0:
            return complex(self.p[n])
        return complex(np.conj(self.p[-n]))

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def p_full(self) -> np.ndarray:
        """p_n for n = -n_max..n_max."""
        return np.concatenate([np.conj(self.p[:0:-1]), self.p])

    @property
    def tail(self) -> float:
        """Largest magnitude among the outermost harmonics."""
        return max(abs(self.c[0]), abs(self.c[-1]), abs(self.p[-1]))


def _layout(n_max: int):
    """Complex coefficient rows expressing each unknown in the real vector u.

    Returns ``(C, P)`` where ``C[n + N] @ u == c_n`` and ``P[n + N] @ u == p_n``
    for n = -N..N.
    """
    n_c = 2 * n_max + 1
    size = 2 * n_c + 1 + 2 * n_max
    C = np.zeros((n_c, size), dtype=complex)
    for k in range(n_c):
        C[k, 2 * k] = 1.0
        C[k, 2 * k + 1] = 1j
    P = np.zeros((n_c, size), dtype=complex)
    p0 = 2 * n_c
    P[n_max, p0] = 1.0
    for n in range(1, n_max + 1):
        re, im = p0 + 2 * n - 1, p0 + 2 * n
        P[n_max + n, re], P[n_max + n, im] = 1.0, 1j
        P[n_max - n, re], P[n_max - n, im] = 1.0, -1j
    return C, P


@lru_cache(maxsize=32)
def _skeleton(n_max: int):
    C, P = _layout(n_max)
    zero = np.zeros(C.shape[1], dtype=complex)

    def c(n):
        return C[n + n_max] if abs(n) <= n_max else zero

    def p(n):
        return P[n + n_max] if abs(n) <= n_max else zero

    return C, P, c, p


def assemble(e: EmitterParams, d: DriveConfig, n_max: int, omega_d=None):
    """Real balance matrices for one drive, optionally batched over beat rates.

    Parameters
    ----------
    omega_d : array_like, optional
        Beat angular rates (rad/us).  Defaults to the one implied by
        ``d.delta_pp``.  When an array of shape ``(M,)`` is given the
        returned matrix has shape ``(M, K, K)``.

    Returns
    -------
    A, b : ndarray
        ``A @ u = b`` with u the real unknown vector.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    C, P, c, p = _skeleton(n_max)
    gamma1, gamma2 = angular_rates(e)
    delta = to_angular(d.delta_pump)
    wp = to_angular(d.omega_pump)
    ws = to_angular(d.omega_probe)
    size = C.shape[1]

    # static part and the part proportional to omega_d, as complex rows
    coh_static, coh_beat, coh_rhs = [], [], []
    for n in range(-n_max, n_max + 1):
        coh_static.append((gamma2 + 1j * delta) * c(n) + 1j * wp * p(n) + 1j * ws * p(n - 1))
        coh_beat.append(1j * n * c(n))
        coh_rhs.append(0.5j * (wp * (n == 0) + ws * (n == 1)))
    pop_static, pop_beat = [], []
    for n in range(0, n_max + 1):
        pop_static.append(
            gamma1 * p(n)
            + 0.5j * (wp * c(n) + ws * c(n + 1) - wp * np.conj(c(-n)) - ws * np.conj(c(1 - n)))
        )
        pop_beat.append(1j * n * p(n))

    def realify(rows):
        rows = np.asarray(rows)
        # n = 0 population equation is real; its imaginary part is dropped
        return np.concatenate([rows[:, None].real, rows[:, None].imag], axis=1).reshape(-1, size)

    static = np.vstack([realify(coh_static), realify(pop_static)])
    beat = np.vstack([realify(coh_beat), realify(pop_beat)])
    rhs_c = np.asarray(coh_rhs)
    rhs = np.concatenate([np.stack([rhs_c.real, rhs_c.imag], axis=1).ravel(), np.zeros(2 * n_max + 2)])
    drop = 2 * (2 * n_max + 1) + 1  # Im part of the n = 0 population equation
    keep = np.ones(static.shape[0], dtype=bool)
    keep[drop] = False
    static, beat, rhs = static[keep], beat[keep], rhs[keep]

    if omega_d is None:
        omega_d = to_angular(d.delta_pp)
    omega_d = np.asarray(omega_d, dtype=float)
    A = static + omega_d[..., None, None] * beat
    return A, rhs


def _unpack(u: np.ndarray, n_max: int):
    C, P, _, _ = _skeleton(n_max)
    c = u @ C.T
    p = (u @ P.T)[..., n_max:]
    return c, p


def _solve_dense(A, b):
    try:
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FloquetError(str(exc)) from exc
    if np.any(np.diag(lu) == 0):
        raise FloquetError("singular balance system")
    return scipy.linalg.lu_solve((lu, piv), b)


def _check_drive(d: DriveConfig, n_max: int):
    if d.delta_pp == 0:
        raise ValueError("delta_pp must be non-zero; use monochromatic_steady_state at zero beat")
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")


def _solve_raw(e, d, n_max):
    A, b = assemble(e, d, n_max)
    try:
        u = _solve_dense(A, b)
    except FloquetError as exc:
        raise FloquetError(f"{exc} for {e}, {d}, n_max={n_max}") from None
    residual = float(np.max(np.abs(A @ u - b)))
    c, p = _unpack(u, n_max)
    return c, p, residual


def floquet_solve(
    e: EmitterParams,
    d: DriveConfig,
    n_max: int = DEFAULT_N_MAX,
    check_truncation: bool = True,
) -> FloquetSolution:
    """Solve the truncated harmonic balance for one drive configuration.

    ``truncation_warning`` is set when the outermost harmonics exceed 1e-8 of
    the largest coherence harmonic, or, with ``check_truncation``, when
    re-solving at ``n_max + 5`` changes c_1 by more than 1e-8 (relative).
    """
    _check_drive(d, n_max)
    c, p, residual = _solve_raw(e, d, n_max)
    scale = float(np.max(np.abs(c)))
    tail = max(abs(c[0]), abs(c[-1]), abs(p[-1]))
    warn = tail > TRUNCATION_RTOL * scale
    change = 0.0
    if check_truncation:
        c_big, _, _ = _solve_raw(e, d, n_max + TRUNCATION_PROBE)
        ref = c_big[n_max + TRUNCATION_PROBE + 1]
        new = c[n_max + 1]
        change = float(abs(new - ref) / abs(ref)) if ref != 0 else float(abs(new))
        warn = warn or change > TRUNCATION_RTOL
    if warn:
        log.warning(
            "n_max=%d may be too small for %s (tail %.2e of scale, c_1 change %.2e)",
            n_max, d, tail / scale if scale else 0.0, change,
        )
    return FloquetSolution(n_max, c, p, d, residual, warn, change)


def solve_sweep(
    e: EmitterParams,
    d: DriveConfig,
    deltas,
    n_max: int = DEFAULT_N_MAX,
    check_truncation: bool = False,
):
    """Harmonic coefficients for a whole grid of beat detunings at once.

    Returns ``(c, p, residual)`` with shapes ``(M, 2N+1)``, ``(M, N+1)`` and
    ``(M,)``.  Every grid point is solved as an independent dense LU system, so
    results do not depend on how a grid is chunked.
    """
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas == 0):
        raise ValueError("delta grid contains 0; handle it with the monochromatic branch")
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    A, b = assemble(e, d, n_max, omega_d=to_angular(deltas))
    u = np.empty(A.shape[:-1])
    for i in range(A.shape[0]):
        try:
            u[i] = _solve_dense(A[i], b)
        except FloquetError as exc:
            raise FloquetError(f"{exc} at delta_pp={deltas[i]!r} MHz") from None
    residual = np.max(np.abs(np.einsum("mij,mj->mi", A, u) - b), axis=1)
    c, p = _unpack(u, n_max)
    if check_truncation:
        c_big, _, _ = solve_sweep(e, d, deltas, n_max + TRUNCATION_PROBE)
        ref = c_big[:, n_max + TRUNCATION_PROBE + 1]
        change = np.abs(c[:, n_max + 1] - ref) / np.maximum(np.abs(ref), 1e-300)
        bad = change > TRUNCATION_RTOL
        if np.any(bad):
            log.warning(
                "truncation at n_max=%d insufficient at %d of %d grid points (worst %.2e)",
                n_max, int(bad.sum()), bad.size, float(change.max()),
            )
    return c, p, residual


def coherence_time_series(sol: FloquetSolution, phases, which: str = "coherence") -> np.ndarray:
    """Evaluate the truncated Fourier sum at beat phases ``delta_pp * t``.

    ``which`` selects the coherence (complex) or the population series.
    """
    phases = np.asarray(phases, dtype=float)
    n = sol.orders
    if which == "coherence":
        coeffs = sol.c
    elif which == "population":
        coeffs = sol.p_full
    else:
        raise ValueError(f"unknown series {which!r}")
    return np.exp(2j * np.pi * np.multiply.outer(phases, n)) @ coeffs
