"""Least-squares fitting of probe transmission spectra.

The forward model is the Floquet transmission multiplied by a linear baseline
and evaluated on a shifted detuning axis::

    T_model(delta) = (offset + slope * delta) * T(delta + shift)

Minimisation is a damped Gauss-Newton (Levenberg-Marquardt) loop with a
central finite-difference Jacobian.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .detection import DetectionParams, SpectrumSeries, transmission_spectrum
from .floquet import DEFAULT_N_MAX
from .model import DriveConfig, EmitterParams

log = logging.getLogger(__name__)

MAX_ITER = 200
LAMBDA0 = 1e-3
LAMBDA_MAX = 1e16
REL_STEP = 1e-6
COST_RTOL = 1e-10
STEP_ATOL = 1e-12
MAX_SOLVE_FAILURES = 10


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelParams:
    gamma: float = 20.0
    delta_pump: float = 0.0
    omega_pump: float = 0.0
    omega_probe: float = 1.0
    psi: float = 1.0
    eps_pump: float = 0.0
    baseline_offset: float = 1.0
    baseline_slope: float = 0.0
    delta_axis_shift: float = 0.0

    def emitter(self) -> EmitterParams:
        return EmitterParams(gamma=self.gamma)

    def drive(self) -> DriveConfig:
        return DriveConfig(self.omega_pump, self.omega_probe, self.delta_pump, 0.0)

    def detection(self) -> DetectionParams:
        return DetectionParams(psi=self.psi, eps_pump=self.eps_pump)


PARAM_NAMES = tuple(f.name for f in fields(ModelParams))

DEFAULT_BOUNDS = {
    "gamma": (1e-6, np.inf),
    "delta_pump": (-np.inf, np.inf),
    "omega_pump": (0.0, np.inf),
    "omega_probe": (1e-9, np.inf),
    "psi": (0.0, 1.0),
    "eps_pump": (0.0, 1.0),
    "baseline_offset": (-np.inf, np.inf),
    "baseline_slope": (-np.inf, np.inf),
    "delta_axis_shift": (-np.inf, np.inf),
}


@dataclass(frozen=True)
class FitProblem:
    data: SpectrumSeries
    free_params: tuple[str, ...]
    initial_guess: ModelParams
    bounds: dict = field(default_factory=dict)
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        unknown = set(self.free_params) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown fit parameters: {sorted(unknown)}")
        if len(set(self.free_params)) != len(self.free_params):
            raise ValueError("duplicate fit parameters")
        if self.data.x.size < 2 * len(self.free_params):
            raise ValueError(
                f"{self.data.x.size} data points cannot constrain {len(self.free_params)} parameters"
            )
        for name in self.free_params:
            lo, hi = self.bound(name)
            v = getattr(self.initial_guess, name)
            if not lo <= v <= hi:
                raise ValueError(f"initial {name} = {v} outside bounds [{lo}, {hi}]")

    def bound(self, name: str) -> tuple[float, float]:
        lo, hi = self.bounds.get(name, DEFAULT_BOUNDS[name])
        dlo, dhi = DEFAULT_BOUNDS[name]
        return max(lo, dlo), min(hi, dhi)


@dataclass
class FitResult:
    estimates: ModelParams
    cost: float
    iterations: int
    converged: bool
    covariance: np.ndarray
    per_point_residuals: np.ndarray
    free_params: tuple[str, ...] = ()
    message: str = ""
    provenance: dict = field(default_factory=dict)
    history: list = field(default_factory=list)  # cost after each accepted step

    def stderr(self) -> dict:
        return {n: float(np.sqrt(max(self.covariance[i, i], 0.0))) for i, n in enumerate(self.free_params)}


def forward_model(params: ModelParams, deltas, n_max: int = DEFAULT_N_MAX) -> SpectrumSeries:
    deltas = np.asarray(deltas, dtype=float)
    t = transmission_spectrum(
        params.emitter(), params.drive(), deltas + params.delta_axis_shift, params.detection(), n_max
    ).y
    y = (params.baseline_offset + params.baseline_slope * deltas) * t
    return SpectrumSeries(deltas, y, "transmission", {"model": asdict(params), "n_max": n_max})


def synthetic_data(
    params: ModelParams,
    deltas,
    noise: float = 0.0,
    seed: int = 0,
    n_max: int = DEFAULT_N_MAX,
) -> SpectrumSeries:
    """Model spectrum with additive Gaussian noise of ``noise * T`` per point.

    Noise comes from ``numpy.random.default_rng(seed)`` (PCG64); the seed and
    generator are recorded in ``params["noise"]``.
    """
    clean = forward_model(params, deltas, n_max)
    rng = np.random.default_rng(seed)
    y = clean.y + noise * clean.y * rng.standard_normal(clean.y.size)
    prov = dict(clean.params, noise={"relative_sigma": noise, "seed": seed, "rng": "numpy.default_rng/PCG64"})
    return SpectrumSeries(clean.x, y, "transmission", prov)


class _Objective:
    def __init__(self, problem: FitProblem):
        self.problem = problem
        self.names = problem.free_params
        self.lo = np.array([problem.bound(n)[0] for n in self.names], dtype=float)
        self.hi = np.array([problem.bound(n)[1] for n in self.names], dtype=float)
        self.n_evals = 0

    def params(self, x) -> ModelParams:
        return replace(self.problem.initial_guess, **dict(zip(self.names, map(float, x))))

    def clip(self, x):
        return np.clip(x, self.lo, self.hi)

    def residuals(self, x) -> np.ndarray:
        self.n_evals += 1
        model = forward_model(self.params(x), self.problem.data.x, self.problem.n_max)
        return model.y - self.problem.data.y

    def jacobian(self, x, rel_step: float = REL_STEP) -> np.ndarray:
        cols = []
        for j in range(x.size):
            h = rel_step * max(abs(x[j]), 1.0) if x[j] == 0 else rel_step * abs(x[j])
            xp, xm = x.copy(), x.copy()
            xp[j] = min(x[j] + h, self.hi[j])
            xm[j] = max(x[j] - h, self.lo[j])
            cols.append((self.residuals(xp) - self.residuals(xm)) / (xp[j] - xm[j]))
        return np.column_stack(cols) if cols else np.zeros((self.problem.data.x.size, 0))


def _covariance(J, cost, m):
    n = J.shape[1]
    if n == 0:
        return np.zeros((0, 0))
    dof = max(m - n, 1)
    cov = (cost / dof) * np.linalg.pinv(J.T @ J)
    return 0.5 * (cov + cov.T)


def fit(problem: FitProblem) -> FitResult:
    """Levenberg-Marquardt fit of ``problem``.

    Damping starts at 1e-3 and is multiplied by 10 on a rejected step and
    divided by 10 on an accepted one.  Steps are projected onto the box bounds.
    Stops when the relative cost change of an accepted step drops below 1e-10,
    when a step's max-norm drops below 1e-12, or after 200 iterations.
    """
    obj = _Objective(problem)
    x = obj.clip(np.array([getattr(problem.initial_guess, n) for n in obj.names], dtype=float))
    r = obj.residuals(x)
    cost = float(r @ r)
    m = r.size
    prov = {"noise": problem.data.params.get("noise")} if isinstance(problem.data.params, dict) else {}

    if not obj.names:
        return FitResult(obj.params(x), cost, 0, True, np.zeros((0, 0)), r, (), "no free parameters", prov, [cost])

    lam = LAMBDA0
    converged, message = False, "iteration limit reached"
    iterations = 0
    failures = 0
    history = [cost]
    J = obj.jacobian(x)
    while iterations < MAX_ITER:
        iterations += 1
        g = J.T @ r
        H = J.T @ J
        d = np.diag(H).copy()
        d[d <= 0] = max(d.max(), 1.0) * 1e-12
        accepted = False
        while True:
            try:
                step = np.linalg.solve(H + lam * np.diag(d), -g)
                if not np.all(np.isfinite(step)):
                    raise np.linalg.LinAlgError("non-finite step")
            except np.linalg.LinAlgError:
                failures += 1
                if failures >= MAX_SOLVE_FAILURES:
                    raise FitError(f"normal equations singular after {failures} damping escalations")
                lam *= 10
                continue
            failures = 0
            x_new = obj.clip(x + step)
            dx = np.max(np.abs(x_new - x))
            if dx < STEP_ATOL:
                converged, message = True, "step below tolerance"
                break
            r_new = obj.residuals(x_new)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                rel = (cost - cost_new) / cost
                x, r, cost = x_new, r_new, cost_new
                history.append(cost)
                lam = max(lam / 10, 1e-300)
                accepted = True
                if rel < COST_RTOL:
                    converged, message = True, "relative cost change below tolerance"
                break
            lam *= 10
            if lam > LAMBDA_MAX:
                message = "damping exceeded its ceiling without reducing the cost"
                break
        log.debug("iter %d cost %.6e lambda %.1e", iterations, cost, lam)
        if converged or not accepted:
            break
        J = obj.jacobian(x)
    if accepted or converged:
        J = obj.jacobian(x)
    cov = _covariance(J, cost, m)
    prov["evaluations"] = obj.n_evals
    return FitResult(obj.params(x), cost, iterations, converged, cov, r, obj.names, message, prov, history)
