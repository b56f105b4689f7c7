"""Time-local master equations and their integration.

The generator is

    K(t) X = -i[H(t), X] + sum_i gamma_i(t) (A_i X A_i^dag - {A_i^dag A_i, X}/2)

with rates that are allowed to go negative. Because K(t) does not depend on the
estimated parameter, the parameter derivative of the state obeys the same
linear equation as the state itself, so both are advanced together through the
same Runge-Kutta stages.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    InvariantViolation,
    NonHermitian,
    RateSingularity,
    StepSizeUnderflow,
)
from .operators import as_matrix, dagger, hermitian_part, hermiticity_error, max_norm, trace

logger = logging.getLogger(__name__)

STATE_HERM_TOL = 1e-9
STATE_TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8
TRACE_DRIFT_LIMIT = 1e-6


def _time_function(value):
    if callable(value):
        return value
    const = value
    return lambda t: const


@dataclass(frozen=True)
class DissipativeChannel:
    """One decay channel: rate gamma(t) and jump operator A(t).

    Either field may be a constant or a function of time. Negative rates are
    allowed.
    """

    rate: Callable[[float], float] | float
    jump_operator: Callable[[float], np.ndarray] | np.ndarray
    name: str = ""

    def rate_at(self, t):
        return float(_time_function(self.rate)(t))

    def jump_at(self, t):
        return np.asarray(_time_function(self.jump_operator)(t), dtype=complex)


@dataclass(frozen=True)
class TimeLocalGenerator:
    dim: int
    channels: tuple = ()
    hamiltonian: Callable[[float], np.ndarray] | np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))

    def hamiltonian_at(self, t):
        if self.hamiltonian is None:
            return None
        h = np.asarray(_time_function(self.hamiltonian)(t), dtype=complex)
        if h.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"H(t) has shape {h.shape}, expected dim {self.dim}")
        err = hermiticity_error(h)
        if err > 1e-10 * max(1.0, max_norm(h)):
            raise NonHermitian(f"H(t) not Hermitian at t={t}: {err:.3g}")
        return h

    def rates(self, t):
        return [ch.rate_at(t) for ch in self.channels]

    def jumps(self, t):
        out = []
        for ch in self.channels:
            a = ch.jump_at(t)
            if a.shape != (self.dim, self.dim):
                raise DimensionMismatch(
                    f"jump operator {ch.name or '?'} has shape {a.shape}, expected dim {self.dim}"
                )
            out.append(a)
        return out

    def with_hamiltonian(self, hamiltonian):
        return TimeLocalGenerator(self.dim, self.channels, hamiltonian)

    def with_channels(self, channels):
        return TimeLocalGenerator(self.dim, tuple(channels), self.hamiltonian)


def apply_generator(gen, t, x):
    """Apply K(t) to a matrix or a stack of matrices ``x``."""
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != gen.dim or x.shape[-2] != gen.dim:
        raise DimensionMismatch(f"operand shape {x.shape} does not match generator dim {gen.dim}")
    out = np.zeros_like(x)
    h = gen.hamiltonian_at(t)
    if h is not None:
        out += -1j * (h @ x - x @ h)
    for gamma, a in zip(gen.rates(t), gen.jumps(t)):
        if gamma == 0.0:
            continue
        ad = dagger(a)
        ada = ad @ a
        out += gamma * (a @ x @ ad - 0.5 * (ada @ x + x @ ada))
    return out


@dataclass(frozen=True)
class StepperConfig:
    """Integrator settings.

    ``method`` is ``"fixed_rk4"`` (classic RK4, constant step) or ``"halving"``
    (RK4 with step-doubling error control: a full step is compared with two half
    steps and the interval is bisected until they agree within ``tol``).
    """

    dt: float = 1e-3
    method: str = "fixed_rk4"
    tol: float = 1e-10
    min_dt: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.method not in ("fixed_rk4", "halving"):
            raise ValueError(f"unknown stepper method {self.method!r}")

    @property
    def smallest_step(self):
        return self.min_dt if self.min_dt is not None else self.dt * 2.0**-30


@dataclass
class ParamTrajectory:
    times: np.ndarray
    states: np.ndarray  # (n, d, d)
    param_derivs: np.ndarray  # (n, d, d)
    theta: float = 0.0
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


def check_density_matrix(rho, t=None, herm_tol=STATE_HERM_TOL, trace_tol=STATE_TRACE_TOL,
                         pos_tol=POSITIVITY_TOL):
    """Raise :class:`InvariantViolation` unless ``rho`` is a valid state."""
    rho = as_matrix(rho)
    herm = hermiticity_error(rho)
    if herm > herm_tol:
        raise InvariantViolation(f"state not Hermitian ({herm:.3g})", t)
    tr = np.real(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise InvariantViolation(f"state trace {tr:.17g} != 1", t)
    pmin = np.linalg.eigvalsh(hermitian_part(rho))[0]
    if pmin < -pos_tol:
        raise InvariantViolation(f"state has negative eigenvalue {pmin:.3g}", t)
    return rho


def _check_param_deriv(drho, dim):
    drho = as_matrix(drho)
    if drho.shape != (dim, dim):
        raise DimensionMismatch(f"derivative shape {drho.shape}, expected ({dim}, {dim})")
    if hermiticity_error(drho) > STATE_HERM_TOL:
        raise NonHermitian("parameter derivative is not Hermitian")
    if abs(trace(drho)) > STATE_TRACE_TOL:
        raise InvariantViolation("parameter derivative is not traceless")
    return drho


def _rk4(gen, t, y, h):
    k1 = apply_generator(gen, t, y)
    k2 = apply_generator(gen, t + 0.5 * h, y + 0.5 * h * k1)
    k3 = apply_generator(gen, t + 0.5 * h, y + 0.5 * h * k2)
    k4 = apply_generator(gen, t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _Stepper:
    def __init__(self, gen, config):
        self.gen = gen
        self.config = config
        self.steps = 0
        self.rejected = 0
        self.max_herm_drift = 0.0
        self.max_trace_drift = 0.0

    def advance(self, t0, t1, y):
        """Advance the stacked (rho, drho) array from t0 to t1."""
        span = t1 - t0
        n = max(1, math.ceil(span / self.config.dt - 1e-9))
        h = span / n
        for k in range(n):
            t = t0 + k * h
            if self.config.method == "fixed_rk4":
                y = self._step(t, y, h)
            else:
                y = self._controlled(t, y, h)
        return y

    def _step(self, t, y, h):
        try:
            y = _rk4(self.gen, t, y, h)
        except RateSingularity as exc:
            raise StepSizeUnderflow(f"rate singularity inside step [{t}, {t + h}]: {exc}", t) from exc
        self.steps += 1
        return self._tidy(t + h, y)

    def _controlled(self, t, y, h):
        try:
            full = _rk4(self.gen, t, y, h)
            half = _rk4(self.gen, t, y, 0.5 * h)
            two = _rk4(self.gen, t + 0.5 * h, half, 0.5 * h)
            err = max_norm(full - two)
        except RateSingularity:
            err = math.inf
        if err <= self.config.tol:
            self.steps += 2
            return self._tidy(t + h, two)
        self.rejected += 1
        if 0.5 * h < self.config.smallest_step:
            raise StepSizeUnderflow(f"step size fell below {self.config.smallest_step:.3g}", t)
        y = self._controlled(t, y, 0.5 * h)
        return self._controlled(t + 0.5 * h, y, 0.5 * h)

    def _tidy(self, t, y):
        drift = hermiticity_error(y)
        self.max_herm_drift = max(self.max_herm_drift, drift)
        y = hermitian_part(y)
        tr_drift = abs(np.real(trace(y[0])) - 1.0)
        self.max_trace_drift = max(self.max_trace_drift, tr_drift)
        if tr_drift > TRACE_DRIFT_LIMIT:
            raise InvariantViolation(f"trace drifted by {tr_drift:.3g}", t)
        return y


def co_integrate(gen, rho0, drho0, t_grid, stepper=None, theta=0.0, check_positivity=True):
    """Integrate a state and its parameter derivative on ``t_grid``.

    Both matrices are propagated through the identical stage sequence. The
    state is re-symmetrized after each step but never renormalized; trace drift
    beyond 1e-6 or an eigenvalue below -1e-8 raises :class:`InvariantViolation`.
    A rate singularity met inside a step raises :class:`StepSizeUnderflow`.
    """
    stepper = stepper or StepperConfig(dt=1e-3 * (t_grid[-1] - t_grid[0]))
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or len(times) < 1:
        raise ValueError("time grid must be a nonempty 1-d sequence")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    rho0 = check_density_matrix(rho0, times[0])
    if rho0.shape[0] != gen.dim:
        raise DimensionMismatch(f"state dim {rho0.shape[0]} != generator dim {gen.dim}")
    drho0 = _check_param_deriv(drho0, gen.dim)

    out = np.empty((len(times), 2, gen.dim, gen.dim), dtype=complex)
    y = np.stack([hermitian_part(rho0), hermitian_part(drho0)])
    out[0] = y
    engine = _Stepper(gen, stepper)
    for k in range(1, len(times)):
        y = engine.advance(times[k - 1], times[k], y)
        if check_positivity:
            pmin = np.linalg.eigvalsh(y[0])[0]
            if pmin < -POSITIVITY_TOL:
                raise InvariantViolation(f"state has negative eigenvalue {pmin:.3g}", times[k])
        out[k] = y
    if engine.max_herm_drift > 0:
        logger.debug("max Hermiticity drift before symmetrization: %.3g", engine.max_herm_drift)
    stats = {
        "steps": engine.steps,
        "rejected_steps": engine.rejected,
        "max_hermiticity_drift": engine.max_herm_drift,
        "max_trace_drift": engine.max_trace_drift,
        "method": stepper.method,
        "dt": stepper.dt,
    }
    return ParamTrajectory(times, out[:, 0].copy(), out[:, 1].copy(), theta, stats)


def finite_diff_param_deriv(gen, rho0_at, theta, t_grid, stepper=None, delta=1e-5):
    """Central-difference estimate of the parameter derivative along a trajectory.

    ``rho0_at`` maps a parameter value to an initial state. Used as an
    independent check of :func:`co_integrate`.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    zero = np.zeros((gen.dim, gen.dim), dtype=complex)
    plus = co_integrate(gen, rho0_at(theta + delta), zero, t_grid, stepper)
    minus = co_integrate(gen, rho0_at(theta - delta), zero, t_grid, stepper)
    return (plus.states - minus.states) / (2.0 * delta)

