"""Built-in scenarios.

The damped Jaynes-Cummings atom: a two-level atom in a vacuum reservoir with a
Lorentzian spectral density of width ``lam`` and coupling strength ``W``. Its
exact time-local master equation has a single amplitude-damping channel whose
rate ``gamma(t) = -2 h'(t)/h(t)`` is built from the amplitude envelope ``h``.
For ``W > lam/2`` the envelope oscillates through zero, the rate diverges there
and becomes negative right after.

The phase to be estimated enters through a phase gate applied to
``(|g> + |e>)/sqrt(2)`` before the atom meets the reservoir.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import DissipativeChannel, ParamTrajectory, StepperConfig, TimeLocalGenerator, co_integrate
from .errors import RateSingularity
from .operators import SIGMA_MINUS, SIGMA_X, SIGMA_Y, bloch_to_matrix

RATE_GUARD = 1e-9
# generator-path integration is only trusted where |gamma(t)| * dt stays below this
RATE_STEP_LIMIT = 0.2


@dataclass(frozen=True)
class DampedJCParams:
    W: float
    lam: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.W > 0 or not self.lam > 0:
            raise ValueError("W and lam must be positive")

    @property
    def regime(self):
        return "weak" if self.W <= self.lam / 2 else "strong"

    @property
    def d(self):
        return math.sqrt(abs(self.lam**2 - 4.0 * self.W**2))

    @property
    def correlation_time(self):
        return 1.0 / self.lam


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def matrix(self):
        return bloch_to_matrix(self)

    def norm(self):
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


def h_function(t, params):
    """Amplitude envelope h(t); h(0) = 1. Accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    lam, d = params.lam, params.d
    decay = np.exp(-lam * t / 2)
    if d == 0.0:
        out = decay * (1.0 + lam * t / 2)
    elif params.regime == "weak":
        out = decay * (np.cosh(d * t / 2) + lam / d * np.sinh(d * t / 2))
    else:
        out = decay * (np.cos(d * t / 2) + lam / d * np.sin(d * t / 2))
    return out[()] if out.ndim == 0 else out


def h_dot(t, params):
    """Closed-form time derivative of :func:`h_function`; h'(0) = 0."""
    t = np.asarray(t, dtype=float)
    lam, d, w2 = params.lam, params.d, params.W**2
    decay = np.exp(-lam * t / 2)
    if d == 0.0:
        out = -(lam**2) * t / 4 * decay
    elif params.regime == "weak":
        out = -(2 * w2 / d) * decay * np.sinh(d * t / 2)
    else:
        out = -(2 * w2 / d) * decay * np.sin(d * t / 2)
    return out[()] if out.ndim == 0 else out


def _h_pair(t, params):
    # scalar fast path for the integrator's per-stage rate evaluations
    lam, d = params.lam, params.d
    decay = math.exp(-lam * t / 2)
    if d == 0.0:
        return decay * (1.0 + lam * t / 2), -(lam**2) * t / 4 * decay
    x = d * t / 2
    if params.regime == "weak":
        c, s = math.cosh(x), math.sinh(x)
    else:
        c, s = math.cos(x), math.sin(x)
    return decay * (c + lam / d * s), -(2 * params.W**2 / d) * decay * s


def gamma_t(t, params, guard=RATE_GUARD):
    """Decay rate -2 h'/h at a single time; raises RateSingularity where |h| <= guard."""
    h, hd = _h_pair(float(t), params)
    if abs(h) <= guard:
        raise RateSingularity(f"gamma(t) diverges: |h({t})| = {abs(h):.3g} <= {guard:g}", t)
    return -2.0 * hd / h


def gamma_series(t, params, guard=RATE_GUARD):
    """Vectorized rate with NaN inside the guard band."""
    h = np.atleast_1d(h_function(t, params))
    hd = np.atleast_1d(h_dot(t, params))
    out = np.full(h.shape, np.nan)
    ok = np.abs(h) > guard
    out[ok] = -2.0 * hd[ok] / h[ok]
    return out


def h_zeros(params, t_max):
    """Times in (0, t_max] where h vanishes (strong coupling only)."""
    if params.regime == "weak":
        return []
    d, lam = params.d, params.lam
    base = math.atan(d / lam)
    zeros = []
    n = 1
    while True:
        tz = 2.0 / d * (n * math.pi - base)
        if tz > t_max:
            return zeros
        zeros.append(tz)
        n += 1


def build_generator(params, guard=RATE_GUARD):
    """Single amplitude-damping channel sigma_minus with rate gamma(t); no Hamiltonian."""
    channel = DissipativeChannel(lambda t: gamma_t(t, params, guard), SIGMA_MINUS, "sigma_minus")
    return TimeLocalGenerator(2, (channel,))


def markov_control(gamma0):
    """Constant-rate amplitude damping, the Markovian reference scenario."""
    if not gamma0 > 0:
        raise ValueError("gamma0 must be positive")
    return TimeLocalGenerator(2, (DissipativeChannel(float(gamma0), SIGMA_MINUS, "sigma_minus"),))


def markov_control_qfi(t, gamma0):
    """QFI of the optimal probe under :func:`markov_control`: the envelope is exp(-gamma0 t/2)."""
    return np.exp(-gamma0 * np.asarray(t, dtype=float))


def optimal_probe(phi):
    """State after the phase gate acts on (|g> + |e>)/sqrt(2); Bloch vector (cos phi, -sin phi, 0)."""
    return bloch_to_matrix((math.cos(phi), -math.sin(phi), 0.0))


def probe_param_deriv(phi):
    return 0.5 * (-math.sin(phi) * SIGMA_X - math.cos(phi) * SIGMA_Y)


def analytic_state(t, params):
    h = float(h_function(t, params))
    return BlochVector(h * math.cos(params.phi), -h * math.sin(params.phi), h * h - 1.0)


def analytic_state_deriv(t, params):
    """Phase derivative of the Bloch vector of :func:`analytic_state`."""
    h = float(h_function(t, params))
    return BlochVector(-h * math.sin(params.phi), -h * math.cos(params.phi), 0.0)


def analytic_qfi(t, params):
    return h_function(t, params) ** 2


def analytic_flow(t, params):
    return 2.0 * h_function(t, params) * h_dot(t, params)


def analytic_pair(t, params):
    """(rho, d_phi rho) as matrices at time t."""
    b = analytic_state_deriv(t, params)
    drho = 0.5 * (b.x * SIGMA_X + b.y * SIGMA_Y)
    return analytic_state(t, params).matrix(), drho


def guard_band_mask(t_grid, params, dt, rate_step_limit=RATE_STEP_LIMIT):
    """True where the rate is too large for the generator path (|gamma| dt > limit)."""
    gamma = gamma_series(t_grid, params)
    return ~(np.abs(gamma) * dt <= rate_step_limit)


def default_stepper(params):
    return StepperConfig(dt=1e-3 / params.lam)


def propagate(params, t_grid, stepper=None, rate_step_limit=RATE_STEP_LIMIT):
    """Trajectory of the damped atom on ``t_grid``.

    Grid points clear of the guard bands around zeros of h are integrated with
    the master equation, one segment at a time. Each segment is seeded with the
    exact state at its first point; points inside a band take the exact state.
    Returns the trajectory and a boolean mask of integrated points.
    """
    stepper = stepper or default_stepper(params)
    times = np.asarray(t_grid, dtype=float)
    band = guard_band_mask(times, params, stepper.dt, rate_step_limit)
    gen = build_generator(params)
    n = len(times)
    states = np.empty((n, 2, 2), dtype=complex)
    derivs = np.empty((n, 2, 2), dtype=complex)
    stats = {"steps": 0, "rejected_steps": 0, "segments": 0,
             "max_hermiticity_drift": 0.0, "max_trace_drift": 0.0,
             "method": stepper.method, "dt": stepper.dt}
    k = 0
    while k < n:
        if band[k]:
            states[k], derivs[k] = analytic_pair(times[k], params)
            k += 1
            continue
        end = k
        while end < n and not band[end]:
            end += 1
        rho0, drho0 = analytic_pair(times[k], params)
        if end - k == 1:
            states[k], derivs[k] = rho0, drho0
        else:
            seg = co_integrate(gen, rho0, drho0, times[k:end], stepper, theta=params.phi)
            states[k:end], derivs[k:end] = seg.states, seg.param_derivs
            for key in ("steps", "rejected_steps"):
                stats[key] += seg.stats[key]
            for key in ("max_hermiticity_drift", "max_trace_drift"):
                stats[key] = max(stats[key], seg.stats[key])
        stats["segments"] += 1
        k = end
    stats["guard_band_points"] = int(np.count_nonzero(band))
    return ParamTrajectory(times, states, derivs, params.phi, stats), ~band
