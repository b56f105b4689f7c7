"""Symmetric logarithmic derivative, quantum Fisher information and its flow.

The flow of the QFI along a time-local master equation is evaluated two ways:

* directly, as ``2 Tr[L K(d_theta rho)] - Tr[L^2 K(rho)]``;
* channel by channel, as ``sum_i gamma_i J_i`` with
  ``J_i = -Tr(rho [L, A_i]^dag [L, A_i])``, which is never positive.

The two agree identically whenever ``L`` solves the SLD equation, so comparing
them is the main self-check of the engine.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dynamics import apply_generator
from .errors import (
    DimensionMismatch,
    EighFailure,
    InvariantViolation,
    NonHermitian,
    NonpositiveQfi,
    SupportInconsistency,
)
from .operators import as_matrix, commutator, dagger, hermitian_part

DEFAULT_P_TOL = 1e-12
SUPPORT_TOL = 1e-6
QFI_NEG_TOL = 1e-10


@dataclass(frozen=True)
class SldResult:
    L: np.ndarray
    support_rank: int
    kernel_projector_norm_of_deriv: float
    eigenvalues: np.ndarray = field(repr=False, default=None)
    eigenvectors: np.ndarray = field(repr=False, default=None)


class ChannelFlow(NamedTuple):
    gamma: float
    J: float
    I: float


@dataclass(frozen=True)
class FlowSample:
    t: float
    F: float
    I_total: float
    channels: tuple = ()


@dataclass(frozen=True)
class FlowSeries:
    samples: tuple
    inward_intervals: tuple  # ((t_start, t_end), ...)
    accumulated_inward: float
    eps: float

    @property
    def is_markovian_consistent(self):
        return not self.inward_intervals


def _sld_stack(rho, drho, p_tol):
    """SLD for stacks of matrices; returns (L, eigenvalues, eigenvectors, kernel weight)."""
    herm_tol = 1e-10 * rho.shape[-1] * max(1.0, float(np.max(np.abs(rho))))
    if np.max(np.abs(rho - dagger(rho))) > herm_tol:
        raise NonHermitian("rho is not Hermitian")
    try:
        p, v = np.linalg.eigh(hermitian_part(rho))
    except np.linalg.LinAlgError as exc:
        raise EighFailure(str(exc)) from exc
    d = dagger(v) @ drho @ v
    denom = p[..., :, None] + p[..., None, :]
    support = denom > p_tol
    kernel = np.where(support, 0.0, np.abs(d))
    kernel_weight = np.max(kernel, axis=(-2, -1))
    if np.any(kernel_weight > SUPPORT_TOL):
        raise SupportInconsistency(
            "parameter derivative leaves the support of rho "
            f"(kernel weight {float(np.max(kernel_weight)):.3g})"
        )
    l_eig = np.where(support, 2.0 * d / np.where(support, denom, 1.0), 0.0)
    L = hermitian_part(v @ l_eig @ dagger(v))
    return L, p, v, kernel_weight


def sld(rho, drho, p_tol=DEFAULT_P_TOL):
    """Solve ``drho = (L rho + rho L)/2`` for Hermitian ``L``.

    Works in the eigenbasis of ``rho``: ``L_ij = 2 drho_ij / (p_i + p_j)`` where
    ``p_i + p_j > p_tol`` and zero elsewhere. If ``drho`` has weight larger than
    1e-6 on the block where both eigenvalues vanish, the QFI is not defined and
    :class:`SupportInconsistency` is raised.
    """
    rho = as_matrix(rho)
    drho = as_matrix(drho)
    if rho.ndim != 2 or rho.shape != drho.shape:
        raise DimensionMismatch(f"rho {rho.shape} vs drho {drho.shape}")
    L, p, v, kernel_weight = _sld_stack(rho, drho, p_tol)
    rank = int(np.count_nonzero(p > 0.5 * p_tol))
    return SldResult(L, rank, float(kernel_weight), p, v)


def _sld_matrix(L):
    return L.L if isinstance(L, SldResult) else np.asarray(L, dtype=complex)


def qfi(rho, L):
    """``Tr[L^2 rho]``, clamped at zero for roundoff-level negative values."""
    L = _sld_matrix(L)
    rho = np.asarray(rho)
    if rho.shape != L.shape:
        raise DimensionMismatch(f"rho {rho.shape} vs L {L.shape}")
    f = float(np.real(np.trace(L @ L @ rho)))
    if f < -QFI_NEG_TOL:
        raise InvariantViolation(f"negative QFI {f:.3g}")
    return max(f, 0.0)


def qfi_bloch(b, db, pure_tol=1e-12):
    """QFI of a qubit from its Bloch vector and the vector's parameter derivative.

    ``|dB|^2 + (B.dB)^2 / (1 - |B|^2)`` for mixed states and ``|dB|^2`` on the
    surface of the Bloch ball.
    """
    b = np.asarray(b, dtype=float)
    db = np.asarray(db, dtype=float)
    r2 = float(b @ b)
    if r2 > 1.0 + 1e-12:
        raise ValueError(f"Bloch vector longer than 1 (|B|^2 = {r2})")
    f = float(db @ db)
    if 1.0 - r2 > pure_tol:
        f += float(b @ db) ** 2 / (1.0 - r2)
    return f


def cramer_rao_bound(F, M=1):
    """Smallest variance of an unbiased estimator after ``M`` repetitions: 1/(M F)."""
    if isinstance(M, bool) or int(M) != M or M < 1:
        raise ValueError("M must be a positive integer")
    if not F > 0:
        raise NonpositiveQfi(f"QFI {F} is not positive; the bound is infinite")
    return 1.0 / (int(M) * F)


def channel_subflow_factor(rho, L, a):
    """``-Tr(rho [L, A]^dag [L, A])``; nonpositive for any state and Hermitian L."""
    L = _sld_matrix(L)
    rho = np.asarray(rho, dtype=complex)
    a = np.asarray(a, dtype=complex)
    if not (rho.shape == L.shape == a.shape):
        raise DimensionMismatch(f"shapes {rho.shape}, {L.shape}, {a.shape}")
    c = commutator(L, a)
    return -float(np.real(np.trace(rho @ dagger(c) @ c)))


def flow_decomposed(gen, t, rho, L):
    """Per-channel QFI flow at time ``t``: ``I_i = gamma_i(t) J_i``."""
    L = _sld_matrix(L)
    channels = []
    for gamma, a in zip(gen.rates(t), gen.jumps(t)):
        j = channel_subflow_factor(rho, L, a)
        channels.append(ChannelFlow(gamma, j, gamma * j))
    total = float(sum(c.I for c in channels))
    return FlowSample(float(t), qfi(rho, L), total, tuple(channels))


def flow_direct(gen, t, rho, drho, L):
    """QFI flow from the master equation itself, without splitting into channels.

    The mixed derivative of the state is taken as ``K(t)`` applied to the
    parameter derivative, which assumes the generator does not depend on the
    parameter.
    """
    L = _sld_matrix(L)
    k_rho, k_drho = apply_generator(gen, t, np.stack([np.asarray(rho), np.asarray(drho)]))
    return float(2.0 * np.real(np.trace(L @ k_drho)) - np.real(np.trace(L @ L @ k_rho)))


def witness(samples, eps=None):
    """Locate intervals of inward QFI flow.

    An interval is a maximal run of consecutive samples with ``I_total > eps``;
    it is reported as the times of its first and last sample.
    ``accumulated_inward`` is the trapezoidal integral of ``max(I_total, 0)``.
    """
    samples = tuple(samples)
    if not samples:
        return FlowSeries((), (), 0.0, 0.0 if eps is None else eps)
    t = np.array([s.t for s in samples], dtype=float)
    flow = np.array([s.I_total for s in samples], dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("samples must be on an increasing time grid")
    if eps is None:
        eps = 1e-9 * float(np.max(np.abs(flow)))
    inward = flow > eps
    intervals = []
    start = None
    for k, flag in enumerate(inward):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            intervals.append((float(t[start]), float(t[k - 1])))
            start = None
    if start is not None:
        intervals.append((float(t[start]), float(t[-1])))
    positive = np.maximum(flow, 0.0)
    accumulated = float(np.sum(0.5 * (positive[1:] + positive[:-1]) * np.diff(t))) if len(t) > 1 else 0.0
    return FlowSeries(samples, tuple(intervals), accumulated, float(eps))


@dataclass
class TrajectoryFlows:
    """Flow quantities evaluated at every point of a trajectory."""

    samples: list
    direct: np.ndarray

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def qfi(self):
        return np.array([s.F for s in self.samples])

    @property
    def decomposed(self):
        return np.array([s.I_total for s in self.samples])


def _real_trace(a):
    return np.real(np.trace(a, axis1=-2, axis2=-1))


def analyze_trajectory(gen, traj, p_tol=DEFAULT_P_TOL):
    """Evaluate SLD, QFI and both flow routes along a :class:`ParamTrajectory`.

    Same arithmetic as :func:`sld`, :func:`flow_decomposed` and
    :func:`flow_direct`, batched over the time axis.
    """
    rho = np.asarray(traj.states, dtype=complex)
    drho = np.asarray(traj.param_derivs, dtype=complex)
    L, _, _, _ = _sld_stack(rho, drho, p_tol)
    L2 = L @ L
    F = _real_trace(L2 @ rho)
    if np.any(F < -QFI_NEG_TOL):
        k = int(np.argmin(F))
        raise InvariantViolation(f"negative QFI {F[k]:.3g}", traj.times[k])
    F = np.maximum(F, 0.0)

    direct = np.empty(len(traj.times))
    rates = np.empty((len(traj.times), len(gen.channels)))
    factors = np.empty_like(rates)
    for k, t in enumerate(traj.times):
        k_rho, k_drho = apply_generator(gen, t, np.stack([rho[k], drho[k]]))
        direct[k] = 2.0 * np.real(np.trace(L[k] @ k_drho)) - np.real(np.trace(L2[k] @ k_rho))
        rates[k] = gen.rates(t)
        for i, a in enumerate(gen.jumps(t)):
            c = L[k] @ a - a @ L[k]
            factors[k, i] = -np.real(np.trace(rho[k] @ dagger(c) @ c))
    subflows = rates * factors
    samples = [
        FlowSample(
            float(t),
            float(F[k]),
            float(np.sum(subflows[k])),
            tuple(ChannelFlow(float(g), float(j), float(i))
                  for g, j, i in zip(rates[k], factors[k], subflows[k])),
        )
        for k, t in enumerate(traj.times)
    ]
    return TrajectoryFlows(samples, direct)
