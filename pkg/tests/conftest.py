import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qfiflow.dynamics import DissipativeChannel, TimeLocalGenerator


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (a + a.conj().T)


def random_state(rng, d, min_weight=0.0):
    """Random density matrix; ``min_weight`` mixes in the identity to keep it full rank."""
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return (1 - min_weight * d) * rho + min_weight * np.eye(d)


def random_traceless_hermitian(rng, d, scale=1.0):
    h = random_hermitian(rng, d, scale)
    return h - np.trace(h).real / d * np.eye(d)


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_operator(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def random_qubit_generator(rng, n_channels, positive=False, with_hamiltonian=True):
    """Qubit generator with smooth, bounded, possibly negative rates."""
    channels = []
    for _ in range(n_channels):
        a = random_operator(rng, 2) / 2
        c0, c1, w = rng.uniform(0.1, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.5, 3.0)
        if positive:
            c1 = min(abs(c1), 0.9 * c0) * np.sign(c1)
        channels.append(DissipativeChannel(lambda t, c0=c0, c1=c1, w=w: c0 + c1 * np.cos(w * t), a))
    ham = None
    if with_hamiltonian:
        h0, h1 = random_hermitian(rng, 2, 0.5), random_hermitian(rng, 2, 0.5)
        ham = lambda t, h0=h0, h1=h1: h0 + np.sin(t) * h1
    return TimeLocalGenerator(2, channels, ham)


def hermitian_basis(d):
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j], e[j, i] = -1j, 1j
            basis.append(e)
    return basis


def sld_bruteforce(rho, drho):
    """Solve (L rho + rho L)/2 = drho for real coefficients of L in a Hermitian basis."""
    d = rho.shape[0]
    basis = hermitian_basis(d)
    cols = []
    for e in basis:
        m = 0.5 * (e @ rho + rho @ e)
        cols.append(np.concatenate([m.real.ravel(), m.imag.ravel()]))
    a = np.array(cols).T
    b = np.concatenate([drho.real.ravel(), drho.imag.ravel()])
    coef = np.linalg.lstsq(a, b, rcond=None)[0]
    return sum(c * e for c, e in zip(coef, basis))


def excited_amplitude_oracle(times, W, lam):
    """Excited-state amplitude from the memory-kernel equation, integrated as an ODE.

    c' = -W^2 y,  y' = c - lam y  (kernel W^2 exp(-lam tau) of a resonant
    Lorentzian reservoir); independent of any closed form.
    """
    sol = solve_ivp(lambda t, z: [-W**2 * z[1], z[0] - lam * z[1]], (0, times[-1]), [1.0, 0.0],
                    t_eval=times, rtol=1e-12, atol=1e-14, method="DOP853")
    return sol.y[0], -W**2 * sol.y[1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail=""):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {label}  {detail}".rstrip())
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
