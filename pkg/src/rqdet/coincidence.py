"""Two-detector joint detection densities for symmetric two-particle
states of a free scalar field, with the fully contracted (vacuum-free)
amplitude-squared structure and nested proper-time quadrature over both
effective detector windows.
"""

import warnings

import numpy as np

from . import _kernels
from .detector import RqdetWarning, minkowski_dot


class WindowWarning(RqdetWarning):
    """Effective window not negligible at the s-quadrature edge."""


class TwoParticleState:
    """Bosonic two-particle momentum amplitude psi(k1, k2) on a shared grid,
    symmetric under exchange, normalized so 2 sum mw_i mw_j |psi_ij|^2 = 1."""

    def __init__(self, grid, psi2, normalize=True):
        psi2 = np.asarray(psi2, dtype=np.complex128)
        n = grid.size
        if psi2.shape != (n, n):
            raise ValueError("psi2 must be square on the grid")
        scale = max(np.max(np.abs(psi2)), 1e-300)
        if np.max(np.abs(psi2 - psi2.T)) > 1e-10 * scale:
            raise ValueError("psi2 must be symmetric under exchange")
        psi2 = 0.5 * (psi2 + psi2.T)  # exact symmetry for the kernels
        mw = grid.measure_weights
        norm = 2.0 * float(
            np.sum((mw[:, None] * mw[None, :]) * np.abs(psi2) ** 2)
        )
        if not np.isfinite(norm):
            raise ValueError("state norm must be finite")
        if normalize:
            if norm <= 0:
                raise ValueError("cannot normalize a zero state")
            psi2 = psi2 / np.sqrt(norm)
        self.grid = grid
        self.psi2 = psi2

    @classmethod
    def symmetrized_product(cls, state_a, state_b):
        """Symmetrized product of two one-particle states on one grid."""
        if state_a.grid is not state_b.grid:
            raise ValueError("states must share a grid")
        psi2 = 0.5 * (
            np.outer(state_a.psi, state_b.psi) + np.outer(state_b.psi, state_a.psi)
        )
        return cls(state_a.grid, psi2)

    def weighted(self):
        mw = self.grid.measure_weights
        return (mw[:, None] * mw[None, :]) * self.psi2


def two_particle_amplitude(state, x1, x2):
    """Symmetrized amplitude sum_ij mw_i mw_j psi_ij
    [exp(i k_i.X1 + i k_j.X2) + exp(i k_i.X2 + i k_j.X1)] / 2, with the
    1-D momenta along x and k.X = -omega t + k x."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != (4,) or x2.shape != (4,):
        raise ValueError("X1 and X2 must be 4-vectors")
    w = state.weighted()
    p1 = _plane_wave(state.grid, x1)
    p2 = _plane_wave(state.grid, x2)
    a = complex(np.einsum("i,ij,j->", p1, w, p2, optimize=False))
    b = complex(np.einsum("i,ij,j->", p2, w, p1, optimize=False))
    return 0.5 * (a + b)


def _plane_wave(grid, x):
    return np.exp(1j * (-grid.omega * x[0] + grid.nodes * x[1]))


def _s_nodes(det, n_s):
    half = 6.0 * det.sigma
    x, w = np.polynomial.legendre.leggauss(n_s)
    s = half * x
    ws = half * w
    edge = np.max(np.abs(det.effective_eta(np.array([-half, half]))))
    if edge > 1e-10:
        warnings.warn(
            f"effective window magnitude {edge:.3e} at the +/-{half:g} "
            "quadrature edge exceeds 1e-10; joint density may be truncated",
            WindowWarning,
            stacklevel=3,
        )
    return s, ws


def joint_toa_density(state, det1, det2, tau1, q1, tau2, q2, n_s=48):
    """Joint density for one detection event at each detector.

    Nested quadrature of effective_eta_1(s1) * effective_eta_2(s2) *
    A(X1+, X2+) * conj(A(X1-, X2-)) over [-6 sigma, 6 sigma] windows, with
    X_i(+/-) the embedding points at tau_i +/- s_i/2.
    """
    for det in (det1, det2):
        if det.embedding.kind not in ("static", "inertial"):
            raise ValueError("joint density supports static or inertial detectors")
    s1, ws1 = _s_nodes(det1, n_s)
    s2, ws2 = _s_nodes(det2, n_s)
    c1 = ws1 * det1.effective_eta(s1)
    c2 = ws2 * det2.effective_eta(s2)

    grid = state.grid
    p1p = _phase_rows(grid, det1, tau1, q1, s1, +0.5)
    p1m = _phase_rows(grid, det1, tau1, q1, s1, -0.5)
    p2p = _phase_rows(grid, det2, tau2, q2, s2, +0.5)
    p2m = _phase_rows(grid, det2, tau2, q2, s2, -0.5)

    w = state.weighted()
    total = _kernels.coincidence_total(
        w, p1p, p1m, p2p, p2m,
        np.asarray(c1, dtype=np.complex128), np.asarray(c2, dtype=np.complex128),
    )
    # noise floor: quadrature mass times the amplitude bound squared
    wsum = float(np.sum(np.abs(w)))
    bound = float(np.sum(np.abs(c1)) * np.sum(np.abs(c2))) * wsum**2
    resid = abs(total.imag)
    if resid > 1e-8 * max(abs(total), bound * 1e-4, 1e-300):
        raise ValueError(
            f"joint density imaginary residue {resid:.3e} exceeds 1e-8 relative"
        )
    return float(total.real)


def _phase_rows(grid, det, tau, q, s, half_sign):
    qvec = np.asarray([q, 0.0, 0.0], dtype=np.float64)
    rows = np.empty((s.size, grid.size), dtype=np.complex128)
    for a, sa in enumerate(s):
        x = det.embedding.point(tau + half_sign * sa, qvec)
        rows[a] = _plane_wave(grid, x)
    return rows


def joint_scan(state, det1, det2, taus1, taus2, q1, q2, n_s=48):
    """Joint density on a (tau1, tau2) grid; returns a matrix."""
    out = np.empty((len(taus1), len(taus2)))
    for i, t1 in enumerate(taus1):
        for j, t2 in enumerate(taus2):
            out[i, j] = joint_toa_density(state, det1, det2, t1, q1, t2, q2, n_s)
    return out


def psi2_from_csv(path, grid):
    """Two-particle amplitude from a CSV matrix dump (rows = k1 index):
    either complex literals or alternating Re, Im columns."""
    raw = np.atleast_2d(np.genfromtxt(path, delimiter=",", dtype=np.complex128))
    n = grid.size
    if raw.shape == (n, 2 * n):
        raw = raw[:, 0::2].real + 1j * raw[:, 1::2].real
    if raw.shape != (n, n):
        raise ValueError("psi2 matrix shape does not match the grid")
    return TwoParticleState(grid, raw)
