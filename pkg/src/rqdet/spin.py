"""Spin-resolved detection for massive spin-1/2 particles: Dirac spinors in
the standard representation (metric signature (-,+,+,+), so k.k = -m^2),
projection of a user-supplied phase-space POVM symbol onto the electron
spin space, the 1-D spin-resolved arrival density, and the time-integrated
outcome probabilities.
"""

import numpy as np

from . import _kernels
from .scalar import _real_with_check, _require_static, DensityCurve

# Pauli matrices and the standard-representation blocks
_SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)
_I2 = np.eye(2, dtype=np.complex128)

# parity matrix used for the Dirac adjoint: ubar = u^dagger BETA
BETA = np.diag([1.0, 1.0, -1.0, -1.0]).astype(np.complex128)


def gamma_matrices():
    """Mostly-plus gamma matrices: {gamma^mu, gamma^nu} = 2 diag(-1,1,1,1)."""
    g = np.zeros((4, 4, 4), dtype=np.complex128)
    g[0] = -1j * BETA
    for i in range(3):
        g[i + 1][:2, 2:] = -1j * _SIGMA[i]
        g[i + 1][2:, :2] = 1j * _SIGMA[i]
    return g


class DiracSpinorBasis:
    """Positive-energy spinors u(k, r) normalized to ubar.u = 2m and
    u^dagger.u = 2 omega."""

    def __init__(self, mass):
        if mass <= 0:
            raise ValueError("mass must be > 0")
        self.mass = float(mass)

    def u(self, k, r):
        """Spinor for 3-momentum k (scalar k means (0, 0, k)) and spin
        label r in {1, 2}."""
        if r not in (1, 2):
            raise ValueError("r must be 1 or 2")
        kvec = _as_kvec(k)
        m = self.mass
        omega = np.sqrt(kvec @ kvec + m**2)
        chi = np.zeros(2, dtype=np.complex128)
        chi[r - 1] = 1.0
        sk = sum(kvec[i] * _SIGMA[i] for i in range(3))
        upper = np.sqrt(omega + m) * chi
        lower = (sk @ chi) * np.sqrt(omega + m) / (omega + m)
        return np.concatenate([upper, lower])

    def u_batch(self, ks):
        """Spinors on a batch of scalar momenta along z: shape (n, 2, 4)."""
        ks = np.asarray(ks, dtype=np.float64)
        m = self.mass
        omega = np.sqrt(ks**2 + m**2)
        root = np.sqrt(omega + m)
        out = np.zeros((ks.size, 2, 4), dtype=np.complex128)
        # sigma_z is diagonal, so each chi_r stays in its component
        out[:, 0, 0] = root
        out[:, 0, 2] = root * ks / (omega + m)
        out[:, 1, 1] = root
        out[:, 1, 3] = -root * ks / (omega + m)
        return out


def dirac_u(k, r, basis):
    return basis.u(k, r)


def ubar(u):
    return np.conj(u) @ BETA


def _as_kvec(k):
    k = np.asarray(k, dtype=np.float64)
    if k.ndim == 0:
        return np.array([0.0, 0.0, float(k)])
    if k.shape == (3,):
        return k
    raise ValueError("k must be a scalar or a 3-vector")


# ---------------------------------------------------------------------------
# POVM symbol

class SpinPOVMKernel:
    """Phase-space symbol Sigma(Q, p): Hermitian 4x4 matrix at every (Q, p),
    with the projected 2x2 matrix bounded in norm by 1 so that the outcome
    operators (1 +/- Sigma)/2 stay positive."""

    def __init__(self, fn):
        self._fn = fn

    @classmethod
    def constant(cls, matrix):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (4, 4):
            raise ValueError("kernel matrix must be 4x4")
        if np.max(np.abs(matrix - matrix.conj().T)) > 1e-10 * max(
            np.max(np.abs(matrix)), 1e-300
        ):
            raise ValueError("kernel matrix must be Hermitian")
        return cls(lambda qpos, p: matrix)

    @classmethod
    def zero(cls):
        return cls.constant(np.zeros((4, 4)))

    @classmethod
    def tabulated(cls, q_nodes, k_nodes, matrices):
        """Bilinear interpolation of 4x4 matrices sampled on a (Q, k) grid."""
        q_nodes = np.asarray(q_nodes, dtype=np.float64)
        k_nodes = np.asarray(k_nodes, dtype=np.float64)
        matrices = np.asarray(matrices, dtype=np.complex128)
        if matrices.shape != (q_nodes.size, k_nodes.size, 4, 4):
            raise ValueError("matrices must have shape (nQ, nk, 4, 4)")
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(
            (q_nodes, k_nodes), matrices, bounds_error=False, fill_value=None
        )

        def fn(qpos, p):
            p = np.asarray(p, dtype=np.float64)
            pts = np.stack(
                [np.full(p.shape, qpos, dtype=np.float64), p], axis=-1
            )
            return interp(pts)

        return cls(fn)

    def eval(self, qpos, p):
        mat = np.asarray(self._fn(qpos, float(p)), dtype=np.complex128)
        if mat.shape != (4, 4):
            raise ValueError("kernel must return a 4x4 matrix")
        return mat

    def eval_many(self, qpos, ps):
        """Batch evaluation: returns (len(ps), 4, 4)."""
        ps = np.asarray(ps, dtype=np.float64)
        out = self._fn(qpos, ps)
        out = np.asarray(out, dtype=np.complex128)
        if out.shape == (4, 4):
            out = np.broadcast_to(out, (ps.size, 4, 4))
        if out.shape != (ps.size, 4, 4):
            out = np.stack([self.eval(qpos, p) for p in ps.ravel()])
        return out.reshape(ps.shape + (4, 4))


def sigma_projected(s, basis, qpos, k):
    """Project the 4x4 symbol onto the 2x2 electron spin space at (Q, k):
    (1/2m) sum_AB u_A(k, r) Sigma_AB ubar_B(k, r')."""
    mat = s.eval(qpos, k)
    herm = np.max(np.abs(mat - mat.conj().T))
    if herm > 1e-10 * max(np.max(np.abs(mat)), 1e-300):
        raise ValueError(
            f"kernel not Hermitian at (Q={qpos:g}, k={k:g}): residue {herm:.3e}"
        )
    us = np.stack([basis.u(k, 1), basis.u(k, 2)])
    ubars = np.conj(us) @ BETA
    proj = np.einsum("ra,ab,sb->rs", us, mat, ubars) / (2.0 * basis.mass)
    herm2 = np.max(np.abs(proj - proj.conj().T))
    if herm2 > 1e-10 * max(np.max(np.abs(proj)), 1e-10):
        raise ValueError(
            f"projected matrix not Hermitian at (Q={qpos:g}, k={k:g}); the "
            "symbol must commute with the parity matrix up to Hermiticity"
        )
    norm = np.linalg.norm(proj, 2)
    if norm > 1.0 + 1e-8:
        raise ValueError(
            f"spectral bound violated at (Q={qpos:g}, k={k:g}): "
            f"|Sigma_projected| = {norm:.6g} > 1"
        )
    return proj


def _sigma_projected_batch(s, basis, qpos, ks):
    mats = s.eval_many(qpos, ks)
    us = basis.u_batch(ks)
    ubars = np.einsum("nrc,cb->nrb", np.conj(us), BETA)
    proj = np.einsum("nra,nab,nsb->nrs", us, mats, ubars) / (2.0 * basis.mass)
    return proj


# ---------------------------------------------------------------------------
# spinor density matrix

class SpinorReducedDensityMatrix:
    """rho(k, r; k', r') stored as (n, 2, n, 2): Hermitian, positive, unit
    trace under sum_r int dmu(k)."""

    def __init__(self, grid, rho):
        rho = np.asarray(rho, dtype=np.complex128)
        n = grid.size
        if rho.shape != (n, 2, n, 2):
            raise ValueError("rho must have shape (n, 2, n, 2)")
        flat = rho.reshape(2 * n, 2 * n)
        scale = max(np.max(np.abs(flat)), 1e-300)
        if np.max(np.abs(flat - flat.conj().T)) > 1e-10 * scale:
            raise ValueError("rho is not Hermitian")
        evals = np.linalg.eigvalsh(0.5 * (flat + flat.conj().T))
        if evals[0] < -1e-8 * max(evals[-1], 1e-300):
            raise ValueError(f"rho is not positive (lambda_min = {evals[0]:.3e})")
        tr = float(np.real(np.einsum("i,irir->", grid.measure_weights, rho)))
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"measure-weighted spin trace is {tr:.12g}, expected 1")
        self.grid = grid
        self.rho = rho

    @classmethod
    def from_pure(cls, grid, phi):
        """Pure spinor state phi(k, r), shape (n, 2); normalized here."""
        phi = np.asarray(phi, dtype=np.complex128)
        if phi.shape != (grid.size, 2):
            raise ValueError("phi must have shape (n, 2)")
        norm = float(np.sum(grid.measure_weights[:, None] * np.abs(phi) ** 2))
        if norm <= 0 or not np.isfinite(norm):
            raise ValueError("state norm must be finite and positive")
        phi = phi / np.sqrt(norm)
        rho = np.einsum("ir,js->irjs", phi, np.conj(phi))
        return cls(grid, rho)


# ---------------------------------------------------------------------------
# densities and outcome probabilities

def _spin_density_matrix(rho, s, basis, qpos, mu):
    """Effective scalar coupling matrix M_ij for the quad-form scan."""
    grid = rho.grid
    n = grid.size
    mass = basis.mass
    us = basis.u_batch(grid.nodes)          # (n, 2, 4)
    ubars = np.einsum("nrc,cb->nrb", np.conj(us), BETA)
    ki, kj = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
    mids = (0.5 * (ki + kj)).ravel()
    mats = s.eval_many(qpos, mids).reshape(n, n, 4, 4)
    # bracket_AB = delta_AB + mu * Sigma_AB, contracted against
    # u_A(k_i, r) ubar_B(k_j, r')
    d_term = np.einsum("ira,jsa->ijrs", us, ubars)
    s_term = np.einsum("ira,ijab,jsb->ijrs", us, mats, ubars)
    bracket = d_term + mu * s_term
    coupling = np.einsum("irjs,ijrs->ij", rho.rho, bracket)
    om = grid.omega
    weight = np.sqrt(
        np.maximum((om[:, None] + om[None, :]) ** 2 - 4.0 * mass**2, 0.0)
    )
    mw = grid.measure_weights
    return (mw[:, None] * mw[None, :]) * coupling * weight / (4.0 * mass)


def spin_toa_density(rho, s, det, tau, qpos, mu):
    """1-D spin-resolved arrival density at (tau, Q) for outcome mu = +/-1,
    ideal-kernel regime."""
    return float(spin_toa_curve(rho, s, det, [tau], qpos, mu).values[0])


def spin_toa_curve(rho, s, det, taus, qpos, mu):
    if mu not in (1, -1):
        raise ValueError("mu must be +1 or -1")
    _require_static(det, "spin_toa_density")
    basis = DiracSpinorBasis(rho.grid.mass)
    m = _spin_density_matrix(rho, s, basis, qpos, mu)
    grid = rho.grid
    # phase exp(i (k_i - k_j) Q - i (omega_i - omega_j) tau)
    raw = _kernels.quad_form_scan(m, -grid.omega, grid.nodes * qpos,
                                  np.asarray(taus, dtype=np.float64))
    vals = _real_with_check(raw, "spin_toa_curve", abs_scale=float(np.sum(np.abs(m))))
    return DensityCurve(np.asarray(taus, dtype=np.float64), vals,
                        {"kind": "spin", "q": qpos, "mu": mu})


def spin_summed_ideal_curve(rho, det, taus, qpos):
    """mu-summed density: the bracket collapses to 2*delta_AB."""
    _require_static(det, "spin_toa_density")
    grid = rho.grid
    basis = DiracSpinorBasis(grid.mass)
    us = basis.u_batch(grid.nodes)
    ubars = np.einsum("nrc,cb->nrb", np.conj(us), BETA)
    d_term = np.einsum("ira,jsa->ijrs", us, ubars)
    coupling = 2.0 * np.einsum("irjs,ijrs->ij", rho.rho, d_term)
    om = grid.omega
    mass = basis.mass
    weight = np.sqrt(
        np.maximum((om[:, None] + om[None, :]) ** 2 - 4.0 * mass**2, 0.0)
    )
    mw = grid.measure_weights
    m = (mw[:, None] * mw[None, :]) * coupling * weight / (4.0 * mass)
    raw = _kernels.quad_form_scan(m, -grid.omega, grid.nodes * qpos,
                                  np.asarray(taus, dtype=np.float64))
    vals = _real_with_check(raw, "spin_summed_ideal_curve",
                            abs_scale=float(np.sum(np.abs(m))))
    return DensityCurve(np.asarray(taus, dtype=np.float64), vals,
                        {"kind": "spin-summed", "q": qpos})


def spin_outcome_probability(rho, s, qpos):
    """Time-integrated outcome probabilities {+1: p, -1: 1-p}."""
    grid = rho.grid
    basis = DiracSpinorBasis(grid.mass)
    proj = _sigma_projected_batch(s, basis, qpos, grid.nodes)  # (n, 2, 2)
    norms = np.linalg.norm(proj, 2, axis=(1, 2))
    worst = int(np.argmax(norms))
    if norms[worst] > 1.0 + 1e-8:
        raise ValueError(
            f"spectral bound violated at (Q={qpos:g}, k={grid.nodes[worst]:g}): "
            f"|Sigma_projected| = {norms[worst]:.6g} > 1"
        )
    diag = np.einsum("iris->irs", rho.rho)
    t = complex(np.einsum("i,irs,irs->", grid.measure_weights, diag, proj))
    t = float(_real_with_check(np.array([t]), "spin_outcome_probability")[0])
    return {1: 0.5 * (1.0 + t), -1: 0.5 * (1.0 - t)}
