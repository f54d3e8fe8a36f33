"""Detection densities for a free scalar field in one spatial dimension:
linear-coupling density with a detector response kernel, the ideal
arrival-time density and its nonrelativistic Kijowski reference, moving
detectors, quadratic (scattering) coupling, and curve utilities.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .detector import RqdetWarning
from .grids import ComplexKernelMatrix, double_sum


class NegativityWarning(RqdetWarning):
    """Density dips below the soft-positivity floor."""


class ConvergenceWarning(RqdetWarning):
    """Iterated refinement did not reach the target tolerance."""


# ---------------------------------------------------------------------------
# states

class OneParticleState:
    """Momentum wave function on a grid, normalized to unit invariant-measure
    norm: sum_i mw_i |psi_i|^2 = 1."""

    def __init__(self, grid, psi):
        psi = np.asarray(psi, dtype=np.complex128)
        if psi.shape != grid.nodes.shape:
            raise ValueError("psi must be defined on the grid nodes")
        norm = float(grid.measure_weights @ np.abs(psi) ** 2)
        if not np.isfinite(norm) or norm <= 0:
            raise ValueError("state norm must be finite and positive")
        self.grid = grid
        self.psi = psi / np.sqrt(norm)

    @classmethod
    def gaussian(cls, grid, k0, spread, x0=0.0, t0=0.0):
        """Gaussian packet: |psi|^2 has standard deviation `spread` around
        k0; x0 and t0 shift the packet in space and time."""
        k = grid.nodes
        psi = np.exp(-((k - k0) ** 2) / (4.0 * spread**2))
        psi = psi * np.exp(-1j * k * x0) * np.exp(-1j * grid.omega * t0)
        return cls(grid, psi)


class ReducedDensityMatrix:
    """One-particle density matrix rho(k, k') on the grid: Hermitian,
    positive semidefinite, unit trace under the invariant measure."""

    def __init__(self, grid, rho):
        rho = np.asarray(rho, dtype=np.complex128)
        if rho.shape != (grid.size, grid.size):
            raise ValueError("rho must be square on the grid")
        herm = np.max(np.abs(rho - rho.conj().T))
        scale = max(np.max(np.abs(rho)), 1e-300)
        if herm > 1e-10 * scale:
            raise ValueError(f"rho is not Hermitian (residue {herm:.3e})")
        evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if evals[0] < -1e-8 * max(evals[-1], 1e-300):
            raise ValueError(f"rho is not positive (lambda_min = {evals[0]:.3e})")
        tr = float(np.real(grid.measure_weights @ np.diag(rho)))
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"measure-weighted trace is {tr:.12g}, expected 1")
        self.grid = grid
        self.rho = rho

    @classmethod
    def from_pure(cls, state):
        rho = np.outer(state.psi, np.conj(state.psi))
        return cls(state.grid, rho)

    @classmethod
    def from_kernel(cls, grid, rho):
        """Normalize the measure-weighted trace to 1, then validate."""
        rho = np.asarray(rho, dtype=np.complex128)
        tr = float(np.real(grid.measure_weights @ np.diag(rho)))
        if not np.isfinite(tr) or tr <= 0:
            raise ValueError("trace must be finite and positive")
        return cls(grid, rho / tr)

    def as_kernel_matrix(self):
        return ComplexKernelMatrix(self.rho, self.grid)


@dataclass
class DensityCurve:
    """Sampled density over a proper-time grid."""

    tau: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# response-kernel machinery

def _kernel_fn(det, arg_lo, arg_hi):
    """Vectorized eta_tilde of the effective window; numeric variants are
    tabulated densely once and spline-interpolated."""
    d = det.degradation
    if d.gaussian_params is not None or d.variant == "from-absorption":
        return det.eta_tilde_many
    pad = 1e-9 * max(abs(arg_lo), abs(arg_hi), 1.0)
    oms = np.linspace(arg_lo - pad, arg_hi + pad, 2049)
    vals = det.eta_tilde_many(oms)
    if np.iscomplexobj(vals):
        spl_re = CubicSpline(oms, vals.real)
        spl_im = CubicSpline(oms, vals.imag)
        return lambda om: spl_re(om) + 1j * spl_im(om)
    spl = CubicSpline(oms, vals)
    return lambda om: spl(om)


def _weighted_base(rho1):
    grid = rho1.grid
    mw = grid.measure_weights
    return (mw[:, None] * mw[None, :]) * rho1.rho.T


def _real_with_check(values, context, abs_scale=0.0):
    """Drop the imaginary part after checking it is residue-level.

    The tolerance is relative to the larger of the batch maximum and
    abs_scale (the summed magnitude of the reduction terms, i.e. the scale
    on which rounding noise lives)."""
    values = np.atleast_1d(np.asarray(values))
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    resid = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if resid > 1e-8 * max(scale, abs_scale) + 1e-300:
        raise ValueError(
            f"{context}: imaginary residue {resid:.3e} exceeds 1e-8 of the "
            f"scale {max(scale, abs_scale):.3e}"
        )
    return values.real


def _require_static(det, op):
    if det.embedding.kind != "static":
        raise ValueError(f"{op} requires a static embedding; "
                         "use the moving-detector variant")


# ---------------------------------------------------------------------------
# linear coupling, static detector

def toa_density(rho1, det, tau, q, kernel_override=None):
    """Single-point detection density at proper time tau, position q.

    Evaluated as a measure-weighted double sum with the detector response
    kernel eta_tilde((omega + omega')/2) and the plane-wave phase
    (omega - omega')*tau + (k' - k)*q.
    """
    _require_static(det, "toa_density")
    grid = rho1.grid
    mass = grid.mass

    if kernel_override is None:
        mids = 0.5 * (grid.omega[:, None] + grid.omega[None, :])
        fn = _kernel_fn(det, float(mids.min()), float(mids.max()))
    else:
        fn = kernel_override

    def kernel(ki, kj):
        wi = np.sqrt(ki**2 + mass**2)
        wj = np.sqrt(kj**2 + mass**2)
        return fn(0.5 * (wi + wj))

    def phase(ki, kj):
        wi = np.sqrt(ki**2 + mass**2)
        wj = np.sqrt(kj**2 + mass**2)
        return (wi - wj) * tau + (kj - ki) * q

    val = 2.0 * double_sum(rho1.as_kernel_matrix(), kernel, phase)
    mw = grid.measure_weights
    scale = 2.0 * float(
        np.sum((mw[:, None] * mw[None, :]) * np.abs(rho1.rho))
        * np.max(np.abs(fn(0.5 * (grid.omega[:, None] + grid.omega[None, :]))))
    )
    return float(_real_with_check(val, "toa_density", abs_scale=scale)[0])


def toa_curve(rho1, det, taus, q, kernel_override=None):
    """Detection density sampled over a tau grid at fixed position."""
    _require_static(det, "toa_density")
    grid = rho1.grid
    taus = np.asarray(taus, dtype=np.float64)
    mids = 0.5 * (grid.omega[:, None] + grid.omega[None, :])
    fn = kernel_override or _kernel_fn(det, float(mids.min()), float(mids.max()))
    a = 2.0 * _weighted_base(rho1) * np.asarray(fn(mids), dtype=np.complex128)
    raw = _kernels.quad_form_scan(a, grid.omega, -grid.nodes * q, taus)
    vals = _real_with_check(raw, "toa_curve", abs_scale=float(np.sum(np.abs(a))))
    return DensityCurve(taus, vals, {"kind": "toa", "q": q, "n": grid.size})


def integrated_position_density(rho1, det):
    """Time-integrated density: sum_i mw_i rho_ii eta_tilde(omega_i)/|k_i|."""
    grid = rho1.grid
    vals = det.eta_tilde_many(grid.omega)
    diag = np.real(np.diag(rho1.rho))
    return float(np.sum(grid.measure_weights * diag * vals / np.abs(grid.nodes)))


# ---------------------------------------------------------------------------
# ideal arrival-time density and Kijowski reference

def _amp_curve(grid, psi, weight_vals, omega_vals, taus, q):
    c = grid.raw_weights * weight_vals * psi * np.exp(1j * grid.nodes * q)
    return _kernels.amp_scan(np.asarray(c, dtype=np.complex128),
                             -np.asarray(omega_vals, dtype=np.float64),
                             np.asarray(taus, dtype=np.float64))


def _require_positive_nodes(grid, op):
    if np.any(grid.nodes <= 0):
        raise ValueError(f"{op} requires a grid with k > 0 everywhere")


def ideal_toa_density(psi, mass, tau, q):
    """|integral dk sqrt(k)/omega psi(k) exp(-i omega tau + i k q)|^2."""
    return float(ideal_toa_curve(psi, mass, [tau], q).values[0])


def ideal_toa_curve(psi, mass, taus, q):
    grid = psi.grid
    _require_positive_nodes(grid, "ideal_toa_density")
    omega = np.sqrt(grid.nodes**2 + mass**2)
    amps = _amp_curve(grid, psi.psi, np.sqrt(grid.nodes) / omega, omega, taus, q)
    return DensityCurve(np.asarray(taus, dtype=np.float64),
                        np.abs(amps) ** 2,
                        {"kind": "toa-ideal", "q": q, "n": grid.size})


def kijowski_reference(psi, mass, tau, q):
    """Nonrelativistic reference: dispersion omega -> m + k^2/(2m)."""
    return float(kijowski_curve(psi, mass, [tau], q).values[0])


def kijowski_curve(psi, mass, taus, q):
    grid = psi.grid
    _require_positive_nodes(grid, "kijowski_reference")
    if mass <= 0:
        raise ValueError("kijowski reference needs mass > 0")
    omega = mass + grid.nodes**2 / (2.0 * mass)
    amps = _amp_curve(grid, psi.psi, np.sqrt(grid.nodes) / omega, omega, taus, q)
    return DensityCurve(np.asarray(taus, dtype=np.float64),
                        np.abs(amps) ** 2,
                        {"kind": "toa-kijowski", "q": q, "n": grid.size})


# ---------------------------------------------------------------------------
# moving detector

def moving_toa_density(rho1, det, tau, q=(0.0, 0.0, 0.0), kernel="detector",
                       ideal_form="factorized"):
    return float(
        moving_toa_curve(rho1, det, [tau], q, kernel=kernel,
                         ideal_form=ideal_form).values[0]
    )


def moving_toa_curve(rho1, det, taus, q=(0.0, 0.0, 0.0), kernel="detector",
                     ideal_form="factorized"):
    """Density for an arbitrarily moving detector.

    The response kernel is evaluated at the rest-frame energy
    (E_i + E_j)/2 with E_i = omega_i u^0(tau) - k_i u^1(tau); the phase uses
    the embedding point E(tau, q).  kernel="ideal" replaces the detector
    response by the ideal arrival-time weight; ideal_form picks the
    factorized 4*sqrt(K_i K_j) form (reduces exactly to the ideal static
    density) or the exact sqrt(E_sum^2 - 4 m^2) form.
    """
    grid = rho1.grid
    taus = np.asarray(taus, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (3,):
        raise ValueError("q must be a 3-vector")
    mass = grid.mass
    emb = det.embedding
    det.check_acceleration(taus)

    base = _weighted_base(rho1)
    omega = grid.omega
    k = grid.nodes

    u_all = np.array([emb.four_velocity(float(t)) for t in taus])
    if kernel == "detector":
        e_mid = 0.5 * (
            (omega[:, None] + omega[None, :])[None, :, :] * u_all[:, 0, None, None]
            - (k[:, None] + k[None, :])[None, :, :] * u_all[:, 1, None, None]
        )
        fn = _kernel_fn(det, float(e_mid.min()), float(e_mid.max()))
    elif kernel != "ideal":
        raise ValueError("kernel must be 'detector' or 'ideal'")

    out = np.empty(taus.size, dtype=np.complex128)
    term_scale = 0.0
    for m, t in enumerate(taus):
        u = u_all[m]
        x = emb.point(float(t), q)
        if kernel == "detector":
            args = 0.5 * ((omega[:, None] + omega[None, :]) * u[0]
                          - (k[:, None] + k[None, :]) * u[1])
            kmat = 2.0 * np.asarray(fn(args), dtype=np.complex128)
        elif ideal_form == "factorized":
            e_i = omega * u[0] - k * u[1]
            cap = np.sqrt(np.maximum(e_i**2 - mass**2, 0.0))
            kmat = 16.0 * np.pi**2 * np.sqrt(cap[:, None] * cap[None, :])
            kmat = kmat.astype(np.complex128)
        elif ideal_form == "exact":
            e_sum = (omega[:, None] + omega[None, :]) * u[0] \
                - (k[:, None] + k[None, :]) * u[1]
            kmat = 8.0 * np.pi**2 * np.sqrt(
                np.maximum(e_sum**2 - 4.0 * mass**2, 0.0)
            ).astype(np.complex128)
        else:
            raise ValueError("ideal_form must be 'factorized' or 'exact'")
        # phase (k_j - k_i).E factorizes through u_i = exp(i(omega_i E0 - k_i E1))
        uvec = np.exp(1j * (omega * x[0] - k * x[1]))
        amat = base * kmat
        term_scale = max(term_scale, float(np.sum(np.abs(amat))))
        out[m] = _kernels.quad_form(amat, uvec)
    vals = _real_with_check(out, "moving_toa_curve", abs_scale=term_scale)
    return DensityCurve(taus, vals, {"kind": "toa-moving", "q": q.tolist(),
                                     "n": grid.size, "kernel": kernel})


# ---------------------------------------------------------------------------
# Wightman function on a timelike worldline separation

def wightman_timelike(mass, s, epsilon):
    """Vacuum two-point function at proper-time separation s, regulated by
    s -> s - i*epsilon.

    Massless: closed form -1/(4 pi^2 (s - i eps)^2).  Massive: radial
    quadrature (hyperbolic substitution) refined by node doubling until the
    result moves by less than 1e-6 relative.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if mass == 0:
        z = s - 1j * epsilon
        return complex(-1.0 / (4.0 * np.pi**2 * z**2))
    theta_max = np.arccosh(max(_omega_cutoff(epsilon) / mass, 2.0))
    n = 4096
    prev = None
    for _ in range(9):
        theta = np.linspace(0.0, theta_max, n)
        integrand = (
            mass**2
            * np.sinh(theta) ** 2
            * np.exp(-1j * mass * np.cosh(theta) * (s - 1j * epsilon))
        )
        val = complex(np.trapezoid(integrand, theta) / (4.0 * np.pi**2))
        if prev is not None and abs(val - prev) <= 1e-6 * abs(val):
            return val
        prev = val
        n *= 2
    warnings.warn(
        "wightman quadrature did not converge to 1e-6 relative",
        ConvergenceWarning,
        stacklevel=2,
    )
    return prev


def wightman_timelike_many(mass, s, epsilon):
    """Vectorized Wightman evaluation over an array of separations."""
    s = np.asarray(s, dtype=np.float64)
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if mass == 0:
        z = s - 1j * epsilon
        return -1.0 / (4.0 * np.pi**2 * z**2)
    theta_max = np.arccosh(max(25.0 / (epsilon * mass), 2.0))
    smax = float(np.max(np.abs(s))) if s.size else 0.0
    phase_max = mass * np.cosh(theta_max) * max(smax, epsilon)
    n = int(max(8192, 2 ** np.ceil(np.log2(max(6.0 * phase_max / np.pi, 2)))))
    theta = np.linspace(0.0, theta_max, n + 1)
    h = theta[1] - theta[0]
    trap = np.full(n + 1, h)
    trap[0] = trap[-1] = h / 2.0
    ecosh = mass * np.cosh(theta)
    env = (mass**2 * np.sinh(theta) ** 2 * trap * np.exp(-epsilon * ecosh)
           / (4.0 * np.pi**2))
    out = np.empty(s.shape, dtype=np.complex128)
    flat = s.ravel()
    ds = np.diff(flat)
    uniform = ds.size > 1 and np.allclose(ds, ds[0], rtol=1e-12, atol=0)
    if uniform and flat.size > 64:
        # march along the uniform s grid with a phase recurrence instead of
        # exponentiating the full (s, theta) matrix
        cur = np.exp(-1j * flat[0] * ecosh)
        ratio = np.exp(-1j * ds[0] * ecosh)
        res = out.ravel()
        for j in range(flat.size):
            res[j] = cur @ env
            cur = cur * ratio
        return out
    step = max(1, int(4e6 // (n + 1)))
    for lo in range(0, flat.size, step):
        hi = min(lo + step, flat.size)
        phases = np.exp(np.outer(-1j * flat[lo:hi], ecosh))
        out.ravel()[lo:hi] = phases @ env
    return out


def _omega_cutoff(epsilon):
    # envelope omega*exp(-omega*eps) below 1e-10 of its integral
    return 30.0 / epsilon


# ---------------------------------------------------------------------------
# quadratic (scattering) coupling

def scattering_kernel_table(det, grid, epsilon=None):
    """Response kernel for quadratic coupling: the Fourier transform of
    4 * effective_eta(s) * wightman(s), tabulated over the grid's midpoint
    energy range and spline-interpolated."""
    mass = grid.mass
    if epsilon is None:
        epsilon = 1.0 / (10.0 * grid.k_max)
    d = det.degradation
    td = d.decay_time()
    w = 12.0 * min(det.sigma if np.isfinite(det.sigma) else np.inf,
                   td if np.isfinite(td) else np.inf)
    if not np.isfinite(w):
        raise ValueError("quadratic coupling needs a decaying effective window")
    n_s = int(max(8192, 2 ** np.ceil(np.log2(16.0 * w / epsilon)))) + 1
    s = np.linspace(-w, w, n_s)
    kappa = 4.0 * det.effective_eta(s) * wightman_timelike_many(mass, s, epsilon)
    h = s[1] - s[0]
    trap = np.full(n_s, h)
    trap[0] = trap[-1] = h / 2.0
    weighted = kappa * trap
    lo = float(grid.omega.min())
    hi = float(grid.omega.max())
    pad = 1e-9 * max(hi, 1.0)
    oms = np.linspace(lo - pad, hi + pad, 1025)
    vals = np.empty(oms.size, dtype=np.complex128)
    step = max(1, int(4e6 // n_s))
    for a in range(0, oms.size, step):
        b = min(a + step, oms.size)
        vals[a:b] = np.exp(1j * np.outer(oms[a:b], s)) @ weighted
    # hermitian kappa(s) makes the transform real
    spl = CubicSpline(oms, vals.real)
    return lambda om: spl(om)


def quadratic_toa_density(psi, det, tau, q, epsilon=None):
    """Density for quadratic field coupling (detection through scattering)."""
    return float(quadratic_toa_curve(psi, det, [tau], q, epsilon).values[0])


def quadratic_toa_curve(psi, det, taus, q, epsilon=None):
    _require_static(det, "quadratic_toa_density")
    rho1 = ReducedDensityMatrix.from_pure(psi)
    fn = scattering_kernel_table(det, psi.grid, epsilon)
    curve = toa_curve(rho1, det, taus, q, kernel_override=fn)
    curve.metadata["kind"] = "toa-quadratic"
    return curve


# ---------------------------------------------------------------------------
# curve utilities

def normalize_curve(c):
    """Rescale so the trapezoid integral over tau equals 1."""
    area = float(np.trapezoid(c.values, c.tau))
    if not np.isfinite(area) or area <= 0:
        raise ValueError(f"curve integrates to {area:g}; cannot normalize")
    vmin = float(np.min(c.values))
    vmax = float(np.max(c.values))
    if vmin < -1e-6 * max(vmax, 1e-300):
        warnings.warn(
            f"density reaches {vmin:.3e} (peak {vmax:.3e}); negativity beyond "
            "the soft floor is reported, not clipped",
            NegativityWarning,
            stacklevel=2,
        )
    meta = dict(c.metadata)
    meta.update({"area": area, "min": vmin, "max": vmax})
    return DensityCurve(c.tau, c.values / area, meta)


def arrival_moments(c):
    """(mean, variance) of the normalized curve."""
    n = normalize_curve(c)
    mean = float(np.trapezoid(n.tau * n.values, n.tau))
    var = float(np.trapezoid((n.tau - mean) ** 2 * n.values, n.tau))
    return mean, var


def state_from_csv(path, mass, scheme="trapezoid"):
    """Load a state from CSV columns (k, Re psi, Im psi); the k column
    defines the grid nodes (composite trapezoid weights)."""
    import csv as _csv

    from .grids import MomentumGrid

    ks, re, im = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in _csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(x) for x in row]
            except ValueError:
                continue
            ks.append(vals[0])
            re.append(vals[1])
            im.append(vals[2] if len(vals) > 2 else 0.0)
    ks = np.asarray(ks)
    w = np.empty_like(ks)
    w[1:-1] = 0.5 * (ks[2:] - ks[:-2])
    w[0] = 0.5 * (ks[1] - ks[0])
    w[-1] = 0.5 * (ks[-1] - ks[-2])
    grid = MomentumGrid(ks, w, mass, "trapezoid")
    return OneParticleState(grid, np.asarray(re) + 1j * np.asarray(im))
