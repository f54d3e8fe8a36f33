"""Coherent-state photodetection: the three-term decomposition of the
density (state-independent background, co-rotating, counter-rotating),
Gaussian-pulse closed forms, coarse-graining suppression of the
counter-rotating term, and the incoherent-limit (Glauber) density.
"""

import warnings

import numpy as np

from . import _kernels
from .detector import RqdetWarning
from .scalar import DensityCurve, _kernel_fn, _real_with_check, _require_static


class CoherentPulse:
    """Gaussian coherent pulse: transverse amplitude zeta0, mean wave
    vector k0, spectral width delta."""

    def __init__(self, zeta0, k0, delta):
        zeta0 = np.asarray(zeta0, dtype=np.complex128)
        k0 = np.asarray(k0, dtype=np.float64)
        if zeta0.shape != (3,) or k0.shape != (3,):
            raise ValueError("zeta0 and k0 must be 3-vectors")
        if delta <= 0:
            raise ValueError("delta must be > 0")
        scale = np.linalg.norm(zeta0) * np.linalg.norm(k0)
        if scale > 0 and abs(zeta0 @ k0) > 1e-10 * scale:
            raise ValueError("pulse must be transverse: zeta0 . k0 = 0")
        self.zeta0 = zeta0
        self.k0 = k0
        self.delta = float(delta)
        if delta > 0.2 * np.linalg.norm(k0):
            warnings.warn(
                "delta/|k0| > 0.2: saddle-point closed forms are unreliable",
                RqdetWarning,
                stacklevel=2,
            )


class CollimatedCoherentProfile:
    """Beam-axis reduction of a coherent state: scalar amplitude zeta(k) on
    a massless k > 0 grid, polarization overlap fixed to 1."""

    def __init__(self, grid, zeta):
        if grid.mass != 0:
            raise ValueError("photon grid must be massless")
        if np.any(grid.nodes <= 0):
            raise ValueError("profile grid must have k > 0")
        zeta = np.asarray(zeta, dtype=np.complex128)
        if zeta.shape != grid.nodes.shape:
            raise ValueError("zeta must be defined on the grid nodes")
        self.grid = grid
        self.zeta = zeta

    @classmethod
    def gaussian(cls, grid, zeta0, k0, delta):
        """1-D Gaussian profile normalized so that the kernel-free
        co-rotating term peaks at |zeta0|^2/2."""
        amp = zeta0 * (np.sqrt(2.0 * np.pi) / delta)
        return cls(grid, amp * np.exp(-((grid.nodes - k0) ** 2) / (2.0 * delta**2)))


# ---------------------------------------------------------------------------
# three-term decomposition on the collimated reduction

def photo_background(det):
    """State-independent term: radial invariant-measure integral of the
    response kernel, (1/4 pi^2) * int k eta_tilde(k) dk."""
    # locate a cutoff where k*eta_tilde(k) is negligible
    probe = 1.0
    for _ in range(60):
        if probe * abs(det.eta_tilde(probe)) < 1e-14 * max(abs(det.eta_tilde(0.0)), 1e-300):
            break
        probe *= 2.0
    x, w = np.polynomial.legendre.leggauss(512)
    k = 0.5 * probe * (x + 1.0)
    wk = 0.5 * probe * w
    vals = np.asarray(det.eta_tilde_many(k), dtype=np.float64)
    return float(np.sum(wk * k * vals) / (4.0 * np.pi**2))


def _corotating_matrix(z, det, smear=None):
    grid = z.grid
    mw = grid.measure_weights
    om = grid.omega
    mids = 0.5 * (om[:, None] + om[None, :])
    fn = _kernel_fn(det, float(mids.min()), float(mids.max()))
    c = (mw * om)[:, None] * (mw * om)[None, :]
    mat = 2.0 * c * np.asarray(fn(mids), dtype=np.complex128)
    mat = mat * (z.zeta[:, None] * np.conj(z.zeta)[None, :])
    return mat


def _counter_matrix(z, det, smear=None):
    grid = z.grid
    mw = grid.measure_weights
    om = grid.omega
    diffs = 0.5 * (om[:, None] - om[None, :])
    fn = _kernel_fn(det, float(diffs.min()), float(diffs.max()))
    c = (mw * om)[:, None] * (mw * om)[None, :]
    mat = 2.0 * c * np.asarray(fn(diffs), dtype=np.complex128)
    mat = mat * (z.zeta[:, None] * z.zeta[None, :])
    if smear is not None:
        sig_w, del_w = smear
        osum = om[:, None] + om[None, :]
        ksum = grid.nodes[:, None] + grid.nodes[None, :]
        mat = mat * np.exp(-0.5 * (sig_w**2 * osum**2 + del_w**2 * ksum**2))
    return mat


def photo_terms_collimated(z, det, tau, q):
    """(P0, P1, P2) of the detection density for a collimated coherent
    profile at a static detector."""
    _require_static(det, "photo_terms_collimated")
    p0 = photo_background(det)
    grid = z.grid
    u_beta = grid.nodes * q
    m1 = _corotating_matrix(z, det)
    p1 = _kernels.quad_form(m1, np.exp(1j * (u_beta - grid.omega * tau)))
    p1 = float(_real_with_check(p1, "co-rotating term",
                                abs_scale=float(np.sum(np.abs(m1))))[0])
    m2 = _counter_matrix(z, det)
    v = np.exp(1j * (u_beta - grid.omega * tau))
    p2 = -float(np.real(_kernels.bilinear_form(m2, v)))
    return p0, p1, p2


def photo_p1_curve(z, det, taus, q):
    _require_static(det, "photo_terms_collimated")
    grid = z.grid
    m1 = _corotating_matrix(z, det)
    raw = _kernels.quad_form_scan(m1, -grid.omega, grid.nodes * q,
                                  np.asarray(taus, dtype=np.float64))
    vals = _real_with_check(raw, "co-rotating term",
                            abs_scale=float(np.sum(np.abs(m1))))
    return DensityCurve(np.asarray(taus, dtype=np.float64), vals,
                        {"kind": "photo-p1", "q": q})


def photo_p2_curve(z, det, taus, q, smeared=False, sigma_w=None, delta_w=None):
    """Counter-rotating term over a tau grid; smeared=True applies the
    Gaussian coarse-graining windows (defaults: the detector's sigma and
    delta) exactly, component by component."""
    _require_static(det, "photo_terms_collimated")
    grid = z.grid
    smear = None
    if smeared:
        smear = (det.sigma if sigma_w is None else sigma_w,
                 det.delta if delta_w is None else delta_w)
    m2 = _counter_matrix(z, det, smear=smear)
    raw = _kernels.bilinear_scan(m2, -grid.omega, grid.nodes * q,
                                 np.asarray(taus, dtype=np.float64))
    return DensityCurve(np.asarray(taus, dtype=np.float64), -np.real(raw),
                        {"kind": "photo-p2", "q": q, "smeared": smeared})


def counter_rotating_suppression(sigma, delta, k0):
    """Coarse-graining suppression envelope exp(-(delta^2 + sigma^2) k0^2)."""
    if sigma < 0 or delta < 0 or k0 < 0:
        raise ValueError("sigma, delta, k0 must be >= 0")
    return float(np.exp(-(delta**2 + sigma**2) * k0**2))


# ---------------------------------------------------------------------------
# Gaussian-pulse closed forms

def gaussian_pulse_p1_closed(p, eta0, tau, q):
    """Saddle-point co-rotating term: |zeta0|^2/2 * eta0 *
    exp(-delta^2 (q - v0 tau)^2) with v0 the photon unit velocity."""
    q = np.asarray(q, dtype=np.float64)
    v0 = p.k0 / np.linalg.norm(p.k0)
    dx = q - v0 * tau
    amp = float(np.sum(np.abs(p.zeta0) ** 2))
    return 0.5 * amp * eta0 * float(np.exp(-p.delta**2 * (dx @ dx)))


def gaussian_pulse_p2_closed(p, det, tau, q, n=4097):
    """Saddle-point counter-rotating term: oscillatory envelope times the
    window integral int ds effective_eta(s) exp(-delta^2 s^2); the stray
    pulse-profile factor is taken at its peak."""
    q = np.asarray(q, dtype=np.float64)
    w0 = np.linalg.norm(p.k0)
    td = det.degradation.decay_time()
    w = 12.0 * min(det.sigma if np.isfinite(det.sigma) else np.inf,
                   td if np.isfinite(td) else np.inf, 6.0 / p.delta)
    s = np.linspace(-w, w, n)
    window_integral = np.trapezoid(
        det.effective_eta(s) * np.exp(-p.delta**2 * s**2), s
    )
    osc = np.real(np.sum(p.zeta0**2) * np.exp(1j * (p.k0 @ q - w0 * tau)))
    return -0.5 * osc * float(np.real(window_integral))


# ---------------------------------------------------------------------------
# incoherent-limit density

def glauber_amplitude(z, tau, q):
    """Measure-weighted positive-frequency field amplitude
    sum_i mw_i omega_i zeta_i exp(i(k_i q - omega_i tau))."""
    grid = z.grid
    c = grid.measure_weights * grid.omega * z.zeta
    phase = np.exp(1j * (grid.nodes * q - grid.omega * tau))
    return complex(np.sum(c * phase))


def glauber_density(z, tau, q):
    """Incoherent-detector density 2 |amplitude|^2; exactly nonnegative."""
    return 2.0 * abs(glauber_amplitude(z, tau, q)) ** 2


def glauber_curve(z, taus, q):
    grid = z.grid
    c = (grid.measure_weights * grid.omega * z.zeta) * np.exp(1j * grid.nodes * q)
    amps = _kernels.amp_scan(c, -grid.omega, np.asarray(taus, dtype=np.float64))
    return DensityCurve(np.asarray(taus, dtype=np.float64),
                        2.0 * np.abs(amps) ** 2,
                        {"kind": "glauber", "q": q})
