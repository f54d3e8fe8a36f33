"""Momentum grids, oscillatory double sums and 1-D Fourier transforms.

Natural units throughout (hbar = c = 1); momenta are expressed in a
user-chosen reference mass scale.  The grid carries both the plain
quadrature weights for integrals over dk and the invariant-measure weights
w/(4*pi*omega) for integrals over dk/(2*pi*2*omega).
"""

import warnings

import numpy as np

from . import _kernels

SCHEMES = ("trapezoid", "gauss-legendre")


class QuadratureWindowWarning(UserWarning):
    """Integrand not negligible at the truncation boundary."""


class MomentumGrid:
    """1-D momentum quadrature with the Lorentz-invariant measure.

    Attributes
    ----------
    nodes : (n,) strictly increasing momenta
    raw_weights : (n,) plain quadrature weights for integrals over dk
    measure_weights : (n,) raw_weights / (4*pi*omega), the discretized
        invariant measure dk/(2*pi*2*omega)
    omega : (n,) on-shell energies sqrt(k^2 + mass^2)
    """

    def __init__(self, nodes, raw_weights, mass, scheme):
        nodes = np.asarray(nodes, dtype=np.float64)
        raw_weights = np.asarray(raw_weights, dtype=np.float64)
        if nodes.ndim != 1 or nodes.shape != raw_weights.shape:
            raise ValueError("nodes and raw_weights must be matching 1-D arrays")
        if nodes.size < 2:
            raise ValueError("grid needs at least 2 nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(raw_weights <= 0):
            raise ValueError("raw_weights must be positive")
        if mass < 0:
            raise ValueError("mass must be >= 0")
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        self.nodes = nodes
        self.raw_weights = raw_weights
        self.mass = float(mass)
        self.scheme = scheme
        self.omega = np.sqrt(nodes**2 + mass**2)
        with np.errstate(divide="ignore"):
            # infinite at a massless k = 0 node; ops needing the invariant
            # measure reject such grids
            self.measure_weights = raw_weights / (4.0 * np.pi * self.omega)

    @property
    def size(self):
        return self.nodes.size

    @property
    def k_min(self):
        return self.nodes[0]

    @property
    def k_max(self):
        return self.nodes[-1]

    def refined(self, factor=2):
        """Same span and scheme with factor-times-denser nodes."""
        n = (self.size - 1) * factor + 1 if self.scheme == "trapezoid" else self.size * factor
        return build_grid(self.k_min, self.k_max, n, self.scheme, self.mass)

    def __repr__(self):
        return (
            f"MomentumGrid(n={self.size}, k=[{self.k_min:g}, {self.k_max:g}], "
            f"mass={self.mass:g}, scheme={self.scheme!r})"
        )


def build_grid(k_min, k_max, n, scheme="trapezoid", mass=0.0):
    """Build a momentum quadrature grid on [k_min, k_max]."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not k_min < k_max:
        raise ValueError("k_min must be < k_max")
    if mass < 0:
        raise ValueError("mass must be >= 0")
    if scheme == "trapezoid":
        nodes = np.linspace(k_min, k_max, n)
        h = (k_max - k_min) / (n - 1)
        w = np.full(n, h)
        w[0] = w[-1] = h / 2.0
    elif scheme == "gauss-legendre":
        x, wx = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (k_max - k_min)
        nodes = 0.5 * (k_max + k_min) + half * x
        w = half * wx
    else:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    return MomentumGrid(nodes, w, mass, scheme)


class ComplexKernelMatrix:
    """Square complex matrix indexed by (grid node, grid node)."""

    def __init__(self, entries, grid):
        entries = np.asarray(entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        if entries.shape[0] != grid.size:
            raise ValueError("matrix dimension must equal the grid size")
        self.entries = entries
        self.grid = grid


def double_sum(rho, kernel, phase):
    """Measure-weighted oscillatory double sum over the grid.

    Returns sum_ij mw_i mw_j * rho[j, i] * kernel(k_i, k_j)
    * exp(i*phase(k_i, k_j)), with mw the measure weights.  kernel and
    phase must accept numpy meshgrid arrays.  Summation runs in a fixed
    row-major topology for reproducibility.
    """
    grid = rho.grid
    k = grid.nodes
    ki, kj = np.meshgrid(k, k, indexing="ij")
    kmat = np.asarray(kernel(ki, kj), dtype=np.complex128)
    if kmat.shape != (grid.size, grid.size):
        kmat = np.broadcast_to(kmat, (grid.size, grid.size))
    bad = ~np.isfinite(kmat)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"kernel is non-finite at node pair (k={k[i]:.6g}, k'={k[j]:.6g})"
        )
    pmat = np.asarray(phase(ki, kj), dtype=np.float64)
    mw = grid.measure_weights
    a = (mw[:, None] * mw[None, :]) * rho.entries.T * kmat * np.exp(1j * pmat)
    return _kernels.pair_sum(a)


def amplitude_transform(grid, psi, weight, tau_grid, q, method="auto"):
    """Raw-weight amplitude A(tau) = sum_i rw_i weight(k_i) psi_i
    exp(-i*omega_i*tau + i*k_i*q).

    method is "direct", "fft" (chirp-z; requires uniformly spaced omega,
    i.e. a uniform massless grid) or "auto".
    """
    tau_grid = np.asarray(tau_grid, dtype=np.float64)
    if tau_grid.size == 0:
        raise ValueError("tau_grid must be non-empty")
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != grid.nodes.shape:
        raise ValueError("psi must be defined on the grid nodes")
    c = grid.raw_weights * np.asarray(weight(grid.nodes), dtype=np.complex128) * psi
    c = c * np.exp(1j * grid.nodes * q)

    domega = np.diff(grid.omega)
    uniform_omega = domega.size > 0 and np.allclose(
        domega, domega[0], rtol=1e-12, atol=1e-300
    )
    dtau = np.diff(tau_grid)
    uniform_tau = dtau.size > 0 and np.allclose(dtau, dtau[0], rtol=1e-12, atol=0)

    if method == "auto":
        method = "fft" if (uniform_omega and uniform_tau and tau_grid.size > 1) else "direct"
    if method == "fft":
        if not (uniform_omega and uniform_tau):
            raise ValueError(
                "fft path requires uniformly spaced omega nodes and tau grid"
            )
        from scipy.signal import czt

        h = domega[0]
        dt = dtau[0]
        # A_m = exp(-i*omega_0*tau_m) * sum_n b_n exp(-i*n*h*tau_m) with
        # b_n = c_n exp(-i*omega_n*tau_0); the index sum is a chirp-z
        b = c * np.exp(-1j * grid.omega * tau_grid[0])
        # czt with a=1 evaluates sum_n b_n * w^{m n}
        vals = czt(b, m=tau_grid.size, w=np.exp(-1j * h * dt), a=1.0 + 0.0j)
        return vals * np.exp(-1j * grid.omega[0] * (tau_grid - tau_grid[0]))
    if method == "direct":
        return _kernels.amp_scan(c, -grid.omega, tau_grid)
    raise ValueError("method must be 'auto', 'direct' or 'fft'")


def fourier_transform_1d(f, omega, window, n=None):
    """Numeric F(omega) = integral_{-W}^{W} ds exp(i*omega*s) f(s).

    Uniform trapezoid sampling; spectrally accurate for smooth f that decay
    below 1e-12 at the window edges.  Warns when the endpoint magnitude
    exceeds that threshold.
    """
    if not np.isfinite(omega):
        raise ValueError("omega must be finite")
    if window <= 0 or not np.isfinite(window):
        raise ValueError("window must be positive and finite")
    if n is None:
        n = _ft_samples(window, abs(omega))
    s = np.linspace(-window, window, n)
    vals = np.asarray(f(s), dtype=np.complex128)
    edge = max(abs(vals[0]), abs(vals[-1]))
    if edge > 1e-12:
        warnings.warn(
            f"integrand magnitude {edge:.3e} at the +/-{window:g} window edge "
            "exceeds 1e-12; transform may be truncated",
            QuadratureWindowWarning,
            stacklevel=2,
        )
    return complex(np.trapezoid(vals * np.exp(1j * omega * s), s))


def fourier_transform_many(f, omegas, window, n=None):
    """Vectorized fourier_transform_1d over an array of frequencies."""
    omegas = np.asarray(omegas, dtype=np.float64)
    if omegas.size == 0:
        return np.empty(0, dtype=np.complex128)
    if not np.all(np.isfinite(omegas)):
        raise ValueError("omegas must be finite")
    if n is None:
        n = _ft_samples(window, float(np.max(np.abs(omegas))))
    s = np.linspace(-window, window, n)
    vals = np.asarray(f(s), dtype=np.complex128)
    edge = max(abs(vals[0]), abs(vals[-1]))
    if edge > 1e-12:
        warnings.warn(
            f"integrand magnitude {edge:.3e} at the +/-{window:g} window edge "
            "exceeds 1e-12; transform may be truncated",
            QuadratureWindowWarning,
            stacklevel=2,
        )
    h = s[1] - s[0]
    trap = np.full(n, h)
    trap[0] = trap[-1] = h / 2.0
    weighted = vals * trap
    # chunked phase matmul keeps memory bounded
    out = np.empty(omegas.size, dtype=np.complex128)
    flat = omegas.ravel()
    step = max(1, int(4e6 // n))
    for lo in range(0, flat.size, step):
        hi = min(lo + step, flat.size)
        phases = np.exp(1j * np.outer(flat[lo:hi], s))
        out[lo:hi] = phases @ weighted
    return out.reshape(omegas.shape)


def _ft_samples(window, omega_abs):
    # >= 16 samples per oscillation, floor of 8192 for the envelope itself
    per_osc = 16.0 * window * omega_abs / np.pi
    return int(max(8192, 2 ** np.ceil(np.log2(max(per_osc, 2))))) + 1
