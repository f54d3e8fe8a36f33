"""Detector characterization: worldline embedding, coarse-graining scales,
degradation function, and the Fourier transform of the effective temporal
window g_sigma(s)*eta(s) with g_sigma(s) = exp(-s^2/(8 sigma^2)).
"""

import csv
import warnings

import numpy as np

from .grids import fourier_transform_1d, fourier_transform_many

MINKOWSKI = np.diag([-1.0, 1.0, 1.0, 1.0])


class RqdetWarning(UserWarning):
    """Base class for numerical-validity warnings raised by this package."""


class CoarseGrainingWarning(RqdetWarning):
    """sigma/delta hierarchy advisory."""


class AccelerationWarning(RqdetWarning):
    """First-order worldline expansion outside its validity range."""


def minkowski_dot(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


# ---------------------------------------------------------------------------
# embeddings

class Embedding:
    """Detector world-tube E(tau, q), tau the proper time of the q=0 line.

    Kinds: static, inertial (three-velocity v, |v| < 1), uniform-acceleration
    (proper acceleration a > 0, motion along x), tabulated (sampled worldline
    with a proper-time column).
    """

    def __init__(self, kind, **params):
        self.kind = kind
        self.params = params
        if kind == "static":
            pass
        elif kind == "inertial":
            v = np.asarray(params["velocity"], dtype=np.float64)
            if v.shape != (3,):
                raise ValueError("inertial velocity must be a 3-vector")
            if np.linalg.norm(v) >= 1.0:
                raise ValueError("|v| must be < 1")
            self._v = v
            self._gamma = 1.0 / np.sqrt(1.0 - v @ v)
        elif kind == "uniform-acceleration":
            a = float(params["acceleration"])
            if a <= 0:
                raise ValueError("proper acceleration must be > 0")
            self._a = a
        elif kind == "tabulated":
            tau = np.asarray(params["tau"], dtype=np.float64)
            coords = np.asarray(params["coords"], dtype=np.float64)
            if tau.ndim != 1 or coords.shape != (tau.size, 4):
                raise ValueError("tabulated worldline needs tau (n,) and coords (n,4)")
            if np.any(np.diff(tau) <= 0):
                raise ValueError("tabulated proper-time column must increase")
            from scipy.interpolate import CubicSpline

            self._tau_table = tau
            self._spline = CubicSpline(tau, coords, axis=0)
            self._dspline = self._spline.derivative()
            u = self._dspline(tau)
            norm = minkowski_dot(u, u)
            if np.max(np.abs(norm + 1.0)) > 1e-8:
                raise ValueError(
                    "tabulated worldline is not parameterized by proper time "
                    f"(max |u.u + 1| = {np.max(np.abs(norm + 1.0)):.3e})"
                )
        else:
            raise ValueError(f"unknown embedding kind {kind!r}")

    # constructors -----------------------------------------------------
    @classmethod
    def static(cls):
        return cls("static")

    @classmethod
    def inertial(cls, velocity):
        return cls("inertial", velocity=np.asarray(velocity, dtype=np.float64))

    @classmethod
    def uniformly_accelerated(cls, acceleration):
        return cls("uniform-acceleration", acceleration=acceleration)

    @classmethod
    def tabulated(cls, tau, coords):
        return cls("tabulated", tau=tau, coords=coords)

    # geometry ----------------------------------------------------------
    def point(self, tau, q=(0.0, 0.0, 0.0)):
        """Spacetime point E(tau, q) as a 4-vector (t, x, y, z)."""
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (3,):
            raise ValueError("q must be a 3-vector")
        if self.kind == "static":
            return np.array([tau, q[0], q[1], q[2]])
        if self.kind == "inertial":
            g = self._gamma
            return np.array(
                [g * tau, q[0] + g * self._v[0] * tau,
                 q[1] + g * self._v[1] * tau, q[2] + g * self._v[2] * tau]
            )
        if self.kind == "uniform-acceleration":
            a = self._a
            return np.array(
                [np.sinh(a * tau) / a, (np.cosh(a * tau) - 1.0) / a + q[0], q[1], q[2]]
            )
        self._check_range(tau)
        base = self._spline(tau)
        return base + np.array([0.0, q[0], q[1], q[2]])

    def four_velocity(self, tau):
        if self.kind == "static":
            return np.array([1.0, 0.0, 0.0, 0.0])
        if self.kind == "inertial":
            g = self._gamma
            return np.array([g, g * self._v[0], g * self._v[1], g * self._v[2]])
        if self.kind == "uniform-acceleration":
            a = self._a
            return np.array([np.cosh(a * tau), np.sinh(a * tau), 0.0, 0.0])
        self._check_range(tau)
        return np.asarray(self._dspline(tau), dtype=np.float64)

    def proper_acceleration(self, tau):
        if self.kind in ("static", "inertial"):
            return 0.0
        if self.kind == "uniform-acceleration":
            return self._a
        self._check_range(tau)
        acc = self._dspline.derivative()(tau)
        val = minkowski_dot(acc, acc)
        return float(np.sqrt(max(val, 0.0)))

    def _check_range(self, tau):
        lo, hi = self._tau_table[0], self._tau_table[-1]
        if np.any(np.asarray(tau) < lo) or np.any(np.asarray(tau) > hi):
            raise ValueError(f"tau outside tabulated range [{lo:g}, {hi:g}]")


def embedding_point(e, tau, q=(0.0, 0.0, 0.0)):
    return e.point(tau, q)


def four_velocity(e, tau):
    return e.four_velocity(tau)


# ---------------------------------------------------------------------------
# degradation functions

class DegradationFunction:
    """Persistence amplitude eta(s) of a measurement record: |eta| <= 1,
    eta(0) = 1."""

    variant = None
    real_even = False
    # (gauss_rate, phase_freq): eta = exp(-i*phase_freq*s - gauss_rate*s^2)
    gaussian_params = None

    def eta(self, s):
        raise NotImplementedError

    def decay_time(self):
        raise NotImplementedError


class GaussianEnergy(DegradationFunction):
    """Calorimeter record: eta(s) = exp(-i*E*s) * exp(-C*T^2*s^2/2)."""

    variant = "gaussian-energy"

    def __init__(self, energy, heat_capacity, temperature):
        if heat_capacity < 0:
            raise ValueError("heat capacity must be >= 0")
        if temperature <= 0:
            raise ValueError("temperature must be > 0")
        self.energy = float(energy)
        self.heat_capacity = float(heat_capacity)
        self.temperature = float(temperature)
        rate = 0.5 * heat_capacity * temperature**2
        self.gaussian_params = (rate, self.energy)
        self.real_even = energy == 0.0

    def eta(self, s):
        s = np.asarray(s, dtype=np.float64)
        rate, e0 = self.gaussian_params
        return np.exp(-1j * e0 * s - rate * s**2)

    def decay_time(self):
        rate = self.gaussian_params[0]
        return np.inf if rate == 0 else 1.0 / np.sqrt(2.0 * rate)


class GaussianSimple(DegradationFunction):
    """Plain Gaussian decay with time scale tau_d."""

    variant = "gaussian-simple"
    real_even = True

    def __init__(self, tau_d):
        if tau_d <= 0:
            raise ValueError("tau_d must be > 0")
        self.tau_d = float(tau_d)
        self.gaussian_params = (0.5 / tau_d**2, 0.0)

    def eta(self, s):
        s = np.asarray(s, dtype=np.float64)
        return np.exp(-(s**2) / (2.0 * self.tau_d**2)).astype(np.complex128)

    def decay_time(self):
        return self.tau_d


class Diffusion(DegradationFunction):
    """Position record diffusing in a homogeneous medium.

    Exact Gaussian-overlap persistence of a width-delta record under
    Brownian spreading, normalized to eta(0) = 1:
    |eta(s)|^2 = (1 + D|s|/delta^2)^(-3/2), taken real and positive.
    """

    variant = "diffusion"
    real_even = True

    def __init__(self, diffusion_coefficient, record_size):
        if diffusion_coefficient <= 0:
            raise ValueError("diffusion coefficient must be > 0")
        if record_size <= 0:
            raise ValueError("record size must be > 0")
        self.diffusion_coefficient = float(diffusion_coefficient)
        self.record_size = float(record_size)

    def eta(self, s):
        s = np.asarray(s, dtype=np.float64)
        x = self.diffusion_coefficient * np.abs(s) / self.record_size**2
        return np.power(1.0 + x, -0.75).astype(np.complex128)

    def decay_time(self):
        return self.record_size**2 / self.diffusion_coefficient


class TabulatedEta(DegradationFunction):
    """eta(s) sampled on a uniform s grid, linearly interpolated, zero
    outside the table."""

    variant = "tabulated"

    def __init__(self, s, values):
        s = np.asarray(s, dtype=np.float64)
        values = np.asarray(values, dtype=np.complex128)
        if s.ndim != 1 or s.shape != values.shape or s.size < 3:
            raise ValueError("need matching 1-D s and eta arrays, >= 3 samples")
        ds = np.diff(s)
        if np.any(ds <= 0):
            raise ValueError("s column must increase")
        if not np.allclose(ds, ds[0], rtol=1e-8, atol=0):
            raise ValueError("s samples must be uniformly spaced")
        if np.max(np.abs(values)) > 1.0 + 1e-9:
            raise ValueError("|eta| must not exceed 1")
        at0 = np.interp(0.0, s, values.real) + 1j * np.interp(0.0, s, values.imag)
        if abs(at0 - 1.0) > 1e-8:
            raise ValueError("eta(0) must equal 1")
        if s[0] > 0 or s[-1] < 0:
            raise ValueError("table must bracket s = 0")
        self.s = s
        self.values = values
        hermitian = np.allclose(values, np.conj(values[::-1]), atol=1e-10)
        self.real_even = hermitian and np.max(np.abs(values.imag)) < 1e-12
        self.hermitian = hermitian

    def eta(self, s):
        s = np.asarray(s, dtype=np.float64)
        re = np.interp(s, self.s, self.values.real, left=0.0, right=0.0)
        im = np.interp(s, self.s, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    def decay_time(self):
        mag = np.abs(self.values)
        below = self.s[(self.s > 0) & (mag <= np.exp(-0.5))]
        return float(below[0]) if below.size else float(self.s[-1])


class FromAbsorption(DegradationFunction):
    """Degradation reconstructed from a measured absorption coefficient.

    The frequency response is alpha(omega)*sqrt(omega^2 - m^2) for
    omega >= m (zero below threshold); eta(s) follows from the normalized
    inverse cosine transform, so eta(0) = 1 and |eta| <= 1 hold whenever
    alpha >= 0.
    """

    variant = "from-absorption"
    real_even = True

    def __init__(self, alpha, mass, omega_max):
        if mass < 0:
            raise ValueError("mass must be >= 0")
        if omega_max <= mass:
            raise ValueError("omega_max must exceed the mass threshold")
        self.alpha = alpha
        self.mass = float(mass)
        self.omega_max = float(omega_max)
        n = 4096
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (omega_max - mass)
        self._om = mass + half * (x + 1.0)
        self._ww = half * w
        self._resp = np.asarray(alpha(self._om), dtype=np.float64) * np.sqrt(
            self._om**2 - mass**2
        )
        if np.any(self._resp < -1e-12):
            raise ValueError("absorption coefficient must be >= 0")
        self._norm = float(self._ww @ self._resp)
        if self._norm <= 0:
            raise ValueError("absorption response integrates to zero")

    def response(self, omega):
        omega = np.asarray(omega, dtype=np.float64)
        if np.any(np.abs(omega) < self.mass):
            raise ValueError("omega below the mass threshold")
        return np.asarray(self.alpha(np.abs(omega)), dtype=np.float64) * np.sqrt(
            omega**2 - self.mass**2
        )

    def eta(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        out = np.cos(np.outer(s, self._om)) @ (self._ww * self._resp) / self._norm
        return out.astype(np.complex128) if out.size > 1 else complex(out[0])

    def decay_time(self):
        # width of the response sets the decay scale
        mean = float(self._ww @ (self._resp * self._om)) / self._norm
        var = float(self._ww @ (self._resp * (self._om - mean) ** 2)) / self._norm
        return 1.0 / np.sqrt(max(var, 1e-300))


def eval_eta(d, s):
    """Evaluate the degradation function at proper-time separation s."""
    if not np.all(np.isfinite(s)):
        raise ValueError("s must be finite")
    val = d.eta(s)
    if np.ndim(s) == 0:
        return complex(np.asarray(val).ravel()[0])
    return val


def eta_tilde_from_absorption(alpha, mass, omega):
    """Frequency response alpha(omega)*sqrt(omega^2 - mass^2), omega >= mass."""
    if omega < mass:
        raise ValueError(f"omega = {omega:g} below the mass threshold {mass:g}")
    return float(alpha(omega)) * np.sqrt(omega**2 - mass**2)


# ---------------------------------------------------------------------------
# effective window transform

def _window_extent(d, sigma):
    if d.variant == "tabulated":
        # the table is the full support of eta; only the coarse-graining
        # window can shrink it
        w_tab = float(max(-d.s[0], d.s[-1]))
        w = w_tab if np.isinf(sigma) else min(12.0 * sigma, w_tab)
    else:
        td = d.decay_time()
        if np.isinf(sigma):
            w = 12.0 * td
        elif np.isinf(td):
            w = 12.0 * sigma
        else:
            w = 12.0 * max(sigma, td)
    if not np.isfinite(w) or w <= 0:
        raise ValueError("cannot size a Fourier window for this degradation")
    return w


def window_gaussian(s, sigma):
    """Temporal coarse-graining window g_sigma(s) = exp(-s^2/(8 sigma^2))."""
    if np.isinf(sigma):
        return np.ones_like(np.asarray(s, dtype=np.float64))
    return np.exp(-np.asarray(s, dtype=np.float64) ** 2 / (8.0 * sigma**2))


def eta_tilde(d, sigma, omega):
    """Fourier transform of the effective window g_sigma(s)*eta(s),
    convention int ds exp(i omega s).

    Gaussian variants use the closed form; from-absorption returns the
    measured response directly; other variants go through the numeric
    transform.  Real for every Hermitian eta.
    """
    return _eta_tilde_impl(d, sigma, np.asarray(omega, dtype=np.float64), single=np.ndim(omega) == 0)


def eta_tilde_many(d, sigma, omegas):
    """Vectorized eta_tilde over an array of frequencies."""
    return _eta_tilde_impl(d, sigma, np.asarray(omegas, dtype=np.float64), single=False)


def _eta_tilde_impl(d, sigma, omega, single):
    if not np.all(np.isfinite(omega)):
        raise ValueError("omega must be finite")
    if d.gaussian_params is not None:
        rate, e0 = d.gaussian_params
        a = rate + (0.0 if np.isinf(sigma) else 1.0 / (8.0 * sigma**2))
        if a <= 0:
            raise ValueError("combined Gaussian window has no decay")
        val = np.sqrt(np.pi / a) * np.exp(-((omega - e0) ** 2) / (4.0 * a))
        return float(val) if single else val
    if d.variant == "from-absorption":
        val = d.response(omega)
        return float(val) if single else val
    w = _window_extent(d, sigma)

    def f(s):
        return window_gaussian(s, sigma) * d.eta(s)

    if single:
        val = fourier_transform_1d(f, float(omega), w)
        if getattr(d, "hermitian", d.real_even):
            return float(val.real)
        return val
    vals = fourier_transform_many(f, omega, w)
    if getattr(d, "hermitian", d.real_even):
        return vals.real
    return vals


def degradation_from_csv(path):
    """Load a tabulated degradation from CSV columns (s, Re eta[, Im eta])."""
    s, re, im = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(x) for x in row]
            except ValueError:
                continue  # header line
            s.append(vals[0])
            re.append(vals[1])
            im.append(vals[2] if len(vals) > 2 else 0.0)
    return TabulatedEta(np.asarray(s), np.asarray(re) + 1j * np.asarray(im))


# ---------------------------------------------------------------------------
# full detector configuration

class DetectorConfig:
    """Embedding + coarse-graining scales + degradation function."""

    def __init__(self, embedding, sigma, delta, degradation):
        if sigma <= 0:
            raise ValueError("sigma must be > 0")
        if delta <= 0:
            raise ValueError("delta must be > 0")
        if np.isfinite(sigma) and sigma / delta < 10.0:
            warnings.warn(
                f"sigma/delta = {sigma / delta:.3g} < 10: temporal coarse "
                "graining should be much larger than the record size",
                CoarseGrainingWarning,
                stacklevel=2,
            )
        self.embedding = embedding
        self.sigma = float(sigma)
        self.delta = float(delta)
        self.degradation = degradation

    def effective_eta(self, s):
        """g_sigma(s) * eta(s)."""
        return window_gaussian(s, self.sigma) * self.degradation.eta(s)

    def eta_tilde(self, omega):
        return eta_tilde(self.degradation, self.sigma, omega)

    def eta_tilde_many(self, omegas):
        return eta_tilde_many(self.degradation, self.sigma, omegas)

    def check_acceleration(self, taus):
        """Warn when a*sigma >= 0.1 anywhere on the scan (first-order
        worldline expansion validity)."""
        taus = np.atleast_1d(taus)
        amax = max(self.embedding.proper_acceleration(float(t)) for t in taus)
        if amax * self.sigma >= 0.1:
            warnings.warn(
                f"a*sigma = {amax * self.sigma:.3g} >= 0.1: first-order "
                "worldline expansion is not reliable",
                AccelerationWarning,
                stacklevel=2,
            )
        return amax
