import numpy as np
import pytest
import scipy.special

from rqdet import (
    DensityCurve,
    DetectorConfig,
    Embedding,
    GaussianSimple,
    NegativityWarning,
    OneParticleState,
    ReducedDensityMatrix,
    arrival_moments,
    build_grid,
    eta_tilde,
    ideal_toa_curve,
    ideal_toa_density,
    kijowski_curve,
    kijowski_reference,
    moving_toa_curve,
    moving_toa_density,
    normalize_curve,
    quadratic_toa_curve,
    scattering_kernel_table,
    state_from_csv,
    toa_curve,
    toa_density,
    wightman_timelike,
    wightman_timelike_many,
)
from rqdet.scalar import integrated_position_density

MASS = 1.0


def packet_grid(k0=5.0, spread=0.2, n=160):
    return build_grid(k0 - 6 * spread, k0 + 6 * spread, n, "gauss-legendre", MASS)


def static_det(tau_d=0.1, sigma=1.0):
    return DetectorConfig(Embedding.static(), sigma, 0.05, GaussianSimple(tau_d))


def bessel_wightman(mass, s, epsilon):
    # independent closed form: m K_1(m(eps + i s)) / (4 pi^2 (eps + i s))
    z = mass * (epsilon + 1j * np.asarray(s))
    return (mass**2 / (4 * np.pi**2)) * scipy.special.kv(1, z) / z


# ---------------------------------------------------------------------------
# states

def test_state_normalization():
    g = packet_grid()
    psi = OneParticleState.gaussian(g, 5.0, 0.2)
    assert abs(g.measure_weights @ np.abs(psi.psi) ** 2 - 1.0) < 1e-12


def test_zero_state_rejected():
    g = packet_grid()
    with pytest.raises(ValueError, match="positive"):
        OneParticleState(g, np.zeros(g.size))


def test_density_matrix_validation():
    g = packet_grid(n=32)
    bad = np.eye(32) + 0.1j * np.eye(32, k=1)
    with pytest.raises(ValueError, match="Hermitian"):
        ReducedDensityMatrix(g, bad)
    sym = np.diag(np.linspace(-1, 1, 32))
    with pytest.raises(ValueError, match="positive"):
        ReducedDensityMatrix.from_kernel(g, sym + 0.6 * np.eye(32))
    ok = ReducedDensityMatrix.from_kernel(g, np.eye(32))
    assert abs(np.real(g.measure_weights @ np.diag(ok.rho)) - 1.0) < 1e-12


def test_pure_density_matrix_trace():
    g = packet_grid()
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.2))
    assert abs(np.real(g.measure_weights @ np.diag(rho.rho)) - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# static linear-coupling density

def test_single_mode_density_constant_and_kernel_proportional():
    g = packet_grid(n=96)
    i0 = 40
    mat = np.zeros((g.size, g.size), complex)
    mat[i0, i0] = 1.0
    rho = ReducedDensityMatrix.from_kernel(g, mat)
    det = static_det(tau_d=0.5)
    vals = [toa_density(rho, det, t, 30.0) for t in (0.0, 5.0, 11.3)]
    assert np.allclose(vals, vals[0], rtol=1e-12)
    # kernel proportionality between two single-mode states
    i1 = 60
    mat2 = np.zeros((g.size, g.size), complex)
    mat2[i1, i1] = 1.0
    rho2 = ReducedDensityMatrix.from_kernel(g, mat2)
    v2 = toa_density(rho2, det, 2.0, 30.0)
    # trace normalization leaves one measure weight per mode
    expect = (g.measure_weights[i1] * eta_tilde(det.degradation, det.sigma,
                                                g.omega[i1])) / (
        g.measure_weights[i0] * eta_tilde(det.degradation, det.sigma, g.omega[i0])
    )
    assert abs(v2 / vals[1] - expect) < 1e-10 * expect


def test_density_peak_near_classical_arrival():
    g = packet_grid()
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.2))
    det = static_det(tau_d=0.1)  # broad response
    q = 100.0
    tau_star = q * np.sqrt(26.0) / 5.0
    taus = np.linspace(tau_star - 10, tau_star + 10, 401)
    c = toa_curve(rho, det, taus, q)
    peak = taus[int(np.argmax(c.values))]
    assert abs(peak - tau_star) <= taus[1] - taus[0]


def test_time_integral_matches_position_density():
    g = packet_grid()
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.2))
    det = static_det(tau_d=0.4)
    q = 100.0
    tau_star = q * np.sqrt(26.0) / 5.0
    taus = np.linspace(tau_star - 30, tau_star + 30, 3001)
    c = toa_curve(rho, det, taus, q)
    area = np.trapezoid(c.values, taus)
    expect = integrated_position_density(rho, det)
    assert abs(area - expect) < 0.01 * expect


def test_density_soft_positivity():
    g = packet_grid()
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.2))
    det = static_det(tau_d=0.3)
    taus = np.linspace(80, 125, 600)
    c = toa_curve(rho, det, taus, 100.0)
    assert c.values.min() >= -1e-6 * c.values.max()


def test_point_evaluation_matches_curve():
    g = packet_grid(n=96)
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.2))
    det = static_det(tau_d=0.4)
    taus = np.linspace(98, 106, 5)
    c = toa_curve(rho, det, taus, 100.0)
    for t, v in zip(taus, c.values):
        assert abs(toa_density(rho, det, t, 100.0) - v) < 1e-12 * abs(v)


def test_toa_density_rejects_moving_embedding():
    g = packet_grid(n=32)
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.2))
    det = DetectorConfig(Embedding.inertial([0.1, 0, 0]), 1.0, 0.05,
                         GaussianSimple(0.3))
    with pytest.raises(ValueError, match="static"):
        toa_density(rho, det, 0.0, 0.0)


def test_time_translation_covariance():
    g = packet_grid()
    det = static_det(tau_d=0.1)
    q = 100.0
    tau_star = q * np.sqrt(26.0) / 5.0
    taus = np.linspace(tau_star - 10, tau_star + 10, 1001)
    t0 = 3.0
    base = OneParticleState.gaussian(g, 5.0, 0.2)
    shifted = OneParticleState(g, base.psi * np.exp(-1j * g.omega * t0))
    c0 = toa_curve(ReducedDensityMatrix.from_pure(base), det, taus, q)
    c1 = toa_curve(ReducedDensityMatrix.from_pure(shifted), det, taus - t0, q)
    assert np.max(np.abs(c1.values - c0.values)) < 1e-8 * np.max(c0.values)


def test_space_translation_covariance():
    g = packet_grid()
    det = static_det(tau_d=0.1)
    q = 100.0
    x0 = 4.0
    tau_star = q * np.sqrt(26.0) / 5.0
    taus = np.linspace(tau_star - 10, tau_star + 10, 1001)
    base = OneParticleState.gaussian(g, 5.0, 0.2)
    shifted = OneParticleState(g, base.psi * np.exp(-1j * g.nodes * x0))
    c0 = toa_curve(ReducedDensityMatrix.from_pure(base), det, taus, q)
    c1 = toa_curve(ReducedDensityMatrix.from_pure(shifted), det, taus, q + x0)
    assert np.max(np.abs(c1.values - c0.values)) < 1e-8 * np.max(c0.values)


# ---------------------------------------------------------------------------
# ideal arrival-time density and the Kijowski reference

def test_ideal_density_nonnegative_and_single_mode():
    g = packet_grid(n=64)
    psi = np.zeros(g.size, complex)
    psi[30] = 1.0
    state = OneParticleState(g, psi)
    vals = [ideal_toa_density(state, MASS, t, 7.0) for t in (0.0, 2.0, 9.1)]
    assert np.allclose(vals, vals[0], rtol=1e-12)
    state2 = OneParticleState.gaussian(g, 5.0, 0.2)
    taus = np.linspace(-50, 150, 300)
    c = ideal_toa_curve(state2, MASS, taus, 40.0)
    assert np.all(c.values >= 0.0)


def test_ideal_rejects_nonpositive_nodes():
    g = build_grid(-1.0, 1.0, 32, "trapezoid", MASS)
    state = OneParticleState.gaussian(g, 0.5, 0.1)
    with pytest.raises(ValueError, match="k > 0"):
        ideal_toa_density(state, MASS, 0.0, 0.0)


def test_kijowski_normalization_and_peak():
    k0, spread, q = 0.01, 0.002, 100.0
    g = build_grid(k0 - 4.5 * spread, k0 + 4.5 * spread, 512, "gauss-legendre", MASS)
    state = OneParticleState.gaussian(g, k0, spread)
    tau_star = q * MASS / k0
    width = q * MASS / k0**2 * spread
    taus = np.linspace(tau_star - 8 * width, tau_star + 8 * width, 2001)
    c = normalize_curve(kijowski_curve(state, MASS, taus, q))
    assert abs(np.trapezoid(c.values, taus) - 1.0) < 1e-3
    peak = taus[int(np.argmax(c.values))]
    assert abs(peak - tau_star) < 3 * width / 8


def test_nonrelativistic_limit_l1():
    k0, spread, q = 0.01, 0.002, 100.0
    g = build_grid(k0 - 4.5 * spread, k0 + 4.5 * spread, 512, "gauss-legendre", MASS)
    state = OneParticleState.gaussian(g, k0, spread)
    tau_star = q * MASS / k0
    width = q * MASS / k0**2 * spread
    taus = np.linspace(tau_star - 6 * width, tau_star + 6 * width, 1501)
    a = normalize_curve(ideal_toa_curve(state, MASS, taus, q))
    b = normalize_curve(kijowski_curve(state, MASS, taus, q))
    assert np.trapezoid(np.abs(a.values - b.values), taus) < 1e-2


def test_kijowski_single_mode_constant():
    g = packet_grid(n=48)
    psi = np.zeros(g.size, complex)
    psi[20] = 1.0
    state = OneParticleState(g, psi)
    vals = [kijowski_reference(state, MASS, t, 5.0) for t in (0.0, 3.0, 8.5)]
    assert np.allclose(vals, vals[0], rtol=1e-12)


# ---------------------------------------------------------------------------
# moving detector

def test_static_reduction_is_exact():
    g = packet_grid(n=96)
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.2))
    det = static_det(tau_d=0.4)
    taus = np.linspace(95.0, 110.0, 64)
    ss = toa_curve(rho, det, taus, 100.0).values
    mm = moving_toa_curve(rho, det, taus, (100.0, 0.0, 0.0)).values
    assert np.max(np.abs(ss - mm)) <= 1e-10 * np.max(np.abs(ss))


def test_doppler_shift_single_mode():
    g = packet_grid(n=96)
    i0 = 48
    mat = np.zeros((g.size, g.size), complex)
    mat[i0, i0] = 1.0
    rho = ReducedDensityMatrix.from_kernel(g, mat)
    v = 0.4
    gamma = 1.0 / np.sqrt(1 - v**2)
    det_s = static_det(tau_d=0.5)
    det_m = DetectorConfig(Embedding.inertial([v, 0, 0]), 1.0, 0.05,
                           GaussianSimple(0.5))
    ps = toa_density(rho, det_s, 2.0, 50.0)
    pm = moving_toa_density(rho, det_m, 2.0, (50.0, 0.0, 0.0))
    k0, w0 = g.nodes[i0], g.omega[i0]
    expect = eta_tilde(det_s.degradation, det_s.sigma, gamma * (w0 - v * k0)) \
        / eta_tilde(det_s.degradation, det_s.sigma, w0)
    assert abs(pm / ps - expect) < 1e-10 * expect


def test_ideal_moving_reduces_to_ideal_static():
    g = packet_grid(n=128)
    state = OneParticleState.gaussian(g, 5.0, 0.2)
    rho = ReducedDensityMatrix.from_pure(state)
    det = static_det(tau_d=0.4)
    taus = np.linspace(99.0, 105.0, 16)
    mv = moving_toa_curve(rho, det, taus, (100.0, 0.0, 0.0), kernel="ideal").values
    ideal = ideal_toa_curve(state, MASS, taus, 100.0).values
    assert np.max(np.abs(mv - ideal)) <= 1e-10 * np.max(ideal)


def test_ideal_moving_exact_vs_factorized_narrow_packet():
    g = packet_grid(k0=5.0, spread=0.1, n=128)
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.1))
    det = DetectorConfig(Embedding.inertial([0.2, 0, 0]), 1.0, 0.05,
                         GaussianSimple(0.4))
    taus = np.linspace(120.0, 130.0, 9)
    a = moving_toa_curve(rho, det, taus, (100.0, 0.0, 0.0), kernel="ideal",
                         ideal_form="factorized").values
    b = moving_toa_curve(rho, det, taus, (100.0, 0.0, 0.0), kernel="ideal",
                         ideal_form="exact").values
    assert np.max(np.abs(a - b)) < 5e-3 * np.max(np.abs(b))


def test_moving_warns_on_fast_acceleration():
    import warnings as _w

    g = packet_grid(n=32)
    rho = ReducedDensityMatrix.from_pure(OneParticleState.gaussian(g, 5.0, 0.2))
    det = DetectorConfig(Embedding.uniformly_accelerated(1.0), 0.5, 0.01,
                         GaussianSimple(0.2))
    from rqdet import AccelerationWarning

    with pytest.warns(AccelerationWarning):
        moving_toa_density(rho, det, 0.5, (10.0, 0.0, 0.0))


# ---------------------------------------------------------------------------
# Wightman function

def test_wightman_massless_closed_forms():
    val = wightman_timelike(0.0, 0.0, 1.0)
    assert abs(val - 1.0 / (4 * np.pi**2)) < 1e-15
    val = wightman_timelike(0.0, 1.0, 1e-7)
    assert abs(val.real + 1.0 / (4 * np.pi**2)) < 1e-6


def test_wightman_rejects_bad_regulator():
    with pytest.raises(ValueError):
        wightman_timelike(1.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        wightman_timelike_many(1.0, np.array([0.5]), -1.0)


def test_wightman_massive_matches_bessel_oracle():
    eps = 0.01
    for s in (0.3, 2.0, 7.5):
        v = wightman_timelike(MASS, s, eps)
        o = complex(bessel_wightman(MASS, s, eps))
        assert abs(v - o) < 1e-6 * abs(o)


def test_wightman_many_matches_bessel_oracle():
    eps = 1.0 / 60.0
    s = np.linspace(-4.0, 4.0, 2049)
    v = wightman_timelike_many(MASS, s, eps)
    o = bessel_wightman(MASS, s, eps)
    assert np.max(np.abs(v - o) / np.abs(o)) < 1e-6


def test_wightman_envelope_decays_at_large_separation():
    eps = 0.01
    s = np.linspace(5.0, 50.0, 46)
    mags = np.abs(wightman_timelike_many(MASS, s, eps))
    assert np.all(np.diff(mags) < 0)


# ---------------------------------------------------------------------------
# quadratic (scattering) coupling

def quad_setup():
    g = build_grid(4.0, 6.0, 128, "gauss-legendre", MASS)
    psi = OneParticleState.gaussian(g, 5.0, 0.15)
    det = DetectorConfig(Embedding.static(), 0.4, 0.02, GaussianSimple(0.3))
    q = 50.0
    tau_star = q * np.sqrt(26.0) / 5.0
    taus = np.linspace(tau_star - 12, tau_star + 12, 401)
    return g, psi, det, q, taus


def test_quadratic_structural_identity():
    g, psi, det, q, taus = quad_setup()
    quad = quadratic_toa_curve(psi, det, taus, q)
    table = scattering_kernel_table(det, g)
    rho = ReducedDensityMatrix.from_pure(psi)
    lin = toa_curve(rho, det, taus, q, kernel_override=table)
    assert np.array_equal(quad.values, lin.values)


def test_quadratic_vs_linear_normalized_shapes():
    g, psi, det, q, taus = quad_setup()
    quad = normalize_curve(quadratic_toa_curve(psi, det, taus, q))
    rho = ReducedDensityMatrix.from_pure(psi)
    lin = normalize_curve(toa_curve(rho, det, taus, q))
    l1 = np.trapezoid(np.abs(quad.values - lin.values), taus)
    assert l1 < 0.02


def test_scattering_kernel_finite():
    g, psi, det, q, taus = quad_setup()
    table = scattering_kernel_table(det, g)
    vals = table(np.linspace(g.omega.min(), g.omega.max(), 50))
    assert np.all(np.isfinite(vals))
    # regulated coincidence-point value is finite
    assert np.isfinite(wightman_timelike(MASS, 0.0, 0.01))


def test_quadratic_rejects_moving():
    g, psi, det, q, taus = quad_setup()
    det_m = DetectorConfig(Embedding.inertial([0.1, 0, 0]), 0.4, 0.02,
                           GaussianSimple(0.3))
    with pytest.raises(ValueError, match="static"):
        quadratic_toa_curve(psi, det_m, taus, q)


# ---------------------------------------------------------------------------
# curve utilities

def test_normalize_constant_curve():
    taus = np.linspace(0.0, 1.0, 101)
    c = normalize_curve(DensityCurve(taus, np.full(101, 7.3)))
    assert np.allclose(c.values, 1.0, rtol=1e-12)
    assert abs(np.trapezoid(c.values, taus) - 1.0) < 1e-10


def test_symmetric_curve_mean():
    taus = np.linspace(5.0, 15.0, 2001)
    c = DensityCurve(taus, np.exp(-((taus - 10.0) ** 2)))
    mean, _ = arrival_moments(c)
    assert abs(mean - 10.0) < 1e-10


def test_gaussian_curve_variance():
    taus = np.linspace(-10.0, 30.0, 4001)
    c = DensityCurve(taus, np.exp(-((taus - 10.0) ** 2) / (2 * 4.0)))
    mean, var = arrival_moments(c)
    assert abs(mean - 10.0) < 1e-8
    assert abs(var - 4.0) < 0.04


def test_normalize_rejects_zero_mass():
    taus = np.linspace(0, 1, 11)
    with pytest.raises(ValueError, match="cannot normalize"):
        normalize_curve(DensityCurve(taus, np.zeros(11)))


def test_normalize_warns_on_negativity():
    taus = np.linspace(0, 1, 101)
    vals = np.ones(101)
    vals[50] = -0.1
    with pytest.warns(NegativityWarning):
        normalize_curve(DensityCurve(taus, vals))


def test_state_csv_round_trip(tmp_path):
    g = packet_grid(n=64)
    state = OneParticleState.gaussian(g, 5.0, 0.2)
    path = tmp_path / "state.csv"
    with open(path, "w") as fh:
        fh.write("k,re,im\n")
        for k, p in zip(g.nodes, state.psi):
            fh.write(f"{k!r},{p.real!r},{p.imag!r}\n")
    loaded = state_from_csv(path, MASS)
    taus = np.linspace(99, 104, 21)
    a = ideal_toa_curve(state, MASS, taus, 100.0).values
    b = ideal_toa_curve(loaded, MASS, taus, 100.0).values
    assert np.max(np.abs(a - b)) < 1e-6 * np.max(a)
