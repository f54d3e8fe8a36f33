import numpy as np
import pytest

from rqdet import (
    AccelerationWarning,
    CoarseGrainingWarning,
    DetectorConfig,
    Diffusion,
    Embedding,
    FromAbsorption,
    GaussianEnergy,
    GaussianSimple,
    TabulatedEta,
    degradation_from_csv,
    eta_tilde,
    eta_tilde_from_absorption,
    eta_tilde_many,
    eval_eta,
)
from rqdet.detector import minkowski_dot, window_gaussian


def all_variants():
    s = np.linspace(-20, 20, 4001)
    return [
        GaussianEnergy(energy=0.8, heat_capacity=1.5, temperature=0.9),
        GaussianSimple(0.7),
        Diffusion(diffusion_coefficient=0.8, record_size=0.5),
        TabulatedEta(s, np.exp(-np.abs(s) / 1.3)),
        FromAbsorption(lambda om: np.exp(-((om - 2.0) ** 2)), 1.0, 20.0),
    ]


# ---------------------------------------------------------------------------
# degradation closed forms

def test_energy_variant_values():
    d = GaussianEnergy(energy=0.0, heat_capacity=1.0, temperature=1.0)
    assert eval_eta(d, 0.0) == 1.0
    assert abs(abs(eval_eta(d, 1.0)) - np.exp(-0.5)) < 1e-15


def test_energy_decay_time_scaling():
    d = GaussianEnergy(energy=0.3, heat_capacity=2.0, temperature=1.7)
    s = 1.0 / (np.sqrt(2.0) * 1.7)
    assert abs(abs(eval_eta(d, s)) - np.exp(-0.5)) < 1e-12
    assert abs(d.decay_time() - s) < 1e-15


def test_energy_phase_is_hermitian():
    d = GaussianEnergy(energy=0.6, heat_capacity=1.0, temperature=1.0)
    s = np.linspace(-4, 4, 101)
    vals = d.eta(s)
    assert np.allclose(vals[::-1], np.conj(vals), rtol=1e-14)


def test_diffusion_closed_form():
    d = Diffusion(diffusion_coefficient=1.3, record_size=0.6)
    s = d.record_size**2 / d.diffusion_coefficient
    assert abs(abs(eval_eta(d, s)) ** 2 - 2.0 ** (-1.5)) < 1e-15


def test_diffusion_matches_overlap_integral_oracle():
    # independent oracle: per-axis double integral of the Brownian
    # propagator against two width-delta Gaussian records, cubed, and
    # normalized by its s -> 0 limit (the squared-record integral)
    dd, delta = 0.8, 0.5
    d = Diffusion(dd, delta)
    x, w = np.polynomial.legendre.leggauss(220)
    half = 8.0 * delta
    q = half * x
    wq = half * w

    def rho(v):
        return np.exp(-(v**2) / (2 * delta**2)) / np.sqrt(2 * np.pi * delta**2)

    norm_axis = np.sum(wq * rho(q) ** 2)  # s -> 0 limit per axis

    def overlap_axis(s):
        g = np.exp(-((q[:, None] - q[None, :]) ** 2) / (4 * dd * abs(s))) / np.sqrt(
            4 * np.pi * dd * abs(s)
        )
        return float(wq @ g @ (wq * rho(q)) @ np.ones(1)) if False else float(
            np.einsum("i,ij,j->", wq * rho(q), g, wq * rho(q))
        )

    taud = delta**2 / dd
    for s in np.linspace(0.05 * taud, 10 * taud, 12):
        oracle = (overlap_axis(s) / norm_axis) ** 3
        closed = abs(eval_eta(d, s)) ** 2
        assert abs(oracle - closed) < 1e-4


def test_eval_eta_invariants_all_variants():
    rng = np.random.default_rng(11)
    s = rng.uniform(-40, 40, size=10_000)
    for d in all_variants():
        vals = d.eta(s)
        assert np.max(np.abs(vals)) <= 1.0 + 1e-12, d.variant
        assert abs(complex(np.asarray(d.eta(0.0)).ravel()[0]) - 1.0) < 1e-8, d.variant


def test_eval_eta_rejects_nonfinite():
    with pytest.raises(ValueError):
        eval_eta(GaussianSimple(1.0), np.nan)


def test_tabulated_validation():
    s = np.linspace(-2, 2, 101)
    with pytest.raises(ValueError, match="uniformly spaced"):
        TabulatedEta(np.sort(np.random.default_rng(0).uniform(-2, 2, 101)),
                     np.ones(101))
    with pytest.raises(ValueError, match="exceed 1"):
        TabulatedEta(s, 1.5 * np.exp(-np.abs(s)))
    with pytest.raises(ValueError, match="equal 1"):
        TabulatedEta(s, 0.5 * np.exp(-np.abs(s)))


# ---------------------------------------------------------------------------
# effective-window transform

def test_eta_tilde_gaussian_values():
    d = GaussianSimple(1.0)
    assert abs(eta_tilde(d, np.inf, 0.0) - np.sqrt(2 * np.pi)) < 1e-12
    assert abs(eta_tilde(d, np.inf, 1.0) - np.sqrt(2 * np.pi) * np.exp(-0.5)) < 1e-12
    taud = 0.4
    d2 = GaussianSimple(taud)
    assert abs(eta_tilde(d2, np.inf, 0.0) - np.sqrt(2 * np.pi) * taud) < 1e-12


def test_eta_tilde_includes_window():
    # with eta = 1 effectively (huge tau_d) only g_sigma transforms:
    # sqrt(8 pi) sigma exp(-2 sigma^2 w^2)
    d = GaussianSimple(1e8)
    sigma = 0.7
    for om in (0.0, 0.9, 2.3):
        expect = np.sqrt(8 * np.pi) * sigma * np.exp(-2 * sigma**2 * om**2)
        assert abs(eta_tilde(d, sigma, om) - expect) < 1e-10 * expect


def test_eta_tilde_tabulated_exponential():
    taud = 0.7
    s = np.linspace(-25, 25, 20001)
    d = TabulatedEta(s, np.exp(-np.abs(s) / taud))
    val = eta_tilde(d, np.inf, 0.0)
    assert abs(val - 2 * taud) < 1e-4


def test_eta_tilde_real_even_for_symmetric_eta():
    d = Diffusion(0.9, 0.6)
    vals = eta_tilde_many(d, 1.2, np.array([-2.0, -0.5, 0.5, 2.0]))
    assert not np.iscomplexobj(vals)
    assert abs(vals[0] - vals[3]) < 1e-10 * abs(vals[0])
    assert abs(vals[1] - vals[2]) < 1e-10 * abs(vals[1])


def test_eta_tilde_energy_variant_centered_at_gap():
    d = GaussianEnergy(energy=1.5, heat_capacity=1.0, temperature=1.0)
    grid = np.linspace(-2, 5, 141)
    vals = eta_tilde_many(d, np.inf, grid)
    assert abs(grid[int(np.argmax(vals))] - 1.5) < 0.06


# ---------------------------------------------------------------------------
# absorption reconstruction

def test_absorption_threshold_zero():
    assert eta_tilde_from_absorption(lambda om: 3.7, 1.0, 1.0) == 0.0


def test_absorption_unit_example():
    val = eta_tilde_from_absorption(lambda om: 1.0, 1.0, np.sqrt(2.0))
    assert abs(val - 1.0) < 1e-12


def test_absorption_inverse_omega():
    val = eta_tilde_from_absorption(lambda om: 1.0 / om, 0.0, 2.0)
    assert abs(val - 1.0) < 1e-12


def test_absorption_rejects_below_threshold():
    with pytest.raises(ValueError, match="threshold"):
        eta_tilde_from_absorption(lambda om: 1.0, 2.0, 1.5)


def test_from_absorption_eta_is_normalized():
    d = FromAbsorption(lambda om: np.exp(-((om - 2.0) ** 2)), 0.5, 15.0)
    assert abs(eval_eta(d, 0.0) - 1.0) < 1e-10
    s = np.linspace(-30, 30, 301)
    assert np.max(np.abs(d.eta(s))) <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# embeddings

def test_static_embedding():
    e = Embedding.static()
    assert np.allclose(e.point(3.0, (1.0, 2.0, 3.0)), [3.0, 1.0, 2.0, 3.0])
    u = e.four_velocity(5.0)
    assert np.allclose(u, [1, 0, 0, 0])
    assert abs(minkowski_dot(u, u) + 1) < 1e-15


def test_inertial_embedding():
    e = Embedding.inertial([0.6, 0.0, 0.0])
    u = e.four_velocity(0.0)
    assert np.allclose(u, [1.25, 0.75, 0, 0])
    assert abs(minkowski_dot(u, u) + 1) < 1e-12


def test_uniform_acceleration_embedding():
    # rapidity 5 at the window edge; beyond ~9 the cosh^2 - sinh^2
    # cancellation itself exhausts double precision
    e = Embedding.uniformly_accelerated(0.5)
    assert np.allclose(e.four_velocity(0.0), [1, 0, 0, 0])
    for tau in np.linspace(-10, 10, 21):
        u = e.four_velocity(tau)
        assert abs(minkowski_dot(u, u) + 1) < 1e-8
    assert e.proper_acceleration(3.0) == 0.5


def test_four_velocity_normalization_all_kinds():
    taus = np.linspace(-10, 10, 41)
    kinds = [
        Embedding.static(),
        Embedding.inertial([0.2, -0.5, 0.1]),
        Embedding.uniformly_accelerated(0.3),
    ]
    tt = np.linspace(-12, 12, 2001)
    a = 0.3
    coords = np.stack(
        [np.sinh(a * tt) / a, np.cosh(a * tt) / a, 0 * tt, 0 * tt], axis=1
    )
    kinds.append(Embedding.tabulated(tt, coords))
    for e in kinds:
        for tau in taus:
            u = e.four_velocity(tau)
            assert abs(minkowski_dot(u, u) + 1) < 1e-8, e.kind


def test_tabulated_range_errors():
    tt = np.linspace(0, 1, 101)
    coords = np.stack([tt, 0 * tt, 0 * tt, 0 * tt], axis=1)
    e = Embedding.tabulated(tt, coords)
    with pytest.raises(ValueError, match="outside tabulated range"):
        e.point(1.5)
    with pytest.raises(ValueError, match="outside tabulated range"):
        e.four_velocity(-0.1)


def test_tabulated_rejects_bad_normalization():
    tt = np.linspace(0, 1, 50)
    coords = np.stack([2 * tt, 0 * tt, 0 * tt, 0 * tt], axis=1)  # u.u = -4
    with pytest.raises(ValueError, match="proper time"):
        Embedding.tabulated(tt, coords)


def test_inertial_rejects_superluminal():
    with pytest.raises(ValueError):
        Embedding.inertial([1.2, 0, 0])


# ---------------------------------------------------------------------------
# detector configuration

def test_effective_window_formula():
    det = DetectorConfig(Embedding.static(), 2.0, 0.1, GaussianSimple(1e9))
    s = 3.0
    assert abs(det.effective_eta(s) - np.exp(-(s**2) / (8 * 4.0))) < 1e-12
    assert window_gaussian(0.0, 2.0) == 1.0


def test_scale_hierarchy_advisory():
    with pytest.warns(CoarseGrainingWarning):
        DetectorConfig(Embedding.static(), 0.5, 0.1, GaussianSimple(1.0))


def test_acceleration_validity_warning():
    det = DetectorConfig(Embedding.uniformly_accelerated(1.0), 0.5, 0.01,
                         GaussianSimple(0.2))
    with pytest.warns(AccelerationWarning):
        det.check_acceleration([0.0, 1.0])
    quiet = DetectorConfig(Embedding.uniformly_accelerated(0.01), 0.5, 0.01,
                           GaussianSimple(0.2))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error", AccelerationWarning)
        quiet.check_acceleration([0.0, 1.0])


def test_degradation_csv_round_trip(tmp_path):
    s = np.linspace(-5, 5, 501)
    vals = np.exp(-(s**2) / 2)
    path = tmp_path / "eta.csv"
    with open(path, "w") as fh:
        fh.write("s,re,im\n")
        for a, b in zip(s, vals):
            fh.write(f"{a},{b},0.0\n")
    d = degradation_from_csv(path)
    assert abs(complex(d.eta(1.0)) - np.exp(-0.5)) < 1e-6
