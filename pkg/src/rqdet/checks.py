"""Bundled analytic-limit checks: fast numerical verifications of the
closed forms and limits the detector model must reproduce.  Run through
`rqdet run --check`; each check reports a measured value against its
tolerance."""

import numpy as np

from . import (
    CollimatedCoherentProfile,
    DetectorConfig,
    DiracSpinorBasis,
    Embedding,
    GaussianEnergy,
    GaussianSimple,
    Diffusion,
    OneParticleState,
    ReducedDensityMatrix,
    SpinPOVMKernel,
    SpinorReducedDensityMatrix,
    TwoParticleState,
    build_grid,
    counter_rotating_suppression,
    eval_eta,
    gaussian_pulse_p1_closed,
    glauber_curve,
    ideal_toa_curve,
    joint_toa_density,
    kijowski_curve,
    moving_toa_curve,
    normalize_curve,
    photo_p1_curve,
    photo_p2_curve,
    quadratic_toa_curve,
    scattering_kernel_table,
    spin_outcome_probability,
    spin_summed_ideal_curve,
    spin_toa_curve,
    toa_curve,
    ubar,
)


def _result(name, measured, tolerance, passed, detail=""):
    return {
        "name": name,
        "passed": bool(passed),
        "measured": float(measured),
        "tolerance": float(tolerance),
        "detail": detail,
    }


def check_energy_degradation():
    d = GaussianEnergy(energy=0.7, heat_capacity=2.3, temperature=1.4)
    s = 1.0 / (np.sqrt(d.heat_capacity) * d.temperature)
    err = abs(abs(eval_eta(d, s)) - np.exp(-0.5))
    return _result("degradation-energy-gaussian", err, 1e-12, err < 1e-12,
                   "|eta| at the decay time vs exp(-1/2)")


def check_diffusion_degradation():
    d = Diffusion(diffusion_coefficient=0.8, record_size=0.5)
    s = d.record_size**2 / d.diffusion_coefficient
    err = abs(abs(eval_eta(d, s)) ** 2 - 2.0 ** (-1.5))
    return _result("degradation-diffusion", err, 1e-12, err < 1e-12,
                   "|eta|^2 at the diffusion time vs 2^(-3/2)")


def check_ideal_toa():
    grid = build_grid(5.0 - 6 * 0.2, 5.0 + 6 * 0.2, 256, "gauss-legendre", 1.0)
    psi = OneParticleState.gaussian(grid, 5.0, 0.2)
    q = 100.0
    tau_star = q * np.sqrt(26.0) / 5.0
    taus = np.linspace(tau_star - 12.0, tau_star + 12.0, 601)
    curve = normalize_curve(ideal_toa_curve(psi, 1.0, taus, q))
    from scipy.integrate import simpson

    area = float(simpson(curve.values, x=curve.tau))
    peak = curve.tau[int(np.argmax(curve.values))]
    dtau = taus[1] - taus[0]
    ok = (
        abs(area - 1.0) < 1e-6
        and np.min(curve.values) >= 0.0
        and abs(peak - tau_star) <= dtau
    )
    return _result("ideal-toa-normalization", abs(area - 1.0), 1e-6, ok,
                   f"area, positivity, peak at {peak:.4f} vs {tau_star:.4f}")


def check_kijowski_limit():
    k0, spread, mass, q = 0.01, 0.002, 1.0, 100.0
    grid = build_grid(k0 - 4.5 * spread, k0 + 4.5 * spread, 512,
                      "gauss-legendre", mass)
    psi = OneParticleState.gaussian(grid, k0, spread)
    tau_star = q * mass / k0
    width = q * mass / k0**2 * spread
    taus = np.linspace(tau_star - 6 * width, tau_star + 6 * width, 1501)
    a = normalize_curve(ideal_toa_curve(psi, mass, taus, q))
    b = normalize_curve(kijowski_curve(psi, mass, taus, q))
    l1 = float(np.trapezoid(np.abs(a.values - b.values), taus))
    return _result("kijowski-limit", l1, 1e-2, l1 < 1e-2,
                   "L1 distance, nonrelativistic packet")


def check_static_reduction():
    grid = build_grid(3.0, 7.0, 96, "trapezoid", 1.0)
    rng = np.random.default_rng(7)
    a = rng.normal(size=(96, 96)) + 1j * rng.normal(size=(96, 96))
    rho = ReducedDensityMatrix.from_kernel(grid, a @ a.conj().T)
    det = DetectorConfig(Embedding.static(), 1.0, 0.05, GaussianSimple(0.5))
    taus = np.linspace(90.0, 110.0, 64)
    worst = 0.0
    for q in np.linspace(95.0, 102.0, 8):
        s = toa_curve(rho, det, taus, q).values
        mv = moving_toa_curve(rho, det, taus, (q, 0.0, 0.0)).values
        scale = np.max(np.abs(s))
        worst = max(worst, float(np.max(np.abs(s - mv)) / scale))
    return _result("static-reduction", worst, 1e-10, worst < 1e-10,
                   "moving path with static embedding vs static path")


def check_quadratic_matched():
    grid = build_grid(4.0, 6.0, 128, "gauss-legendre", 1.0)
    psi = OneParticleState.gaussian(grid, 5.0, 0.15)
    det = DetectorConfig(Embedding.static(), 0.4, 0.02, GaussianSimple(0.3))
    q = 50.0
    tau_star = q * np.sqrt(26.0) / 5.0
    taus = np.linspace(tau_star - 12.0, tau_star + 12.0, 401)
    quad = normalize_curve(quadratic_toa_curve(psi, det, taus, q))
    table = scattering_kernel_table(det, grid)
    rho = ReducedDensityMatrix.from_pure(psi)
    lin = normalize_curve(toa_curve(rho, det, taus, q, kernel_override=table))
    l1 = float(np.trapezoid(np.abs(quad.values - lin.values), taus))
    return _result("quadratic-matched-kernel", l1, 1e-6, l1 < 1e-6,
                   "quadratic vs linear density with the scattering kernel")


def check_photo_saddle():
    k0, delta = 10.0, 0.5
    grid = build_grid(k0 - 6 * delta, k0 + 6 * delta, 256, "gauss-legendre", 0.0)
    z = CollimatedCoherentProfile.gaussian(grid, 1.0, k0, delta)
    det = DetectorConfig(Embedding.static(), 0.05, 0.004, GaussianSimple(0.03))
    from .photon import CoherentPulse
    from .detector import eta_tilde

    pulse = CoherentPulse(np.array([0, 1.0, 0]), np.array([k0, 0, 0]), delta)
    eta0 = eta_tilde(det.degradation, det.sigma, k0)
    taus = np.array([0.0])
    qs = np.linspace(-3.0 / delta, 3.0 / delta, 121)
    numeric = np.array(
        [photo_p1_curve(z, det, taus, q).values[0] for q in qs]
    )
    closed = np.array(
        [gaussian_pulse_p1_closed(pulse, eta0, 0.0, (q, 0.0, 0.0)) for q in qs]
    )
    numeric = numeric / numeric.max()
    closed = closed / closed.max()
    linf = float(np.max(np.abs(numeric - closed)))
    return _result("photo-saddle-point", linf, 0.05, linf < 0.05,
                   "peak-normalized co-rotating term vs closed form")


def check_counter_rotating():
    k0, delta = 4.0, 0.5
    grid = build_grid(k0 - 5 * delta, k0 + 5 * delta, 192, "gauss-legendre", 0.0)
    z = CollimatedCoherentProfile.gaussian(grid, 1.0, k0, delta)
    taus = np.linspace(-2.0, 2.0, 101)
    ratios = []
    for sk in (1.0, 2.0, 4.0):
        sigma = sk / k0
        det = DetectorConfig(Embedding.static(), sigma, sigma / 25.0,
                             GaussianSimple(0.5 / k0))
        p1 = photo_p1_curve(z, det, taus, 0.0).values
        p2 = photo_p2_curve(z, det, taus, 0.0, smeared=True).values
        ratios.append(float(np.max(np.abs(p2)) / np.max(p1)))
    envelope = 10.0 * counter_rotating_suppression(4.0 / k0, 0.0, k0)
    ok = ratios[0] > ratios[1] > ratios[2] and ratios[2] < envelope
    return _result("counter-rotating-suppression", ratios[2], envelope, ok,
                   f"ladder {ratios}")


def check_glauber_limit():
    delta = 1.0
    k0 = 2.0 * delta
    grid = build_grid(1e-3, k0 + 7 * delta, 512, "gauss-legendre", 0.0)
    z = CollimatedCoherentProfile.gaussian(grid, 1.0, k0, delta)
    sigma = 1.0 / (40.0 * delta)
    det = DetectorConfig(Embedding.static(), sigma, sigma / 20.0,
                         GaussianSimple(1e4))
    taus = np.linspace(-3.0 / delta, 3.0 / delta, 161)
    p1 = photo_p1_curve(z, det, taus, 0.0).values / (np.sqrt(8 * np.pi) * sigma)
    g = glauber_curve(z, taus, 0.0).values
    linf = float(np.max(np.abs(p1 - g)) / np.max(g))
    ok = linf < 0.02 and np.min(g) >= 0.0
    return _result("glauber-limit", linf, 0.02, ok,
                   "rescaled incoherent co-rotating term vs Glauber density")


def check_spin_identities():
    basis = DiracSpinorBasis(1.3)
    rng = np.random.default_rng(3)
    ks = rng.normal(scale=2.0, size=(200, 3))
    worst = 0.0
    for k in ks:
        om = np.sqrt(k @ k + basis.mass**2)
        for r in (1, 2):
            u = basis.u(k, r)
            worst = max(worst, abs(ubar(u) @ u - 2 * basis.mass))
            worst = max(worst, abs(np.conj(u) @ u - 2 * om))
    grid = build_grid(0.01, 0.4, 48, "gauss-legendre", 1.3)
    phi = np.exp(-((grid.nodes - 0.1) ** 2) / (2 * 0.05**2))
    rho = SpinorReducedDensityMatrix.from_pure(
        grid, np.stack([phi, 0.3 * phi], axis=1)
    )
    probs = spin_outcome_probability(rho, SpinPOVMKernel.zero(), 5.0)
    ok = (
        worst < 1e-10
        and probs[1] == 0.5
        and probs[-1] == 0.5
        and probs[1] + probs[-1] == 1.0
    )
    det = DetectorConfig(Embedding.static(), 1.0, 0.05, GaussianSimple(0.5))
    taus = np.linspace(0.0, 30.0, 16)
    up = spin_toa_curve(rho, SpinPOVMKernel.zero(), det, taus, 5.0, 1).values
    dn = spin_toa_curve(rho, SpinPOVMKernel.zero(), det, taus, 5.0, -1).values
    tot = spin_summed_ideal_curve(rho, det, taus, 5.0).values
    comp = float(np.max(np.abs(up + dn - tot)) / np.max(np.abs(tot)))
    ok = ok and comp < 1e-10
    return _result("spin-identities", max(worst, comp), 1e-10, ok,
                   "normalizations, zero-kernel probabilities, mu-sum")


def check_coincidence_exchange():
    grid = build_grid(3.0, 7.0, 48, "gauss-legendre", 1.0)
    a = OneParticleState.gaussian(grid, 4.5, 0.3, x0=0.0)
    b = OneParticleState.gaussian(grid, 5.5, 0.3, x0=0.0)
    state = TwoParticleState.symmetrized_product(a, b)
    det = DetectorConfig(Embedding.static(), 0.5, 0.02, GaussianSimple(0.25))
    v1 = joint_toa_density(state, det, det, 10.0, 40.0, 12.0, 55.0, n_s=32)
    v2 = joint_toa_density(state, det, det, 12.0, 55.0, 10.0, 40.0, n_s=32)
    err = abs(v1 - v2)
    return _result("coincidence-exchange", err, 0.0, v1 == v2,
                   "detector swap invariance, identical configurations")


ALL_CHECKS = [
    check_energy_degradation,
    check_diffusion_degradation,
    check_ideal_toa,
    check_kijowski_limit,
    check_static_reduction,
    check_quadratic_matched,
    check_photo_saddle,
    check_counter_rotating,
    check_glauber_limit,
    check_spin_identities,
    check_coincidence_exchange,
]


def run_checks():
    results = [fn() for fn in ALL_CHECKS]
    return {"passed": all(r["passed"] for r in results), "checks": results}
