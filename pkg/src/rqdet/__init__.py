"""Numerical models of relativistic quantum detectors: arrival-time
densities for scalar particles, coherent-state photodetection, spin outcome
probabilities, and two-detector coincidences."""

from ._backend import active_backend
from .grids import (
    ComplexKernelMatrix,
    MomentumGrid,
    QuadratureWindowWarning,
    amplitude_transform,
    build_grid,
    double_sum,
    fourier_transform_1d,
)
from .detector import (
    AccelerationWarning,
    CoarseGrainingWarning,
    DegradationFunction,
    DetectorConfig,
    Diffusion,
    Embedding,
    FromAbsorption,
    GaussianEnergy,
    GaussianSimple,
    RqdetWarning,
    TabulatedEta,
    degradation_from_csv,
    embedding_point,
    eta_tilde,
    eta_tilde_from_absorption,
    eta_tilde_many,
    eval_eta,
    four_velocity,
)
from .scalar import (
    DensityCurve,
    NegativityWarning,
    OneParticleState,
    ReducedDensityMatrix,
    arrival_moments,
    ideal_toa_curve,
    ideal_toa_density,
    integrated_position_density,
    kijowski_curve,
    kijowski_reference,
    moving_toa_curve,
    moving_toa_density,
    normalize_curve,
    quadratic_toa_curve,
    quadratic_toa_density,
    scattering_kernel_table,
    state_from_csv,
    toa_curve,
    toa_density,
    wightman_timelike,
    wightman_timelike_many,
)
from .photon import (
    CoherentPulse,
    CollimatedCoherentProfile,
    counter_rotating_suppression,
    gaussian_pulse_p1_closed,
    gaussian_pulse_p2_closed,
    glauber_curve,
    glauber_density,
    photo_background,
    photo_p1_curve,
    photo_p2_curve,
    photo_terms_collimated,
)
from .spin import (
    BETA,
    DiracSpinorBasis,
    SpinPOVMKernel,
    SpinorReducedDensityMatrix,
    dirac_u,
    gamma_matrices,
    sigma_projected,
    spin_outcome_probability,
    spin_summed_ideal_curve,
    spin_toa_curve,
    spin_toa_density,
    ubar,
)
from .coincidence import (
    TwoParticleState,
    joint_scan,
    joint_toa_density,
    psi2_from_csv,
    two_particle_amplitude,
)

__version__ = "0.1.0"
