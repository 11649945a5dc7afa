"""Multi-species space-homogeneous Boltzmann mixtures: collisions, Povzner constants,
moment bounds and a stochastic particle solver."""

__version__ = "0.1.0"

from .mixture import AngularKernel, CrossSection, SpeciesSet, bracket, mass_fraction, validate
from .collision import (
    CollisionInput,
    CollisionOutput,
    EnergyIdentityTerms,
    center_and_relative,
    collide,
    conservation_residuals,
    energy_identity,
    sample_sigma,
)
from .povzner import (
    KStarSummary,
    PovznerConstants,
    angular_average_mc,
    find_kstar_pair,
    kstar_global,
    povzner_linf,
    povzner_renormalized,
    povzner_scan,
)
from .moments import (
    MomentRecord,
    ParticleEnsemble,
    entropy,
    exp_moment,
    interpolation_check,
    jensen_lower_bound,
    poly_inequality_I,
    poly_inequality_II,
    poly_moment,
)
from .bounds import (
    ODIConstants,
    OmegaConstants,
    bernoulli_solution,
    check_omega,
    compute_ak_bk,
    compute_clb,
    generation_envelope,
    lower_bound_check,
    omega_cap_constant,
    propagation_envelope,
)
from .dsmc import Maxwellian, SimConfig, SimState, SphericalShell, TwoTemperature, init, replicate, run, step

__all__ = [name for name in dir() if not name.startswith("_")]
