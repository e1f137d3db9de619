"""Generalized Laguerre semigroups: exponents, spectral calculus, intertwining, local times, simulation."""

from .bernstein import (
    Atom,
    ExpDensity,
    LevyQuadruplet,
    PsiModel,
    build_model,
    classical_model,
    classify,
    derived_exponent,
    find_theta,
    load_model,
    log_wphi,
    model_from_dict,
    model_to_dict,
    psi_eval,
    wphi,
    wphi_residual,
)
from .distributions import density_integral, density_m, gauss_rule_iphi, mellin_V, moments
from .errors import (
    ClockOverrun,
    ConvergenceFailure,
    DomainError,
    IdentityViolation,
    IllConditioned,
    NegativeNormResidual,
    NoRootInUnitInterval,
    SlowDecay,
)
from .intertwining import adjoint_pairing, lambda_fn, lambda_multiplier, lambda_of_laguerre, lambda_poly, verify_intertwining
from .localtime_krein import (
    excursion_survival,
    krein_atoms,
    krein_reconstruction,
    last_exit_laplace,
    lk_parts,
    phi_subordinator,
    pick_bernstein_check,
    revuz_constants,
    subordinator_exponent,
)
from .models import model_c, model_j, resolve_model
from .polys import Poly, ThetaShiftedPoly, get_precision, set_precision
from .spectral import (
    apply_semigroup,
    bessel_partial,
    c_n,
    convergence_check,
    eigenpoly,
    inner_m,
    laguerre,
    norm_m,
    pairing,
    spectral_model,
    stationary_mean,
    to_eigenbasis,
)

__version__ = "0.1.0"
