"""Numerics for Adams-type inequalities with an Adimurthi-Druet factor on radial Sobolev spaces."""

from .constants import DimPair, adams_constant, ball_volume, min_index, sphere_area
from .functional import (
    ADParams,
    ELState,
    Evaluation,
    SaturationWarning,
    Tolerances,
    ad_evaluate,
    ad_functional,
    ad_gradient,
    constraint_value,
    el_multipliers,
    el_residual,
    phi,
    rho,
    zeta,
)
from .families import (
    BlowupParams,
    MoserParams,
    TestFunction,
    blowup_testfn,
    bubble,
    bubble_mass,
    bubble_profile,
    dilate_mass,
    moser_energy_ratio,
    moser_function,
    scale_family,
    truncate_biharmonic,
)
from .green import (
    GreenProfile,
    annulus_energy,
    ball_green_regular,
    concentration_ceiling,
    fundamental_decay_check,
    solve_green,
)
from .maximize import (
    MaxResult,
    SubcriticalMaximizer,
    classify,
    maximize_subcritical,
    moser_sharpness_probe,
    sweep_beta,
)
from .radial import (
    RadialFunction,
    RadialGrid,
    energy_parts,
    grad_m_norm,
    integrate,
    laplacian,
    lp_norm,
    make_grid,
    poly_laplacian,
    tail_mass,
)
from .validation import (
    ADXError,
    ConstraintError,
    ContractError,
    DataError,
    DomainError,
    ParameterError,
)
from .vanishing import (
    GNMaximizer,
    adachi_ratio,
    dtF_at_one,
    eta,
    gn_maximize,
    gn_ratio,
    h_curve,
    increase_threshold,
    random_sphere_profiles,
    vanish_level,
)

__version__ = "0.1.0"

__all__ = [
    "DimPair",
    "adams_constant",
    "ball_volume",
    "min_index",
    "sphere_area",
    "ad_evaluate",
    "ad_functional",
    "ad_gradient",
    "adachi_ratio",
    "ADParams",
    "ADXError",
    "annulus_energy",
    "ball_green_regular",
    "blowup_testfn",
    "BlowupParams",
    "bubble",
    "bubble_mass",
    "bubble_profile",
    "classify",
    "concentration_ceiling",
    "constraint_value",
    "ConstraintError",
    "ContractError",
    "DataError",
    "dilate_mass",
    "DomainError",
    "dtF_at_one",
    "el_multipliers",
    "el_residual",
    "ELState",
    "energy_parts",
    "eta",
    "Evaluation",
    "fundamental_decay_check",
    "gn_maximize",
    "gn_ratio",
    "GNMaximizer",
    "grad_m_norm",
    "GreenProfile",
    "h_curve",
    "increase_threshold",
    "integrate",
    "laplacian",
    "lp_norm",
    "make_grid",
    "maximize_subcritical",
    "MaxResult",
    "moser_energy_ratio",
    "moser_function",
    "moser_sharpness_probe",
    "MoserParams",
    "ParameterError",
    "phi",
    "poly_laplacian",
    "RadialFunction",
    "RadialGrid",
    "random_sphere_profiles",
    "rho",
    "SaturationWarning",
    "scale_family",
    "solve_green",
    "SubcriticalMaximizer",
    "sweep_beta",
    "tail_mass",
    "TestFunction",
    "Tolerances",
    "truncate_biharmonic",
    "vanish_level",
    "zeta",
]

