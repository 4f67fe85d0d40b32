"""Fractional Allen-Cahn lab: nonlocal operators, extension, solver and diagnostics in 1D and 2D."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .diagnostics import (
    DensityCurve,
    cone_density,
    cone_density_curve,
    clearing_out_probe,
    density_theta_eps,
    density_theta_sharp,
    level_set_convergence,
    level_set_dimension,
    level_set_points,
    potential_decay_fit,
    potential_envelope_exponent,
    theta_ns_closed_form,
    theta_ns_constant,
    transition_volume_scaling,
)
from .extension import ExtensionField, ExtensionGrid, HalfBall, build_extension_grid, extend, weighted_energy
from .fractional import FractionalParams, d_s, energy_E, frac_laplacian, gamma_ns, make_params, sigma_ns
from .geometry import (
    IndicatorSet,
    make_set,
    mean_curvature_H2s,
    perimeter_P2s,
    phase_energy_identity_check,
    prescribed_curvature_residual,
)
from .grid import Box, Disc, FarField, GridSpec, Interval, ScalarField, box_counting_dimension, build_grid
from .potential import DoubleWell, make_prototype_well, verify_structural_assumptions
from .solver import AllenCahnSolver, ProblemSpec, SolveReport, functional_F, minimize, residual_EL

__version__ = "0.1.0"
