"""Distortion-energy functionals for planar mappings.

Computes, minimizes, and verifies weighted distortion energies
int Psi(K(z,f)) lambda(z) dz over mappings of the disk and half-plane:
Wirtinger/Beltrami/distortion fields, Ahlfors-Hopf differentials with
holomorphy diagnostics, Reich-Strebel inequality verifiers, an
inner-variation minimizer, and an exact ODE-generated family of extremal
half-plane diffeomorphisms used as analytic oracles.
"""

from .energy import cov_gap, energy_direct, energy_inverse
from .fields import (BeltramiField, DistortionField, MappingField, WirtingerField,
                     beltrami, compose_distortion, distortion,
                     distortion_from_beltrami, finite_distortion_report,
                     wirtinger_derivatives)
from .grids import DomainGrid, build_grid, disk_grid, half_plane_grid, rectangle_grid
from .hopf import (QuadraticDifferentialField, dbar_residual, hopf_differential,
                   l1_mass, mobius_invariance_gap)
from .cayley import (CayleyMap, cayley, cayley_derivative, cayley_inv, conjugate_map,
                     pullback_weight, transport_differential)
from .minimizer import (MinimizeOptions, inner_derivative, inner_variation_energy,
                        minimize, stationarity_vs_holomorphy)
from .ode import (F_eval, F_inverse, M_limit, OdeProfile, ah_residual,
                  build_half_plane_map, harmonic_closed_form, linear_alpha_profile,
                  power2_exponent, solve_profile, surjectivity_diagnosis)
from .profiles import (ConvexProfile, exp_profile, growth_diagnostic, linear_profile,
                       parse_profile, power_profile)
from .reich_strebel import (InequalityReport, alignment_residual, energy_gap,
                            pointwise_teich, rs_lower_bounds, rs_sides,
                            uniqueness_verdict)
from .weights import (WeightField, cayley_weight, custom_weight,
                      hyperbolic_disk_weight, hyperbolic_half_plane_weight,
                      parse_weight, unit_weight)

__version__ = "0.1.0"
