"""Isometric states of labeled graphs and their finite spectral gauge models."""

__version__ = "0.1.0"

from .graph import (GluingMatrix, LabeledGraph, charges_from_gluings, cycle_basis, dipole_charges,
                    toral_sum_charge, validate_graph)
from .compat import (ChargeSplitting, IsometricState, balance_check, compat_residual, compose_states,
                     decompose_state, graph_laplacian, h_form, is_geometrizable, solve_dipole,
                     solve_monopole, solve_state)
from .spectral import (AlgebraElement, DsFunction, Form, build_triple, connes_distance, form_d,
                       form_dstar, form_inner, form_mul, spectral_differential)
from .gauge import (Connection, GaugeConfiguration, GaugeElement, HermitianStructure, Section,
                    bianchi_residual, conjugate_section, covariant_diff, curvature_min_locus,
                    curvature_op, gauge_transform, hermitian_compat_residual)
from .action import (action_S, current, el_residual, energy, gen_laplacian, variation_check,
                     yang_mills)
from .solutions import (coupling_K, delta_of_rho, geometric_to_spectral, massgap_classify,
                        massgap_scan, rho_of_delta, solve_massive_dipole, solve_massless_dipole,
                        solve_monopole_spectral, verify_critical)
