"""Numerical laboratory for global transverse Poincaré sections of
Hamiltonian flows: exterior calculus on flat charts, flow integration,
first-return maps, cosymplectic structures and their correspondence with
transverse symplectic fields, period rationalization, and topological
non-existence obstructions."""

from .forms import (ChartManifold, ChartMap, KForm, Point, TangentVector,
                    constant_form, coordinate_form, evaluate, evaluate_at,
                    exterior_derivative, function_form, interior, power,
                    pullback, wedge, zero_form)
from .phase import (EnergySurface, FlowSystem, HamiltonianSystem, SingularOmegaError,
                    divergence_check, energy_drift, flow, flow_implicit_midpoint,
                    hamiltonian_vector_field)
from .section import (GlobalityReport, MappingTorusChart, NoCrossingError,
                      ReturnRecord, SectionSpec, TangencyError, coordinate_section,
                      first_return, mapping_torus_chart, return_map_jacobian,
                      verify_global, write_crossings_csv)
from .cosym import (CollarModel, CosymplecticStructure, PathDependenceError,
                    TransversalityError, TransverseFieldReport, build_collar_form,
                    build_product_system, cosym_to_field, extend_to_hamiltonian_field,
                    field_to_cosym, symplectic_submanifold_test, verify_cosymplectic)
from .tischler import (PeriodVector, RationalApproximation, RationalizationError,
                       build_approximation, check_transversality_preserved,
                       extract_leaf, periods, rationalize)
from .obstruct import (BettiProfile, BettiResult, MeshedSurface, PrimitiveError,
                       Verdict, betti_necessary_condition, exactness_verdict,
                       simply_connected_verdict, stokes_exactness_check,
                       surface_integral)

__version__ = "0.1.0"
