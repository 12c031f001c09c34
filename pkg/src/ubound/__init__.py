"""Optimal ultimate bounds for u'' + c u' + A u = f."""
from .scalar import (BoundEstimate, BoundKind, Regime, RegimeData, ScalarParams,
                     classify_regime, companion_matrix, decay_envelope, historical_bounds,
                     kernel_integral, kernel_sign_changes, optimal_position_bound,
                     optimal_velocity_bound, position_kernel, quadrature_bound_oracle,
                     velocity_kernel)
from .signals import (ConstructionError, ExtremalConstruction, ForcingSignal, SignalFormatError,
                      build_construction, constant_signal, extremal_scalar_forcing, periodize,
                      read_signal, threshold, write_signal)
from .simulator import (ModalState, SimulationError, Trajectory, bounded_solution_at,
                        bounded_solution_at_zero, evolve_exact, evolve_rk4, periodic_solution,
                        ultimate_sup_estimator)
from .spectral import (LogRegimeParams, PartitionBlock, SpectrumError, SpectrumModel,
                       dyadic_partition, evaluate_construction, guaranteed_lower_bound,
                       log_regime_bound, mM_bound, nonmonotonicity_witness, ratio_subsequence,
                       read_matrix, read_spectrum, symmetric_eigenvalues, upper_bound_finite_dim,
                       upper_bound_general, weyl_spectrum)
from .equivalence import EquivalenceReport, run_equivalence, translation_invariance

__version__ = "0.1.0"
