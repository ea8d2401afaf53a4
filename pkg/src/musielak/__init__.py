"""Numerical toolkit for Musielak-Orlicz spaces: Phi-functions, modulars and
Luxemburg norms on box grids, Young conjugates, structural-condition
checkers and a Poincare-inequality harness."""

from .conditions import (ConditionReport, check_local_integrability, check_log_holder, check_M1,
                         check_Y, log_holder_varphi, reproduce, sample_pairs)
from .conjugate import (ConjugatePhi, ConjugateResult, biconjugate_audit, conjugate,
                        conjugate_values, holder_check, young_check)
from .domain import (Box, Domain, GridFunction, MultiIndex, derivative, diameter, make_bump,
                     mollify, multi_indices, sine_mode)
from .errors import (ConfigError, ConvergenceError, DomainError, DomainMismatchError,
                     GeometryError, MusielakError, PhiRangeError, UnsupportedOrderError)
from .modular_norms import NormResult, luxemburg_norm, modular, modular_gap, sobolev_norm
from .phi_functions import (ExponentField, Family, PhiFunction, ScalarField, ValidationReport,
                            evaluate, validate_phi)
from .poincare import (PoincareReport, SweepReport, counterexample_search, default_scalings,
                       default_test_functions, norm_constant, poincare_constant, sweep,
                       verify_modular_poincare, verify_norm_poincare)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
