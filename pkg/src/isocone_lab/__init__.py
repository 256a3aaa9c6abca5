"""Causal orders induced by isocones on discretized almost-commutative spaces."""

__version__ = "0.1.0"

from .hermitian import HermitianMatrix, IsotoneFunction, PureStateVector, apply_isotone, pure_state_eval, spec_bounds
from .order_core import FiniteOrder, MetricPointCloud, Relation, epsilon_cutoff, levin_utility, validate_order
from .qubit_geometry import CapRegion, bloch_map, qubit_order
from .isocone_fd import LexIsocone, LocalIsocone, induced_order, lex_membership, sample_elements
from .lorentz import LorentzPatch, lambda_order
from .multicomponent import LambdaSystem, enumerate_valid_tables, validate_rules
from .carrier import LocalIsoconeMap, build_selection, check_lhc

__all__ = [
    "CapRegion", "FiniteOrder", "HermitianMatrix", "IsotoneFunction", "LambdaSystem", "LexIsocone",
    "LocalIsocone", "LocalIsoconeMap", "LorentzPatch", "MetricPointCloud", "PureStateVector", "Relation",
    "apply_isotone", "bloch_map", "build_selection", "check_lhc", "enumerate_valid_tables", "epsilon_cutoff",
    "induced_order", "lambda_order", "levin_utility", "lex_membership", "pure_state_eval", "qubit_order",
    "sample_elements", "spec_bounds", "validate_order", "validate_rules",
]
