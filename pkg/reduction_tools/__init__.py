from .critical_finder import CriticalPointRecord, CriticalSummary, find_critical_rhos, find_rho0, locate_critical_points
from .boundary_profile import BoundaryClassification, BoundaryKind, ProfileSpec, classify_boundary
from .inequality_auditor import InequalityCheck, VerificationReport, audit_dimension, audit_range
from .pde_validator import Branch, SolveResult, continue_in_epsilon, homotopy_solve, newton_solve, resolving_grid
from .reduced_energy import FiberedPoint, ReducedConfig, ReducedPoint
from .settings import ToolkitSettings, load_settings

__all__ = ['CriticalPointRecord', 'CriticalSummary', 'find_critical_rhos', 'find_rho0', 'locate_critical_points',
           'BoundaryClassification', 'BoundaryKind', 'ProfileSpec', 'classify_boundary',
           'InequalityCheck', 'VerificationReport', 'audit_dimension', 'audit_range',
           'Branch', 'SolveResult', 'continue_in_epsilon', 'homotopy_solve', 'newton_solve', 'resolving_grid',
           'FiberedPoint', 'ReducedConfig', 'ReducedPoint',
           'ToolkitSettings', 'load_settings']
