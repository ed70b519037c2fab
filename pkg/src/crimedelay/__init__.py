"""Delayed criminal/non-criminal population model: simulation, equilibria,
delay-dependent stability and periodic orbits."""

__version__ = "0.1.0"

from .errors import (BlowUpError, ConfigError, ConvergenceError, CrimeDelayError, DegenerateCertificateError,
                     DomainError, InconsistencyError, NotEquilibriumError, NumericalFault, PositivityError)
from .model import (GrowthFunction, HistoryFunction, LawEnforcement, ModelParams, StateVec, exposed_population,
                    holling, rhs, vector_field)
from .integrator import IntegratorConfig, Trajectory, convergence_order, integrate, solve_dde
from .equilibria import Admissibility, EquilibriumSet, coexistence, criminal_free_level, equilibria
from .stability import (CharacteristicAnalysis, CharacteristicCoefficients, CrossingList, Regime, RootClass,
                        RootLabel, StabilityVerdict, analyze, characteristic_coeffs, classify_F, count_unstable,
                        crossings, linearize, root_scan, verdict)
from .periodic import (ConditionLedger, PeriodicOrbitResult, average_identity_check, degree_certificate,
                       find_periodic, ledger, phi_map)
from .report import StrategyReport, strategy_report

__all__ = [name for name in dir() if not name.startswith("_")]
