"""Measurement-induced cooling of a qubit in a structured finite-temperature bath."""

__version__ = "0.1.0"

from .analysis import (CoolingDomain, CoolingReport, classify_zeno, cooling_criterion,  # noqa: E402
                       cooling_domain, cr_zero_curve, m_factor_approx, m_factor_exact,
                       m_factor_smoothed, optimize_tau, w2_estimate)
from .dynamics import (Protocol, QubitState, Trajectory, adiabatic_population,  # noqa: E402
                       apply_measurement, bloch_rhs, effective_temperature, evolve_free,
                       evolve_measured, markovian_population, measured_envelope)
from .errors import ConvergenceWarning, DomainError  # noqa: E402
from .kernels import (CumulativeJ, RateSet, cumulative_j, filter_function,  # noqa: E402
                      golden_rule_rate, transition_rates)
from .quadrature import QuadratureSpec, oscillatory_integral  # noqa: E402
from .spectrum import (BathParams, ModifiedLorentzian, SuperOhmic, Tabulated,  # noqa: E402
                       sdf_derivatives, sdf_value, tail_integral, thermal_occupation,
                       thermal_sdf)
