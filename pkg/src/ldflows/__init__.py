"""Stochastic jump processes, their gradient-flow limits and the associated action functionals."""
from __future__ import annotations

__version__ = "0.1.0"

from .curves import BVCurve, Jump, SampledCurve
from .dissipation import (DissipationFamily, check_conditions, cosh_family, hamiltonian, lagrangian, legendre,
                          quadratic_family, rate_independent_family, vanishing_viscosity_family)
from .energy import EnergyLandscape, WigglyLandscape, make_builtin, make_wiggly, validate
from .errors import (INF, ConfigError, ConvergenceFailure, DegeneratePlateauError, DomainExitError, FloatRangeError,
                     LDFlowsError,
                     LowStatisticsError, RunawayJumpError, UnstableStartError, WidenBoundError)
from .flows import solve_dissipative_flow, solve_generalized_flow, solve_quadratic_flow, solve_rate_independent
from .functionals import (ActionReport, action_J_alpha_beta, action_J_beta, action_J_Q, action_J_RI,
                          energy_identity_residual, jump_cost_delta, variation)
from .stochastic import (JumpPath, SamplePath, SimulationSpec, estimate_escape_rates, langevin_escape_ensemble,
                         run_ensemble, simulate_jump_ensemble, simulate_jump_process, simulate_langevin_wiggly,
                         simulate_sde, simulate_sde_ensemble)
from .convergence import (ConvergenceTable, ParametrizedCurve, bridge_experiment, build_recovery_sequence,
                          lagrangian_integral, ldp_tube_experiment, lln_experiment, mosco_quadratic_experiment,
                          mosco_ri_experiment, reparametrize, shifted_reference)
