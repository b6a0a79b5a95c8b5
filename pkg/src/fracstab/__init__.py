"""Stability analysis and feedback stabilization for fractional-order systems.

Core workflow: build a system (``toda_lattice``, ``toda2_controlled``, or
``make_system``), find or pick an equilibrium, run ``analyze`` for the
argument-based stability verdict, close a feedback loop with
``make_controlled``, and confirm with ``verify_convergence`` or explore
gain space with ``gain_sweep``.  ``integrate`` provides the underlying
fractional time stepper.
"""

from .control import (
    ControlledSystem,
    ConvergenceCheck,
    GainGrid,
    SweepPoint,
    gain_sweep,
    make_controlled,
    toda2_prop41_classify,
    verify_convergence,
)
from .integrator import (
    ConvergenceReport,
    IntegrationConfig,
    Trajectory,
    convergence_probe,
    integrate,
    mittag_leffler,
)
from .stability import (
    StabilityReport,
    Verdict,
    analyze,
    critical_order,
    eigenvalues,
    find_equilibria,
    jacobian,
    matignon_classify,
    sign_shortcut,
)
from .systems import (
    ControlGains,
    EquilibriumState,
    FractionalOrder,
    FractionalSystem,
    as_order,
    lipschitz_bound,
    make_system,
    toda2_controlled,
    toda2_matrix_form,
    toda_lattice,
)

__version__ = "0.1.0"

__all__ = [
    "ControlGains",
    "ControlledSystem",
    "ConvergenceCheck",
    "ConvergenceReport",
    "EquilibriumState",
    "FractionalOrder",
    "FractionalSystem",
    "GainGrid",
    "IntegrationConfig",
    "StabilityReport",
    "SweepPoint",
    "Trajectory",
    "Verdict",
    "analyze",
    "as_order",
    "convergence_probe",
    "critical_order",
    "eigenvalues",
    "find_equilibria",
    "gain_sweep",
    "integrate",
    "jacobian",
    "lipschitz_bound",
    "make_controlled",
    "make_system",
    "matignon_classify",
    "mittag_leffler",
    "sign_shortcut",
    "toda2_controlled",
    "toda2_matrix_form",
    "toda2_prop41_classify",
    "toda_lattice",
    "verify_convergence",
]
