"""Power evolution of wideband WDM combs under inter-channel stimulated Raman scattering.

Two solvers are provided: direct integration of the coupled power equations
(:mod:`ramancomb.srs_numerical`) and a perturbative expansion in the launch
power (:mod:`ramancomb.srs_perturbative`) whose truncation order is chosen
automatically for a target accuracy (:mod:`ramancomb.accuracy_control`).
"""

from .accuracy_control import ConvergenceError, OrderSelection, order_bound, relative_error, select_order
from .fiber_models import (
    FiberGeometry,
    FiberSpan,
    LossProfile,
    NoGain,
    RamanGainTable,
    ScaledRamanGain,
    TriangularGain,
    effective_area,
    load_bundled_table,
    load_raman_table,
    loss_coefficient,
    raman_gain,
    walker_ssmf_params,
)
from .spectrum import BAND_PLAN, WdmComb, bands, build_comb, flat_launch, load_launch_profile
from .srs_numerical import NumericalSettings, PowerEvolution, final_profile, integrate
from .srs_perturbative import (
    PerturbativeOrders,
    TruncatedSolution,
    closed_form_flat_triangular,
    compute_orders,
    effective_length,
    gamma_first_order,
    gamma_next_order,
    gamma_second_order_analytic,
    truncated_power_profile,
)

__version__ = "0.1.0"
