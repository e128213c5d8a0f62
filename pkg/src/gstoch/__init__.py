"""Numerical laboratory for stochastic dynamics under volatility uncertainty.

Submodules: grids (time grids, paths, segments), gheat (nonlinear heat
equation and worst-case distributions), scenarios (volatility policies and
path sampling), functionals (coefficients and costs), nsfde (Euler scheme and
the fixed-point operator), control (strict/relaxed controls and optimizers),
presets and cli.
"""

from .control import (ActionGrid, OptResult, RelaxedControl, StrictControl,
                      chattering_approx, cost, cost_under_p, dirac_embed,
                      optimize_relaxed, optimize_strict, stability_gap,
                      stable_convergence_gap)
from .errors import (ConfigurationError, DivergenceError, EstimationError,
                     GstochError, InputError, StepError)
from .functionals import (CoeffFunctional, CoeffSet, CostSpec, eval_coeff,
                          lipschitz_constants, validate_assumptions)
from .gheat import (GHeatSolution, SpatialGrid, VolBounds, g_normal_cdf_table,
                    g_normal_density, g_normal_upper_cdf, g_of, solve_g_heat,
                    stable_dt)
from .grids import Path, Segment, TimeGrid, integral_functional, segment_eval
from .nsfde import (EulerConfig, NCNormConfig, contraction_ratio, nc_norm,
                    picard_apply, picard_apply_batch, simulate_batch,
                    simulate_nsfde)
from .scenarios import (Constant, GBMPath, PiecewiseConstant, RandomSwitch,
                        ScenarioFamily, VolPolicy, check_bdg, check_isometry,
                        check_qv_identity, default_family, sample_gbm,
                        upper_expectation)

__version__ = "0.1.0"
