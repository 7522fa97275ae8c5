"""Numerical laboratory for improvability of inhomogeneous Dirichlet's theorem.

Subpackages: rate functions (:mod:`.psi`), sup-norm grid geometry
(:mod:`.lattice`), the three Dirichlet checkers (:mod:`.scan`), cube-cover
counts (:mod:`.covering`) and the ubiquity counting layer (:mod:`.ubiquity`).
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    BudgetExceededError,
    DirichletLabError,
    DivergenceExhaustedError,
    DomainError,
    SolverError,
    UnboundedInverseError,
)
from .psi import (  # noqa: E402
    PowerLog,
    SeriesSpec,
    Tabulated,
    ZProfile,
    capital_psi_eps,
    dimension_predict,
    dual_psi,
    eval_psi,
    exponent_dimension,
    inverse_psi,
    series_classify,
    z_profile,
)
from .lattice import (  # noqa: E402
    NEG_INF,
    FlowParams,
    Grid,
    apply_flow,
    dual_lattice,
    grid_from_pair,
    lll_reduce,
    mahler_check,
    shortest_vector,
    successive_minima,
)
from .scan import (  # noqa: E402
    ScanConfig,
    dani_check,
    direct_check,
    transference_witness,
    uniform_exponent,
)
from .covering import cover_count, hausdorff_sum, slope_fit, zt_member  # noqa: E402
from .ubiquity import (  # noqa: E402
    UbiquityConfig,
    bad_pair_check,
    census_m1,
    epsilon_of_b,
    mean_variance,
    omega_sequence,
    rho_ubiquity,
    totient_ratio,
)
