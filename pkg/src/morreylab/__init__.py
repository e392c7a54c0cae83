"""morreylab: a numerical laboratory for weighted Morrey spaces.

Builds cube families (distance-pinched, lacunary-centered, shifted dyadic),
computes weighted Morrey and Lebesgue norms, maximal operators, and
Muckenhoupt-type constants on piecewise-constant grid functions, and ships
verification experiments for the covering constructions and the
maximal-operator boundedness characterization at desk scale.
"""

from ._accel import NUMBA_ENABLED
from .geometry import (
    Cube,
    CubeBatch,
    CubeFamily,
    CubePredicate,
    DyadicLattice,
    EquaParams,
    PointSet,
    SplittingParams,
    Truncation,
    annulus_cover,
    build_shifted_lattices,
    check_rcond,
    covering_cube,
    dist_cube_to_set,
    equa_residual,
    far_set_predicate,
    generate_lacunary_1d,
    generate_lacunary_sphere,
    near_set_predicate,
    solve_epsilon_N,
    solve_splitting_params,
    whitney_member,
)
from .grid import (
    GridFunction,
    SummedTable,
    cube_average,
    cube_integral,
    load_grid_binary,
    load_grid_csv,
    sample_power_weight,
    save_grid_binary,
    save_grid_csv,
    weighted_p_mass,
)
from .maximal import (
    MaximalField,
    OperatorNormEstimate,
    maximal_dyadic,
    maximal_exact,
    operator_norm_estimate,
    three_lattice_bound,
)
from .muckenhoupt import (
    ApReport,
    AxEstimate,
    ap_constant,
    ax_constant_estimate,
    classify_power_weight,
)
from .norms import (
    MorreyParams,
    NormResult,
    NormSpec,
    indicator_norm,
    lp_norm,
    morrey_norm,
    restricted_norm,
)

__version__ = "0.1.0"
