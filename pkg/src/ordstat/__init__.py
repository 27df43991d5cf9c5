"""Joint distribution of order statistics in one- and two-group models.

The three recursions (Bolshev, Steck, Noe) run on interchangeable scalar
backends (``double``, faithfully rounded ``pair``, exact ``rational``), and
the multiple-testing layer turns their output into exact FDR, FDP and
power figures for step-up procedures.
"""

from .distributions import (
    ChiSqAlternative,
    NormalCdf,
    PowerCdf,
    SurvivalTransformedCdf,
    UniformCdf,
    ZTestAlternative,
    parse_cdf,
    reduce_to_uniform,
)
from .mtp import (
    JointVR,
    ModelSpec,
    StepUpProcedure,
    avg_power,
    bh_thresholds,
    fdp_distribution,
    fdr,
    joint_vr,
    joint_vr_fm,
    joint_vr_rm,
    lambda_power,
)
from .pair import K_LIMIT, FaithfulResult, PairNumber, k_parameter
from .recursions import (
    BoundaryError,
    PsiTable,
    TransformedBoundaries,
    bolshev_one_group,
    bolshev_two_group,
    count_operations,
    enclosure,
    noe_two_group,
    psi_suffix,
    psi_table,
    steck_two_group,
)
from .scalar import DOUBLE, PAIR, RATIONAL, get_backend, parse_decimal

__version__ = "0.1.0"
