"""Volumes of homogeneity spaces for effect scales on 2x2 outcome tables."""

__version__ = "0.1.0"

from .geometry import (
    closed_domain_volume,
    closed_surface_volume,
    gram_volume,
    jacobian,
    ratio_v_over_f,
    volume_element,
)
from .inference import WaldConfig, acceptance_volume, critical_value, normal_quantile, table_wald, wald_statistic
from .integrate import (
    McConfig,
    QuadConfig,
    VolumeEstimate,
    mc_volume,
    quad_domain_volume,
    quad_surface_volume,
    table_thm1,
    table_thm2,
)
from .scales import (
    OR,
    RD,
    RR,
    CellTriple,
    DomainError,
    EffectScale,
    OutcomeQuad,
    in_domain,
    interaction_measure,
    inverse_odds,
    is_homogeneous,
    null_value,
    odds,
    or_lower_bound,
    solve_fourth,
)
