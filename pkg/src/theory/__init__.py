from .boundaries import (
    BoundaryCurve,
    BoundaryValue,
    CurvePoint,
    CurveSegment,
    Regime,
    achievability_boundary,
    achievability_segments,
    almost_exact_threshold,
    boundary_curve,
    converse_boundary,
    exact_threshold_coefficient,
    export_curves,
)
from .covering import (
    analytic_gamma_candidates,
    log_map_success_terms,
    map_success_upper_bound,
)
from .generating_function import (
    R_block_product_check,
    ThetaMatrix,
    chernoff_event_bound,
    cycle_theta,
    elementary_block_R_bound,
    even_path_theta,
    generating_function_R,
    log_generating_function_R,
    r_mapping,
    r_one_to_one,
    r_one_to_one_bound,
)
from .tail_bounds import database_tail_bound, planted_tail_bound

__all__ = [
    'BoundaryCurve',
    'BoundaryValue',
    'CurvePoint',
    'CurveSegment',
    'R_block_product_check',
    'Regime',
    'ThetaMatrix',
    'achievability_boundary',
    'achievability_segments',
    'almost_exact_threshold',
    'analytic_gamma_candidates',
    'boundary_curve',
    'chernoff_event_bound',
    'converse_boundary',
    'cycle_theta',
    'database_tail_bound',
    'elementary_block_R_bound',
    'even_path_theta',
    'exact_threshold_coefficient',
    'export_curves',
    'generating_function_R',
    'log_generating_function_R',
    'log_map_success_terms',
    'map_success_upper_bound',
    'planted_tail_bound',
    'r_mapping',
    'r_one_to_one',
    'r_one_to_one_bound',
]
