"""Pivot-based vectorized map toolkit.

Ground-truth pivot extraction, dynamic pivot sequence matching, the
sequence loss family with analytic subgradients, BEV mask losses,
Chamfer-distance AP evaluation, synthetic shape generation, and a
desk-scale fitting harness, plus a JSONL CLI over all of it.
"""

from .errors import CapacityError, ParseError, PivotMapError, ValidationError
from .evaluate import (
    ALT_THRESHOLDS,
    DEFAULT_THRESHOLDS,
    EvalConfig,
    EvalResult,
    average_precision,
    chamfer_distance,
    evaluate,
    match_for_eval,
)
from .fitting import FitConfig, FitTrace, RoundTripReport, fit_points, round_trip
from .geometry import resample_even, resample_step
from .losses import (
    DvsReport,
    DvsWeights,
    collinear_loss,
    collinear_targets,
    dvs_total,
    pivot_cls_loss,
    pivotal_loss,
)
from .matching import (
    Combination,
    InstanceAssignment,
    PivotMatch,
    assign_instances,
    match_cost,
    open_for_matching,
    pdm_bruteforce,
    pdm_dp,
    split_sequence,
)
from .model import (
    BevRange,
    ClassBudget,
    ElementClass,
    LocalMap,
    MapElement,
    Point2,
    Polyline,
    clip_polyline,
    clip_to_range,
    load_local_maps,
    parse_local_map,
    serialize_local_map,
)
from .raster import (
    DEFAULT_GRID_SHAPE,
    MaskLossWeights,
    bce_mask_loss,
    bev_loss,
    dice_loss,
    line_aware_loss,
    rasterize,
    total_loss,
    union_mask,
)
from .simplify import SimplifyConfig, check_tolerance, vw_reduce, vw_simplify
from .synth import (
    CORNER_HEAVY_KINDS,
    CompactnessReport,
    ShapeKind,
    compactness_experiment,
    even_resample,
    gen_element,
)

__version__ = "0.1.0"
