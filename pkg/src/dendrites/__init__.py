"""Dendrites from finite metric spaces, map extension, and skew-product chaos.

The pipeline: a finite metric space is clustered into a hierarchy of
threshold cells (`cells`), the hierarchy becomes a weighted tree whose
leaves reproduce the original distances exactly (`dendrite`), any
endpoint self-map extends over the tree with every interior point
eventually landing on the root (`extension`), and a binary-odometer skew
product over a planar comb supplies orbit pairs whose distance
distributions separate without ever being proximal (`odometer`,
`chaos`).  The `cli` module wires the stages into commands.
"""

from .errors import DendritesError
from .spaces import (
    Asymmetry,
    BadParams,
    EmptySubset,
    MetricError,
    MetricSpace,
    NonzeroDiagonal,
    SubsetGeometry,
    TriangleViolation,
    ZeroOffDiagonal,
    cantor_space,
    diameter,
    directed_distance,
    fiber_c_space,
    generate_space,
    harmonic_space,
    hausdorff_distance,
    product_space,
    space_from_file,
    space_from_json,
    space_to_json,
    subset_geometry,
    validate_metric,
)
from .cells import (
    Cell,
    CellHierarchy,
    DegenerateSpace,
    build_cell_hierarchy,
    cells_at_threshold,
    chain_connected,
)
from .dendrite import (
    Dendrite,
    DendriteReport,
    DPoint,
    Edge,
    MalformedDendrite,
    UnknownFormat,
    build_dendrite,
    dendrite_for_space,
    dendrite_from_json,
    dendrite_to_json,
    export_skeleton,
    random_dpoint,
    rho,
    verify_dendrite,
)
from .extension import (
    ArcTarget,
    DendriteMap,
    EmbeddedSystem,
    Filtration,
    NotEndpointMap,
    RootIsLeaf,
    build_filtration,
    embed_system,
    evaluate_map,
    extend_map,
    extension_from_json,
    extension_to_json,
)
from .odometer import (
    MAX_COLUMN,
    ORIGIN,
    ZERO_WORD,
    FiberDecode,
    FiberPoint,
    IndexOverflow,
    OmegaWord,
    SequenceParams,
    SkewState,
    TruncatedSystem,
    column_of,
    d_omega,
    default_params,
    fiber_point,
    orbit_distance_chunks,
    orbit_distances,
    parse_fiber,
    phi,
    skew_distance,
    step,
    tau,
    tau_power,
    timer_matches,
    top_time,
    truncated_state_space,
)
from .chaos import (
    CountTooLarge,
    DC3Evidence,
    DistributionProfile,
    PairVerdict,
    ShortStream,
    classify_pair,
    column_checkpoints,
    default_dc3_interval,
    distribution_profile,
    evidence_from_profile,
    scrambled_family,
    verdict_to_json,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
