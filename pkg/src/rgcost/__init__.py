"""rgcost: combinatorial cost, local-global statistics, and rank gradients
of finite graph and Schreier-graph sequences."""

from .graph_core import (
    CanonicalCode,
    Coloring,
    Graph,
    GraphFormatError,
    RootedBall,
    ball,
    canonical_code,
    connected_components,
    cycle_graph,
    complete_graph,
    disjoint_union,
    format_graph,
    girth,
    load_graph,
    parse_graph,
    path_graph,
    petersen_graph,
    power_distance_coloring,
    save_graph,
    star_graph,
    torus_graph,
)
from .local_stats import (
    ColoringFamilies,
    NeighborhoodDistribution,
    bs_distance,
    colored_neighborhood_distribution,
    lg_distance_estimate,
    model_coloring,
    neighborhood_distribution,
    tv_distance,
)
from .rewiring import (
    DensityReport,
    InstanceTooLargeError,
    RewiringCertificate,
    TransferReport,
    density_report,
    edge_density,
    exact_cL,
    is_rewiring,
    optimize_rewiring,
    transfer_rewiring,
)
from .schreier import (
    CosetLimitError,
    Family,
    FarberRow,
    IntransitiveActionError,
    Presentation,
    PresentationFormatError,
    RankGradientRow,
    SchreierGraph,
    SchreierPresentation,
    abelianized_rank,
    builtin_family,
    check_relators,
    farber_statistic,
    parse_presentation,
    parse_subgroup_words,
    rank_gradient_table,
    rank_quotient,
    reidemeister_schreier,
    schreier_from_permutations,
    tietze_simplify,
    todd_coxeter,
    verify_generators,
)
from .trichotomy import (
    AmalgamCertificate,
    Partition,
    SpectralResult,
    amalgam_certificate,
    balanced_partition,
    choose_k,
    partition_from_assignment,
    spectral_gap,
    trichotomy_report,
)

__version__ = "0.1.0"
