"""degem: randomized embedding of degenerate graphs in dense and
two-colored hosts, with measured guarantees at every stage."""

from .decompose import (
    ForwardPlan,
    LayeredPartition,
    forward_plan,
    max_forward_degree,
    split,
)
from .defect import (
    DefectParams,
    EvalSettings,
    MomentResult,
    defect,
    moment_exact,
    moment_sampled,
    count_low_codegree,
)
from .drc import (
    ChainSchedule,
    DrcOutcome,
    DrcParams,
    defect_transfer_check,
    drc_bipartite,
    drc_chain,
    drc_general,
    drc_mutual,
    drc_pair,
    reverify,
)
from .embed import (
    EmbedPlan,
    EmbedState,
    OneSideResult,
    certificate_check,
    embed_one_side_bounded,
    failure_bound,
    random_greedy_embed,
    verify_embedding,
)
from .graph import (
    BudgetExceeded,
    Graph,
    InputError,
    TwoColoring,
    as_mask,
    bipartition,
    common_neighbors,
    degeneracy,
    derive_seed,
    greedy_color,
    iter_bits,
    mask_to_list,
    min_degree_subgraph,
    random_bipartite,
    random_coloring,
    random_degenerate,
    random_graph,
    read_coloring,
    read_edge_list,
    write_coloring,
    write_edge_list,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    brute_force_contains,
    brute_force_embed,
    embed_bipartite_pipeline,
    find_monochromatic,
    geometric_schedule,
)
from .prune import (
    PartitionOutcome,
    PartitionParams,
    PruneOutcome,
    random_partition,
    remove_concentrated,
)

__version__ = "0.1.0"
