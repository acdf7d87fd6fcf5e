from .boolean import BooleanPoset, VariableSubset, subset
from .changepoint import ChangepointPoset, ChangepointVector
from .cpdag import (
    Cpdag,
    CpdagPoset,
    Dag,
    RestrictedCpdagPoset,
    ReversedCpdagPoset,
    cpdag,
    cpdag_precedes,
    consistent_extensions,
    dag_to_cpdag,
    empty_cpdag,
    is_star_forest,
    is_valid_cpdag,
    minimal_covering_pairs_causal,
    rho_cpdag,
    star_cpdag,
)
from .partition import (
    Partition,
    PartitionPoset,
    ReversePartitionPoset,
    common_coarsening,
    common_refinement,
    one_block,
    partition_from_blocks,
    partition_from_labels,
    singletons,
)
from .ranking import (
    PartialRanking,
    PartialRankingPoset,
    TotalRanking,
    TotalRankingPoset,
    ranking_from_inversions,
)

__all__ = [
    "BooleanPoset",
    "VariableSubset",
    "subset",
    "ChangepointPoset",
    "ChangepointVector",
    "Cpdag",
    "CpdagPoset",
    "Dag",
    "RestrictedCpdagPoset",
    "ReversedCpdagPoset",
    "cpdag",
    "cpdag_precedes",
    "consistent_extensions",
    "dag_to_cpdag",
    "empty_cpdag",
    "is_star_forest",
    "is_valid_cpdag",
    "minimal_covering_pairs_causal",
    "rho_cpdag",
    "star_cpdag",
    "Partition",
    "PartitionPoset",
    "ReversePartitionPoset",
    "common_coarsening",
    "common_refinement",
    "one_block",
    "partition_from_blocks",
    "partition_from_labels",
    "singletons",
    "PartialRanking",
    "PartialRankingPoset",
    "TotalRanking",
    "TotalRankingPoset",
    "ranking_from_inversions",
]
