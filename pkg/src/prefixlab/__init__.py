"""prefixlab: an exact-arithmetic laboratory for prefix-free description
complexity, Kraft-Chaitin-Levin codeword allocation, incompressible trees,
compression adversaries, and tree-class avoidance games."""

__version__ = "0.1.0"

from .bits import (
    BitString,
    ClopenSet,
    DyadicRational,
    OracleStream,
    elias_gamma,
    elias_gamma_decode,
    gamma_nat,
    gamma_nat_decode,
    rank_pair,
    string_from_rank,
    string_rank,
    unrank_pair,
)
from .kcl import KCLAllocator, KCLOverflow
from .machine import (
    ConditionalCodebook,
    PrefixFreeCodebook,
    ReferenceMachine,
    literal_cost,
)
from .trees import (
    PrunedTree,
    Tree,
    TreeClassPresentation,
    TreePrefix,
    basic_open_member,
    fatness_check,
    prune_deadends,
    properness_witness,
    tree_prefix_code,
    tree_prefix_decode,
    width_profile,
)

__all__ = [
    "BitString",
    "ClopenSet",
    "DyadicRational",
    "OracleStream",
    "elias_gamma",
    "elias_gamma_decode",
    "gamma_nat",
    "gamma_nat_decode",
    "rank_pair",
    "string_from_rank",
    "string_rank",
    "unrank_pair",
    "KCLAllocator",
    "KCLOverflow",
    "ConditionalCodebook",
    "PrefixFreeCodebook",
    "ReferenceMachine",
    "literal_cost",
    "PrunedTree",
    "Tree",
    "TreeClassPresentation",
    "TreePrefix",
    "basic_open_member",
    "fatness_check",
    "prune_deadends",
    "properness_witness",
    "tree_prefix_code",
    "tree_prefix_decode",
    "width_profile",
]
