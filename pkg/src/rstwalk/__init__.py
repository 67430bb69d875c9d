"""Weighted-uniform random spanning trees via a large-step down-up walk,
with exact reference samplers and a statistical verification harness."""

from .exact import (
    ExactTreeSampler,
    MultigraphView,
    aldous_broder_sample,
    count_weighted_trees,
    enumerate_trees,
    wilson_sample,
)
from .exceptions import (
    DisconnectedGraphError,
    EnumerationLimitError,
    GraphError,
    GraphParseError,
    SamplingError,
    SolverError,
)
from .gadget import build_gadget, planted_tree, recover_matrix
from .graph import (
    LabeledEdge,
    WeightedGraph,
    is_connected,
    laplacian,
    parse_graph,
    read_graph,
    serialize_graph,
    weight_product,
)
from .isotropic import IsotropicView, build_isotropic_view, marginal_bound_check, subgraph_construct
from .ledger import QueryLedger
from .multisample import iso_sample, k_subset_sample, sample_with_replacement
from .resistance import (
    EffectiveResistance,
    ResistanceOracle,
    build_exact_oracle,
    build_sketch_oracle,
    leverage_scores,
    max_product_spanning_tree,
)
from .verify import EmpiricalDistribution, kl_divergence, marginal_check, mixing_curve, tv_distance
from .walk import DownUpTreeSampler, WalkConfig, chain_stationarity_check, qrst, walk_step

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
