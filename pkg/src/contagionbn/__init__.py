"""Default contagion in financial networks via Bayesian network compilation.

Build a :class:`FinancialNetwork`, derive its redemption graph, compile the
default indicators into a discrete Bayesian network (directly on a DAG, or
through the acyclic augmentation when there are lending cycles), and answer
exact or Monte-Carlo probability queries, independence questions, and
systemic impact measures.
"""

__version__ = "0.1.0"

from .augment import AugmentedGraph, acyclic_augmentation, to_dot, verify_dag, witness_cycle
from .bayesnet import (
    ConfigProbability,
    Cpt,
    CptEntry,
    DiscreteBayesNet,
    bn_to_dict,
    build_dag_bn,
    build_mild_bn,
    build_strict_bn,
    default_phi,
    joint_config_prob,
)
from .cascade import (
    AssetScenario,
    CascadeOutcome,
    check_consistent,
    equity,
    mild_cascade,
    sample_assets,
    strict_cascade,
)
from .cli import CorePeripheryParams, generate_core_periphery
from .dsep import SeparationQuery, d_separated, d_separated_by_chains, firm_independence
from .inference import (
    CountDistribution,
    Factor,
    Query,
    ZeroEvidenceError,
    brute_force_default_law,
    core_count_distribution,
    count_distribution,
    factor_product,
    joint_default_law,
    marginalize,
    mc_estimate,
    query_prob,
    reduce_evidence,
)
from .netmodel import (
    FinancialNetwork,
    FirmParams,
    RedemptionGraph,
    SccDecomposition,
    ValidationIssue,
    ValidationReport,
    build_redemption_graph,
    dumps_network,
    is_dag,
    load_network,
    loads_network,
    redemption_graph_from_edges,
    save_network,
    scc_decompose,
    validate_network,
)
from .sysimpact import ImpactReport, asi, impact_matrix, impact_report, rsi

__all__ = [name for name in dir() if not name.startswith("_")]
