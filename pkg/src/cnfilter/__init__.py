"""Domain-filtering local consistencies on binary constraint networks."""

from .network import (
    CheckCounter,
    CliqueIndex,
    ConstraintNetwork,
    DomainState,
    NetworkError,
    ParseError,
    allows,
    build_network,
    parse_instance,
    restrict_to_singleton,
    serialize_instance,
    three_cliques,
)
from .filters import (
    AC,
    MAXRPC,
    NIC,
    PIC,
    RPC,
    SAC,
    SPC,
    SRPC,
    ConsistencyId,
    FilterResult,
    SupportCache,
    enforce,
    enforce_ac,
    enforce_k_rpc,
    enforce_max_rpc,
    enforce_nic,
    enforce_pic,
    enforce_rpc,
    enforce_strong_pc,
    find_pc_support,
    krpc,
)
from .singleton import SingletonProbe, enforce_sac, enforce_srpc, singleton_test
from .oracle import (
    SolutionSet,
    WitnessParams,
    definitional_closure,
    enumerate_solutions,
    strong_pc_closure,
    variable_completability,
    witness_search,
)
from .generator import (
    ExperimentFamily,
    GenSpec,
    SplitMix64,
    derive_seed,
    generate_model_b,
    spec_for_paper_experiment,
)
from .bench import (
    BenchPoint,
    TightnessBound,
    estimate_t0,
    estimate_tall,
    measure,
    points_to_csv,
    sweep,
)
from .lattice import (
    INCOMPARABLE_PAIRS,
    STRICT_EDGES,
    LatticeReport,
    find_witnesses,
    sample_containments,
    witness_pairs,
)

__all__ = [name for name in dir() if not name.startswith("_")]
