"""Density-matrix word representations: training, composition, evaluation."""

from .compose import (
    METHODS,
    OPERATOR_SIDES,
    ROLES,
    ComposeConfig,
    Fragment,
    PregroupType,
    ReductionResult,
    SimpleType,
    Token,
    check_grammatical,
    compose_fragment,
    compose_fragment_vectors,
    compose_pair,
    fragment_types,
    load_type_lexicon,
    pregroup_reduce,
)
from .corpus import (
    ContextPair,
    NegativeSampler,
    SubsampleFilter,
    Vocabulary,
    build_vocab,
    context_windows,
    iter_sentences,
    negative_sampler,
    subsample_filter,
    tokenize,
)
from .errors import (
    DataError,
    DegenerateCompositionError,
    DimensionMismatchError,
    DmsemError,
    NumericError,
    OOVError,
)
from .evaluation import (
    SIM_MODES,
    ChangeMatrix,
    EntropyReport,
    EvalReport,
    Triple,
    TripleScore,
    entropy_report,
    evaluate,
    load_triples,
    paraphrase_accuracy,
    score_model,
    score_model_vectors,
    serialize_triples,
    spearman_rho,
)
from .linalg import (
    DensityMatrix,
    EigenSystem,
    SenseMatrix,
    build_density,
    eigendecompose,
    psd_sqrt,
    similarity,
    von_neumann_entropy,
)
from .senses import (
    ClusterResult,
    ContextSet,
    agglomerative_cluster,
    collect_contexts,
    context2dm,
    contextual2dm,
    load_contextual_instances,
    principal_axes,
    reduce_dimensions,
)
from .store import (
    DensityStore,
    SenseStore,
    load_vectors,
    save_vectors,
)
from .training import (
    SENSE_METRICS,
    VARIANTS,
    EmbeddingTable,
    SenseTable,
    TrainConfig,
    densities_from_table,
    finalize_density,
    ms_word2dm_step,
    select_sense,
    sgns_step,
    train,
)

__all__ = [
    "METHODS",
    "OPERATOR_SIDES",
    "ROLES",
    "SENSE_METRICS",
    "SIM_MODES",
    "VARIANTS",
    "ChangeMatrix",
    "ClusterResult",
    "ComposeConfig",
    "ContextPair",
    "ContextSet",
    "DataError",
    "DegenerateCompositionError",
    "DensityMatrix",
    "DensityStore",
    "DimensionMismatchError",
    "DmsemError",
    "EigenSystem",
    "EmbeddingTable",
    "EntropyReport",
    "EvalReport",
    "Fragment",
    "NegativeSampler",
    "NumericError",
    "OOVError",
    "PregroupType",
    "ReductionResult",
    "SenseMatrix",
    "SenseStore",
    "SenseTable",
    "SimpleType",
    "SubsampleFilter",
    "Token",
    "TrainConfig",
    "Triple",
    "TripleScore",
    "Vocabulary",
    "agglomerative_cluster",
    "build_density",
    "build_vocab",
    "check_grammatical",
    "collect_contexts",
    "compose_fragment",
    "compose_fragment_vectors",
    "compose_pair",
    "context2dm",
    "context_windows",
    "contextual2dm",
    "densities_from_table",
    "eigendecompose",
    "entropy_report",
    "evaluate",
    "finalize_density",
    "fragment_types",
    "iter_sentences",
    "load_contextual_instances",
    "load_triples",
    "load_type_lexicon",
    "load_vectors",
    "ms_word2dm_step",
    "negative_sampler",
    "paraphrase_accuracy",
    "pregroup_reduce",
    "principal_axes",
    "psd_sqrt",
    "reduce_dimensions",
    "save_vectors",
    "score_model",
    "score_model_vectors",
    "select_sense",
    "serialize_triples",
    "sgns_step",
    "similarity",
    "spearman_rho",
    "subsample_filter",
    "tokenize",
    "train",
    "von_neumann_entropy",
]

__version__ = "0.1.0"
