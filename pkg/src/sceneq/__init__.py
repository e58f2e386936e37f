"""Probabilistic first-order query scoring and retrieval over oriented-box scenes.

Conjunctive queries over detected objects are scored by multiplying factor
probabilities and maximizing over candidate assignments, factorized into
independently scorable clause groups for tractability.
"""

from .errors import SceneQError
from .fol import (
    ClassAtom,
    ClauseGroup,
    ConjunctiveQuery,
    IsolatedAtom,
    MetricAtom,
    RelationAtom,
    clause_groups,
    complexity_counts,
    fol_bleu,
    logically_equivalent,
    normalize,
    parse_query,
    render_query,
)
from .geometry import (
    GsdMetadata,
    OrientedBox,
    PredicateContext,
    compute_gsd,
    polygon_intersection_area,
)
from .inference import (
    DEFAULT_FLOOR,
    Detection,
    Scene,
    ScoredImage,
    Witness,
    candidate_sets,
    hypothesis_count,
    naive_score,
    score_group,
    score_query,
)
from .metrics import (
    MetricTable,
    bench_compare,
    image_uncertainty,
    mean_metrics,
    precision_at_k,
    recall_at_k,
    rrqc,
    rriu,
)
from .retrieval import (
    Corpus,
    GroundTruth,
    RankedRun,
    explain,
    flooded_area_m2,
    load_corpus,
    retrieve,
)
from .translate import (
    ChatClient,
    ChatRequest,
    ChatSample,
    HttpChatClient,
    JaccardSimilarity,
    PromptDocument,
    SelectionReason,
    TranslationResult,
    TranslationSample,
    build_prompt,
    offline_translate,
    select_sample,
    translate,
)
from .vocab import Vocabulary, get_profile

__version__ = "0.1.0"

__all__ = [
    "ChatClient",
    "ChatRequest",
    "ChatSample",
    "ClassAtom",
    "ClauseGroup",
    "ConjunctiveQuery",
    "Corpus",
    "DEFAULT_FLOOR",
    "Detection",
    "GroundTruth",
    "GsdMetadata",
    "HttpChatClient",
    "IsolatedAtom",
    "JaccardSimilarity",
    "MetricAtom",
    "MetricTable",
    "OrientedBox",
    "PredicateContext",
    "PromptDocument",
    "RankedRun",
    "RelationAtom",
    "Scene",
    "SceneQError",
    "ScoredImage",
    "SelectionReason",
    "TranslationResult",
    "TranslationSample",
    "Vocabulary",
    "Witness",
    "bench_compare",
    "build_prompt",
    "candidate_sets",
    "clause_groups",
    "complexity_counts",
    "compute_gsd",
    "explain",
    "flooded_area_m2",
    "fol_bleu",
    "get_profile",
    "hypothesis_count",
    "image_uncertainty",
    "load_corpus",
    "logically_equivalent",
    "mean_metrics",
    "naive_score",
    "normalize",
    "offline_translate",
    "parse_query",
    "polygon_intersection_area",
    "precision_at_k",
    "recall_at_k",
    "render_query",
    "retrieve",
    "rrqc",
    "rriu",
    "score_group",
    "score_query",
    "select_sample",
    "translate",
]
