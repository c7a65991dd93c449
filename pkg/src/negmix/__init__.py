"""negmix: hybrid synthetic/retrieved hard negatives for dense retrieval.

The package covers the full loop: BEIR-style data handling, BM25 negative
mining, LLM negative generation (with a deterministic mock client), several
instance-level mixing strategies, a linear dual encoder trained with a
temperature-scaled contrastive loss, retrieval evaluation, and a small
rank-analysis toolkit that checks the ranking identities the design relies
on.
"""

__version__ = "0.1.0"

from .bm25 import Bm25Index, bm25_score, build_index, mine_negatives, search
from .data import (Document, Judgments, NegativeSample, Provenance, Query,
                   RankedList, SynthParams, TrainInstance, load_corpus,
                   load_instances, load_qrels, load_queries, make_pairs,
                   save_corpus, save_instances, save_qrels, save_queries,
                   split_query_ids, synth_dataset, validate)
from .encoder import (EncoderParams, FeatureCache, SparseVector, encode,
                      encode_corpus, featurize, init_params, load_checkpoint,
                      save_checkpoint, similarity)
from .errors import (DomainError, GenerationError, IntegrityError, MixError,
                     NegmixError, NumericError, ParameterError, ParseError,
                     SchemaError, UsageError)
from .evaluation import (AuditCategory, Metrics, SimilarityAudit,
                         build_audit_items, evaluate, mrr_at_k, ndcg_at_k,
                         rank_all, recall_at_k, similarity_audit)
from .generation import (BUILTIN_POOLS, AttributePools, AttributeSet,
                         GenConfig, GenerationRecord, HttpChatClient,
                         MockChatClient, PromptSpec, PromptTemplate, dedup,
                         generate, generate_all, mock_client,
                         parse_generation, render_prompt, sample_attributes)
from .mixing import MixConfig, MixStrategy, mix, selected_pair_count
from .rank_analysis import (ComparisonReport, RankWorld, SimulationParams,
                            check_rank_identity, inf_mrr, pairwise_loss,
                            quality_phi, simulate_comparison, topn_loss,
                            verify_identities)
from .trainer import (Reservoir, TrainConfig, TrainingStats, grad_variance,
                      infonce_grad, infonce_loss, train)

__all__ = [
    "__version__",
    # data
    "Document", "Query", "Judgments", "NegativeSample", "Provenance",
    "RankedList", "TrainInstance", "SynthParams", "load_corpus",
    "load_queries", "load_qrels", "load_instances", "save_corpus",
    "save_queries", "save_qrels", "save_instances", "make_pairs",
    "split_query_ids", "synth_dataset", "validate",
    # retriever
    "Bm25Index", "build_index", "bm25_score", "search", "mine_negatives",
    # generation
    "AttributePools", "AttributeSet", "BUILTIN_POOLS", "PromptTemplate",
    "PromptSpec", "GenConfig", "GenerationRecord", "HttpChatClient",
    "MockChatClient", "mock_client", "sample_attributes", "render_prompt",
    "parse_generation", "generate", "generate_all", "dedup",
    # mixing
    "MixStrategy", "MixConfig", "mix", "selected_pair_count",
    # encoder / trainer
    "SparseVector", "EncoderParams", "FeatureCache", "featurize",
    "init_params", "encode", "encode_corpus", "similarity",
    "save_checkpoint", "load_checkpoint", "TrainConfig", "TrainingStats",
    "Reservoir", "train", "infonce_loss", "infonce_grad", "grad_variance",
    # evaluation
    "Metrics", "AuditCategory", "SimilarityAudit", "rank_all", "ndcg_at_k",
    "recall_at_k", "mrr_at_k", "evaluate", "similarity_audit",
    "build_audit_items",
    # rank analysis
    "RankWorld", "SimulationParams", "ComparisonReport", "pairwise_loss",
    "check_rank_identity", "topn_loss", "quality_phi", "inf_mrr",
    "simulate_comparison", "verify_identities",
    # errors
    "NegmixError", "ParameterError", "ParseError", "IntegrityError",
    "SchemaError", "GenerationError", "MixError", "NumericError",
    "DomainError", "UsageError",
]
