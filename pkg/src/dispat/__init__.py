"""Structure-aware, reference-contrastive patent approval prediction.

Pipeline: parse claim hierarchies, retrieve earlier granted patents with
BM25, encode both with a citation-biased attention encoder, split the target
into similarity and specificity views, classify approval and explain the
decision claim by claim.
"""
from .claims import ClaimGraph, parse_claims
from .config import TrainConfig, load_config, profile
from .corpus import Corpus, PatentRecord, ingest, split
from .errors import DispatError
from .estimator import Bm25Retriever, DiSPatClassifier
from .evidential import EvidenceReport, explain, render_report
from .featurize import Sample
from .metrics import Metrics, evaluate_scores
from .retrieval import Bm25Index
from .synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "Bm25Index", "Bm25Retriever", "ClaimGraph", "Corpus", "DiSPatClassifier", "DispatError",
    "EvidenceReport", "Metrics", "PatentRecord", "Sample", "SynthConfig", "TrainConfig",
    "evaluate_scores", "explain", "generate", "ingest", "load_config", "parse_claims",
    "profile", "render_report", "split",
]
