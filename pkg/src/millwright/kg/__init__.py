"""Knowledge-graph storage, retrieval, and construction pipeline."""

from millwright.kg.embedding import Embedder, HashedEmbedder
from millwright.kg.retrieval import RetrievalConfig, RetrievalResult, retrieve
from millwright.kg.store import TripleRecord, TripleStore

__all__ = [
    "Embedder",
    "HashedEmbedder",
    "TripleRecord",
    "TripleStore",
    "RetrievalConfig",
    "RetrievalResult",
    "retrieve",
]
