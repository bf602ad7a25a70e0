"""Node embeddings by sparse factorization of a sampled random-walk matrix."""

from .config import PipelineConfig
from .graph import Graph, GraphFormatError, load_edge_list
from .pipeline import run_embedding

__all__ = ["Graph", "GraphFormatError", "PipelineConfig", "load_edge_list", "run_embedding"]
