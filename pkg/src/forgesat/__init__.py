"""SAT instance embeddings from a vector-quantized bipartite graph autoencoder."""

__version__ = "0.1.0"
