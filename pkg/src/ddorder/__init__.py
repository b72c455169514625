"""Decision-diagram bounds for MISP and max-cut with learned variable orderings."""

from .graph import BaConfig, Graph, generate_ba, load_instance, save_instance
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "BaConfig", "Graph", "generate_ba", "load_instance", "save_instance", "__version__"]
