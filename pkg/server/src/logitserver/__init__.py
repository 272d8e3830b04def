"""HTTP service exposing a causal LM's tokenizer and next-token log-probabilities."""

from .app import ACCEPT_B64, create_app
from .model import ContextOverflow, ModelRunner, ServerConfig

__version__ = "0.1.0"

__all__ = ["ACCEPT_B64", "ContextOverflow", "ModelRunner", "ServerConfig", "create_app"]
