"""Reference external-oracle adapter.

Wraps a user-supplied classify callable behind the oracle wire protocol v1
so scanners can probe real models over stdio pipes or TCP. Carries no ML
framework dependencies: the user callable does the actual inference.
"""

from .model import WrappedModel, load_model_spec, wrap_constant
from .server import serve_stdio, serve_tcp

__version__ = "0.1.0"

__all__ = ["WrappedModel", "wrap_constant", "load_model_spec", "serve_stdio", "serve_tcp"]
