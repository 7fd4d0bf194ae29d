"""Model hosting bridge.

Serves JSON-specified models over the prediction protocol (HTTP POST
/predict or newline-delimited JSON on stdio) and exports gradient-based
attribution scores in the explanation JSON schema.
"""

from .export import export_attributions
from .models import BridgeError, LinearModel, MlpModel, load_model
from .serve import handle_request, serve, serve_http, serve_stdio

__version__ = "0.1.0"

__all__ = [
    "BridgeError",
    "LinearModel",
    "MlpModel",
    "export_attributions",
    "handle_request",
    "load_model",
    "serve",
    "serve_http",
    "serve_stdio",
]
