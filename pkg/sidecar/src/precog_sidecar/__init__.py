"""HTTP sidecar serving top-k masked-token predictions."""

__version__ = "0.1.0"

from .service import MaskedLM, SidecarConfig, create_app

__all__ = ["MaskedLM", "SidecarConfig", "create_app", "__version__"]
