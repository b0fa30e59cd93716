"""dermsoap-sidecar: embeddings and completions behind the pipeline's HTTP protocol."""

from .app import create_app
from .config import SidecarConfig, load_config

__version__ = "0.1.0"
