from .app import create_app
from .encoders import DEFAULT_MODEL, KNOWN_MODELS, SentenceTransformerEncoder

__version__ = "0.1.0"
