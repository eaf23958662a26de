"""Top-view depth-camera head tracking and wall-attention analytics."""

__version__ = "0.1.0"
