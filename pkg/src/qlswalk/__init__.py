"""Classical simulator for an instance-aware, walk-based quantum linear-system solver."""

__version__ = "0.1.0"
