"""Figure rendering over rayleighlab experiment outputs (read-only)."""

__version__ = "0.1.0"
