"""Task-space QP control with robust barrier and integral feedback for servo-driven robots."""

__version__ = "0.1.0"
