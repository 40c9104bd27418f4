"""Lattice points in Cygan-Korányi balls of the Heisenberg groups H_q."""

from .counting import error_term, fast_count
from .geometry import ball_volume, brute_force_count

__all__ = ["ball_volume", "brute_force_count", "error_term", "fast_count"]
__version__ = "0.1.0"
