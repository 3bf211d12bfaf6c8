"""Complex distortion of repulsive Schrödinger operators and resonance-free certificates."""

__version__ = "0.1.0"
