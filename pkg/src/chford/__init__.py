"""Ford domains and manifold-at-infinity spines for even complex hyperbolic
triangle groups with an accidental parabolic (n = 4, 6)."""

__version__ = "0.1.0"
