"""droneplan: container base siting, cargo packing, and biased-random-walk
reconnaissance routes for drone disaster response."""

__version__ = "0.1.0"
