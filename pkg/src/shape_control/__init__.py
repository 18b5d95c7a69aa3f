"""Shape Control - semi-discrete shape controllability of the heat and wave equations."""

__version__ = "0.1.0"
