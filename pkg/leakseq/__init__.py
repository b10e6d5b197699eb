# Leakage-suppressing composite entangling sequences

__version__ = "1.0.0"
