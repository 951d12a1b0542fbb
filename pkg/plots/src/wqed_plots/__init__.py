"""Figure rendering for the wqed CSV datasets."""

__version__ = "0.1.0"
