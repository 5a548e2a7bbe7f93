"""Figure rendering for vlcuav experiment CSVs."""

__version__ = "0.1.0"
