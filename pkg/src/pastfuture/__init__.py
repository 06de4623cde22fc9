"""Author-level past/future metric correlations on citation corpora."""

__version__ = "0.1.0"
