"""Query-complexity measures, random restrictions/projections and switching experiments."""

__version__ = "0.1.0"
