"""Hierarchical network models: ERGMs whose dyad dependence follows a dependency graph."""

__version__ = "0.1.0"
