"""Analysis toolkit for DAG-shaped multi-party contract signing protocols."""

__version__ = "0.1.0"
