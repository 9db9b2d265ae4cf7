"""Join-tree potentials, pathset complexity and profile measures on small pattern graphs."""

__version__ = "0.1.0"
