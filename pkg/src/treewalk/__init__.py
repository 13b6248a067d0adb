"""Critical random walks, percolation and electrical networks on trees."""

__version__ = "0.1.0"
