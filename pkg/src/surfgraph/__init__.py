"""Random graphs on surfaces: decomposition, exact counts, asymptotics and sampling."""

__version__ = "0.1.0"
