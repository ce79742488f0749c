"""Road roughness (IRI) estimation from in-vehicle acceleration and speed."""

__version__ = "0.1.0"
