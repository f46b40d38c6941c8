"""Band-edge asymptotics of weakly disordered periodic operators in one dimension."""

__version__ = "0.1.0"
