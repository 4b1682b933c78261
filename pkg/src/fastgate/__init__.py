"""Machine design and analysis of fast trapped-ion entangling gates."""

__version__ = "0.1.0"
