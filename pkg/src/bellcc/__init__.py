"""Communication problems compiled from signed Bell compatibility graphs."""

__version__ = "0.1.0"
