"""Key management and secure distribution for software-defined-radio fleets."""

__version__ = "0.1.0"
