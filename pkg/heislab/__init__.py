"""
heislab
-------
Desk-scale verification toolkit for spherical means and maximal functions
on the Heisenberg group H^n.
"""

__version__ = "0.1.0"
