"""Numerical toolkit for weighted pseudo-differential symbol calculus."""
__version__ = "0.1.0"
