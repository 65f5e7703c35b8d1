"""2D ALE finite-element simulation of swimmers in incompressible flow."""

__version__ = "0.1.0"
