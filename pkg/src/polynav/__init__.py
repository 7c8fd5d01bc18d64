"""Iterative convex MPC with discrete-time barrier constraints for polytopic robots."""

__version__ = "0.1.0"
