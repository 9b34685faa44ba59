"""Collision-time asymptotics for independent Brownian motions with drift."""

__version__ = "0.1.0"
