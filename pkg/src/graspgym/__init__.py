"""Desk-scale directional grasping sandbox.

Subpackages are imported lazily by the CLI so that thread caps from the
GRASPGYM_THREADS environment variable can be applied before numpy loads.
"""

__version__ = "0.1.0"
