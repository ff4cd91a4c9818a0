"""pkcontrol - Differentiable LQR policies with partial model knowledge.

A library and command-line harness that embeds a differentiable linear-quadratic
regulator, driven by a partially known parametric dynamics model, inside
reinforcement-learning policies.
"""

__version__ = "1.0.0"
__author__ = "pkcontrol Team"
__license__ = "GPL-3.0-or-later"

__all__ = ["__author__", "__license__", "__version__"]
