"""Attitude parameters, orbital element sets and low-thrust trajectory optimization.

Submodules: :mod:`tensors`, :mod:`attitude`, :mod:`frames`, :mod:`elements`,
:mod:`dynamics`, :mod:`propagate`, :mod:`optctrl`, :mod:`cli`.
"""

from . import attitude, dynamics, elements, errors, frames, propagate, tensors

__version__ = "0.1.0"

__all__ = ["attitude", "dynamics", "elements", "errors", "frames", "propagate", "tensors", "__version__"]
