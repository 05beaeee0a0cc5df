"""Exact spectral analysis and event-driven simulation of the East spin chain.

Subpackages cover the finite-chain flip rules (model), exact generators and
gaps (spectral), event-driven East and wave simulators (eastsim, wavesim),
energy-barrier path constructions and the chain-comparison bound (paths), and
the coalescing-random-jumps lower-bound pipeline (crj).
"""

__version__ = "0.1.0"

from .model import Configuration, ModelParams, Transition  # noqa: F401
