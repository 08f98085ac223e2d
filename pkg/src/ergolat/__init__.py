"""Lattice coding and decoding for ergodic fading channels.

Nested-lattice transceivers with statistics-only decision regions,
Monte Carlo evaluation of the achievable rates and gap-to-capacity bounds,
and MAC rate regions via virtual-user successive cancellation.
"""

from .channel import FadingModel, LinkConfig, fixed, nakagami, parse_model, rayleigh
from .lattices import (Lattice, NestedPair, construction_a, construction_a_pair,
                       integer_zn, parse_lattice_config, scaled_zn, zn_pair)
from .mc import McEstimate

__version__ = "0.1.0"

__all__ = [
    "FadingModel", "LinkConfig", "Lattice", "NestedPair", "McEstimate",
    "rayleigh", "nakagami", "fixed", "parse_model",
    "integer_zn", "scaled_zn", "construction_a", "zn_pair",
    "construction_a_pair", "parse_lattice_config",
    "__version__",
]
