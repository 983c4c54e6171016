"""Simulation and diffusion-coefficient estimation for the Kob-Andersen lattice gas."""
from .lattice import (
    Configuration,
    DensityProfile,
    Edge,
    Torus,
    Window,
    construct_blocked,
    exchange,
    make_edge,
    neighbors,
    sample_product,
    translate,
)
from .dynamics import ModelParams, constraint, simulate, soft_rate

__version__ = "0.1.0"
