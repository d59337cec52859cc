"""Pseudospectral laboratory for a coupled fractional nonlinear Schroedinger system."""

__version__ = "0.1.0"

from .grid import Grid, integrate, inner_product, make_grid  # noqa: E402
from .functional import Params, State, energy, gradient, mass  # noqa: E402
from .groundstate import MinimizeConfig, minimize, scalar_ground_state  # noqa: E402
from .dynamics import EvolveConfig, evolve  # noqa: E402

__all__ = [
    "Grid", "make_grid", "integrate", "inner_product",
    "Params", "State", "energy", "gradient", "mass",
    "MinimizeConfig", "minimize", "scalar_ground_state",
    "EvolveConfig", "evolve",
]
