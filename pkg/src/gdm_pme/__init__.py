"""Gradient schemes (mass-lumped P1 and HMM) for the porous medium equation."""
from .barenblatt import BarenblattParams, barenblatt, error_beta, error_u, front_distance, front_radius, rate
from .gd import GradientDiscretisation
from .hmm import build_hmm
from .mesh import Mesh, generate_polygonal, generate_triangular, load_mesh, parse_mesh_spec
from .mlp1 import build_mlp1
from .nonlinearity import PowerLaw
from .scheme import ProblemSpec, TimeGrid, energy_ledger, run

__all__ = [
    "BarenblattParams", "GradientDiscretisation", "Mesh", "PowerLaw", "ProblemSpec", "TimeGrid",
    "barenblatt", "build_hmm", "build_mlp1", "energy_ledger", "error_beta", "error_u", "front_distance",
    "front_radius", "generate_polygonal", "generate_triangular", "load_mesh", "parse_mesh_spec", "rate", "run",
]
__version__ = "0.1.0"
