"""Digital simulation of fermion/antifermion wave packets coupled to a boson band."""

__version__ = "0.1.0"

from .hilbert import HilbertSpace, SparseOperator, StateVector
from .model import FieldModel
from .evolve import EvolutionConfig, exact_evolve, trotter_evolve
from .encoding import encode_state

__all__ = [
    "HilbertSpace",
    "SparseOperator",
    "StateVector",
    "FieldModel",
    "EvolutionConfig",
    "exact_evolve",
    "trotter_evolve",
    "encode_state",
    "__version__",
]
