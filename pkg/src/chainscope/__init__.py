"""chainscope: chain components, shadowing and entropy on finite models of dynamical systems."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    CapacityError,
    FiniteModel,
    ModelError,
    ResolutionError,
    ResolutionSchedule,
    ValidationError,
    build_example31_model,
    build_grid_model,
    build_subshift_model,
    from_matrix,
    permutation_model,
    validate_model,
)
from .chains import (  # noqa: F401
    ChainDigraph,
    ComponentDecomposition,
    build_chain_digraph,
    chain_stability_margin,
    decompose,
    omega_component,
    reaches,
    restrict_model,
)
