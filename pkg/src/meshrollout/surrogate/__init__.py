"""Encode-process-decode surrogates assembled from a :class:`ModelConfig`.

Usage:
    from meshrollout.surrogate import MeshSurrogate, ModelConfig, prepare_graph

    config = ModelConfig(architecture="transformer", pe_mode="rope")
    graph = prepare_graph(mesh, config, seed=0)
    model = MeshSurrogate(config, in_features=p, out_features=c)
    increment = model(features, graph).increment
"""

from .config import MnpConfig, ModelConfig, TemporalConfig
from .exceptions import GraphPreparationError, ParameterMatchError, SurrogateError
from .graph import PreparedGraph, prepare_graph
from .model import MeshSurrogate, SurrogateOutput
from .sizing import count_for, match_parameters, width_for_budget

__all__ = [
    # Configuration
    "ModelConfig",
    "MnpConfig",
    "TemporalConfig",
    # Models
    "MeshSurrogate",
    "SurrogateOutput",
    "PreparedGraph",
    # Operations
    "prepare_graph",
    "count_for",
    "match_parameters",
    "width_for_budget",
    # Exceptions
    "SurrogateError",
    "GraphPreparationError",
    "ParameterMatchError",
]
