from onebit_unfold.network.unfolded import (
    LayerCache,
    NetworkGradients,
    UnfoldedParams,
    clamp_activation,
    layer_backward,
    layer_forward,
    network_backward,
    network_forward,
    recover,
    recover_layers,
    ste_backward,
)

__all__ = [
    "LayerCache",
    "NetworkGradients",
    "UnfoldedParams",
    "clamp_activation",
    "layer_backward",
    "layer_forward",
    "network_backward",
    "network_forward",
    "recover",
    "recover_layers",
    "ste_backward",
]
