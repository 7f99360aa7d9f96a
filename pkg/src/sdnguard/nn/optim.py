"""Mini-batch gradient descent with L2 weight decay."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingDivergedError


def sgd_step(params, grads, lr=0.01, l2=0.0, batch_size=1):
    """Return updated parameters: w <- w - lr * (grad / batch_size + l2 * w).

    ``params`` and ``grads`` are nested ``{layer: {name: array}}`` dicts.
    Gradients are divided by ``batch_size`` (pass 1 when they are already
    batch means).  Parameters whose name starts with ``b`` are biases and
    are exempt from the L2 term.
    """
    updated = {}
    for layer_name, layer_params in params.items():
        layer_grads = grads.get(layer_name, {})
        new_layer = {}
        for pname, value in layer_params.items():
            grad = layer_grads.get(pname)
            if grad is None:
                new_layer[pname] = value.copy()
                continue
            if not np.all(np.isfinite(grad)):
                raise TrainingDivergedError(
                    f"non-finite gradient in layer {layer_name!r}, parameter {pname!r}"
                )
            step = grad / batch_size
            if l2 and not pname.startswith("b"):
                step = step + l2 * value
            new_layer[pname] = value - lr * step
        updated[layer_name] = new_layer
    return updated
