"""Feedforward tanh networks with explicit reverse accumulation.

Weights are stored as ``(out, in)`` matrices. Inputs may be a single vector
or a batch of row vectors; parameter gradients are summed over the batch.
The flat parameter order is layer by layer, weights (row-major) then biases.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray


@dataclass
class MlpParams:
    """Layer sizes and parameters of a tanh-hidden, linear-output network."""

    sizes: tuple[int, ...]
    weights: list[FloatArray]
    biases: list[FloatArray]

    def __post_init__(self) -> None:
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2:
            raise InvalidParameterError("a network needs at least an input and an output size")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise InvalidParameterError("one weight matrix and bias per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            if w.shape != (self.sizes[i + 1], self.sizes[i]) or b.shape != (self.sizes[i + 1],):
                raise InvalidParameterError(
                    f"layer {i} has weight {w.shape} and bias {b.shape}, expected "
                    f"({self.sizes[i + 1]}, {self.sizes[i]}) and ({self.sizes[i + 1]},)"
                )

    @classmethod
    def init(
        cls,
        sizes: Sequence[int],
        rng: np.random.Generator,
        hidden_scale: float | None = None,
        zero_output: bool = True,
        output_bias: Sequence[float] | None = None,
    ) -> MlpParams:
        """Randomly initialized network.

        Args:
            sizes: Input, hidden and output widths.
            rng: Generator for the weight draws.
            hidden_scale: Standard deviation of non-output weights; None
                selects ``1/sqrt(fan_in)``.
            zero_output: Whether the output layer starts at exactly zero.
            output_bias: Initial output bias (overrides zero).
        """
        sizes = tuple(int(s) for s in sizes)
        weights: list[FloatArray] = []
        biases: list[FloatArray] = []
        last = len(sizes) - 2
        for i in range(len(sizes) - 1):
            fan_in, fan_out = sizes[i], sizes[i + 1]
            if i == last and zero_output:
                w = np.zeros((fan_out, fan_in))
            else:
                scale = hidden_scale if hidden_scale is not None else 1.0 / np.sqrt(fan_in)
                w = rng.normal(0.0, scale, size=(fan_out, fan_in))
            weights.append(w)
            biases.append(np.zeros(fan_out))
        if output_bias is not None:
            biases[-1] = np.array(output_bias, dtype=np.float64)
        return cls(sizes=sizes, weights=weights, biases=biases)

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    @property
    def output_dim(self) -> int:
        return self.sizes[-1]

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases, strict=True))

    def flatten(self) -> FloatArray:
        parts = []
        for w, b in zip(self.weights, self.biases, strict=True):
            parts.extend([w.ravel(), b])
        return np.concatenate(parts)

    def assign(self, flat: FloatArray) -> None:
        """Overwrite all parameters from a flat vector."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.num_params,):
            raise InvalidParameterError(f"expected {self.num_params} parameters, got {flat.shape}")
        offset = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            self.weights[i] = flat[offset : offset + w.size].reshape(w.shape).copy()
            offset += w.size
            self.biases[i] = flat[offset : offset + b.size].copy()
            offset += b.size

    def copy(self) -> MlpParams:
        return MlpParams(
            sizes=self.sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class Activations:
    """Per-layer inputs recorded by :func:`mlp_forward` for backprop."""

    layer_inputs: list[FloatArray] = field(default_factory=list)
    batched: bool = False


def mlp_forward(params: MlpParams, x: FloatArray) -> tuple[FloatArray, Activations]:
    """Forward pass; returns the output and the recorded activations."""
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    h = x if batched else x[None, :]
    if h.shape[1] != params.input_dim:
        raise InvalidParameterError(f"network expects {params.input_dim} inputs, got {h.shape[1]}")
    acts = Activations(batched=batched)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases, strict=True)):
        acts.layer_inputs.append(h)
        z = h @ w.T + b
        h = z if i == last else np.tanh(z)
    return (h if batched else h[0]), acts


def mlp_backward(
    params: MlpParams, acts: Activations, output_grad: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Reverse accumulation of ``output_grad`` through the network.

    Returns:
        The flat parameter gradient (summed over the batch) and the gradient
        with respect to the input, shaped like the forward input.
    """
    g = np.asarray(output_grad, dtype=np.float64)
    g = g if acts.batched else g[None, :]
    grads_w: list[FloatArray] = [np.empty(0)] * len(params.weights)
    grads_b: list[FloatArray] = [np.empty(0)] * len(params.weights)
    for i in range(len(params.weights) - 1, -1, -1):
        h_in = acts.layer_inputs[i]
        grads_w[i] = g.T @ h_in
        grads_b[i] = g.sum(axis=0)
        g = g @ params.weights[i]
        if i > 0:
            # h_in = tanh(z) of the previous layer
            g = g * (1.0 - h_in * h_in)
    flat = np.concatenate(
        [part for pair in zip(grads_w, grads_b, strict=True) for part in (pair[0].ravel(), pair[1])]
    )
    return flat, (g if acts.batched else g[0])


def mlp_jacobian(params: MlpParams, x: FloatArray, rows: Sequence[int] | None = None) -> FloatArray:
    """Jacobian of selected outputs with respect to the flat parameters at one input."""
    _, acts = mlp_forward(params, x)
    selected = range(params.output_dim) if rows is None else rows
    jac = np.zeros((len(selected), params.num_params))
    for k, row in enumerate(selected):
        unit = np.zeros(params.output_dim)
        unit[row] = 1.0
        jac[k], _ = mlp_backward(params, acts, unit)
    return jac
