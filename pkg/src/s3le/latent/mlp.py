"""Minimal fully-connected network substrate with hand-derived gradients.

Networks are affine->tanh stacks with a linear output layer, stored as raw
numpy arrays. Backpropagation is written out explicitly so every training
loss can be checked against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MLPParams:
    """Layer weights (fan_in, fan_out) and biases (fan_out,); forward is x @ W + b."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def copy(self) -> "MLPParams":
        return MLPParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_mlp(rng: np.random.Generator, sizes: list[int]) -> MLPParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MLPParams(weights, biases)


def zeros_like_params(p: MLPParams) -> MLPParams:
    return MLPParams([np.zeros_like(w) for w in p.weights], [np.zeros_like(b) for b in p.biases])


def add_scaled(target: MLPParams, grads: MLPParams, scale: float) -> None:
    """In-place target += scale * grads (used both for SGD steps and grad sums)."""
    for tw, gw in zip(target.weights, grads.weights):
        tw += scale * gw
    for tb, gb in zip(target.biases, grads.biases):
        tb += scale * gb


def params_finite(p: MLPParams) -> bool:
    return all(np.all(np.isfinite(w)) for w in p.weights) and all(
        np.all(np.isfinite(b)) for b in p.biases
    )


def _check_input(p: MLPParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != p.weights[0].shape[0]:
        raise ValueError(
            f"input has shape {X.shape}, network expects (*, {p.weights[0].shape[0]})"
        )
    return X


def mlp_forward(p: MLPParams, X) -> np.ndarray:
    """Deterministic forward pass; accepts (d,) or (n, d), returns matching rank."""
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    out, _ = mlp_forward_cached(p, X[None, :] if squeeze else X)
    return out[0] if squeeze else out


def mlp_forward_cached(p: MLPParams, X: np.ndarray):
    """Forward pass keeping layer activations for the backward pass."""
    X = _check_input(p, X)
    acts = [X]
    h = X
    last = len(p.weights) - 1
    for i, (W, b) in enumerate(zip(p.weights, p.biases)):
        h = h @ W + b
        if i < last:
            h = np.tanh(h)
        acts.append(h)
    return h, acts


def mlp_backward(p: MLPParams, acts: list[np.ndarray], d_out: np.ndarray):
    """Gradients of a scalar loss given d(loss)/d(output).

    Returns (grads: MLPParams-shaped, d_input). No batch scaling is applied
    here; the loss-level code bakes its 1/N factors into d_out.
    """
    grads = zeros_like_params(p)
    da = np.asarray(d_out, dtype=np.float64)
    last = len(p.weights) - 1
    for i in range(last, -1, -1):
        if i < last:
            da = da * (1.0 - acts[i + 1] ** 2)  # through tanh
        grads.weights[i][...] = acts[i].T @ da
        grads.biases[i][...] = da.sum(axis=0)
        da = da @ p.weights[i].T
    return grads, da
