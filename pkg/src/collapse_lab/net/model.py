"""MLP assembly, parameter plumbing, and versioned JSON checkpoints.

The model is a chain of hidden blocks (dense -> optional normalization ->
activation) feeding a final dense classifier. Normalization choices:
'bn' (plain), 'psbn' (constant positive output shift alpha), 'none'.
"Boundary" k names the hidden representation produced by block k; collapse
detection and FLOPS accounting key off boundaries.

Checkpoints serialize layer shapes, flat parameter arrays, running stats,
and the training RNG state; reloading at a round boundary resumes training
bit-exactly (momentum buffers start empty each round by design, so they
are not part of the state).
"""

from __future__ import annotations

import copy
import json
import math

import numpy as np

from ..errors import ConfigError, DivergenceError
from ..sparsity import COLLAPSE_THRESHOLD
from .layers import BatchNorm, Dense, LeakyReLU, ReLU, accuracy, softmax_cross_entropy

__all__ = ["MLP", "save_checkpoint", "load_checkpoint", "pruned_copy"]

NORMS = ("bn", "psbn", "none")
ACTIVATIONS = ("relu", "leaky")

CHECKPOINT_VERSION = 1


class MLP:
    def __init__(self, arch: dict, blocks: list):
        self.arch = arch
        self.blocks = blocks

    @classmethod
    def build(
        cls,
        in_dim: int,
        classes: int,
        hidden_width: int = 128,
        hidden_layers: int = 3,
        norm: str = "bn",
        activation: str = "relu",
        alpha: float = 0.0,
        gamma_init: float = 1.0,
        rng: np.random.Generator | None = None,
    ) -> "MLP":
        if norm not in NORMS:
            raise ConfigError(f"norm must be one of {NORMS}, got {norm!r}")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
        if norm == "psbn" and not alpha > 0:
            raise ConfigError("norm 'psbn' requires alpha > 0")
        if norm != "psbn" and alpha != 0:
            raise ConfigError(f"alpha is only meaningful with norm 'psbn', got alpha={alpha}")
        if hidden_layers < 1 or hidden_width < 1:
            raise ConfigError("hidden_layers and hidden_width must be >= 1")
        rng = rng or np.random.default_rng(0)
        blocks: list = []
        prev = in_dim
        for _ in range(hidden_layers):
            blocks.append(Dense(prev, hidden_width, rng))
            if norm != "none":
                blocks.append(BatchNorm(hidden_width, gamma_init, alpha if norm == "psbn" else 0.0))
            blocks.append(ReLU() if activation == "relu" else LeakyReLU())
            prev = hidden_width
        blocks.append(Dense(prev, classes, rng))
        arch = {
            "in_dim": int(in_dim),
            "classes": int(classes),
            "hidden_width": int(hidden_width),
            "hidden_layers": int(hidden_layers),
            "norm": norm,
            "activation": activation,
            "alpha": float(alpha),
            "gamma_init": float(gamma_init),
        }
        return cls(arch, blocks)

    def forward(self, x: np.ndarray, mode: str = "eval") -> np.ndarray:
        for block in self.blocks:
            x = block.forward(x, mode)
        return x

    def loss_and_grad(self, x: np.ndarray, labels: np.ndarray):
        """Train-mode forward, cross-entropy, full backward. Returns (loss, logits)."""
        logits = self.forward(x, "train")
        loss, grad, _ = softmax_cross_entropy(logits, labels)
        if not math.isfinite(loss):
            raise DivergenceError(f"non-finite loss {loss}")
        for block in reversed(self.blocks):
            grad = block.backward(grad)
        return loss, logits

    def evaluate(self, x: np.ndarray, labels: np.ndarray):
        """Eval-mode (loss, accuracy) without touching any state."""
        logits = self.forward(x, "eval")
        loss, _, _ = softmax_cross_entropy(logits, labels)
        return loss, accuracy(logits, labels)

    def param_refs(self):
        """Fresh (key, value_array, grad_array) triples; values update in place."""
        for i, block in enumerate(self.blocks):
            yield from block.param_refs(f"b{i}")

    # structure accessors for sparsity accounting

    def dense_blocks(self) -> list[Dense]:
        return [b for b in self.blocks if isinstance(b, Dense)]

    def chain_sizes(self) -> list[tuple[int, int]]:
        return [(d.w.shape[0], d.w.shape[1]) for d in self.dense_blocks()]

    def norm_blocks(self) -> list[tuple[int, BatchNorm]]:
        """(boundary_index, layer) for each normalization layer."""
        out = []
        boundary = 0
        for block in self.blocks:
            if isinstance(block, BatchNorm):
                out.append((boundary, block))
            if isinstance(block, (ReLU, LeakyReLU)):
                boundary += 1
        return out

    def unit_scales(self) -> dict[int, np.ndarray]:
        """Per-boundary collapse scales: BN |gamma|, or incoming-weight L1
        for unnormalized stacks (the only shrinking quantity there)."""
        if self.arch["norm"] != "none":
            return {k: np.abs(layer.state.gamma) for k, layer in self.norm_blocks()}
        dense = self.dense_blocks()
        return {k: np.sum(np.abs(d.w), axis=0) for k, d in enumerate(dense[:-1])}

    def filter_matrix(self, boundary: int) -> np.ndarray:
        """Incoming weight vectors of boundary units, one unit per row."""
        return self.dense_blocks()[boundary].w.T

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i, block in enumerate(self.blocks):
            if isinstance(block, Dense):
                out[f"b{i}.w"] = block.w
                out[f"b{i}.b"] = block.b
            elif isinstance(block, BatchNorm):
                out[f"b{i}.gamma"] = block.state.gamma
                out[f"b{i}.beta"] = block.state.beta
                out[f"b{i}.running_mean"] = block.state.running_mean
                out[f"b{i}.running_var"] = block.state.running_var
        return out


def pruned_copy(model: MLP, threshold: float = COLLAPSE_THRESHOLD) -> tuple[MLP, int]:
    """Copy with collapsed units removed from the computation.

    A collapsed unit's gamma and beta are zeroed and the rows it feeds in
    the next dense layer are zeroed, which is the dense-chain equivalent
    of deleting the unit. Returns (pruned model, units pruned).
    """
    pruned = copy.deepcopy(model)
    n_pruned = 0
    dense = pruned.dense_blocks()
    for boundary, scales in pruned.unit_scales().items():
        idx = np.nonzero(scales < threshold)[0]
        if idx.size == 0:
            continue
        n_pruned += int(idx.size)
        for b, layer in pruned.norm_blocks():
            if b == boundary:
                layer.state.gamma[idx] = 0.0
                layer.state.beta[idx] = 0.0
        dense[boundary + 1].w[idx, :] = 0.0
    return pruned, n_pruned


def save_checkpoint(path, model: MLP, rng: np.random.Generator, extra: dict | None = None) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "arch": model.arch,
        "params": {
            key: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for key, arr in model.state_arrays().items()
        },
        "rng_state": rng.bit_generator.state,
        "extra": extra or {},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> tuple[MLP, np.random.Generator, dict]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {payload.get('version')!r}")
    model = MLP.build(**payload["arch"], rng=np.random.default_rng(0))
    arrays = model.state_arrays()
    if set(arrays) != set(payload["params"]):
        raise ConfigError("checkpoint parameter keys do not match the declared architecture")
    for key, arr in arrays.items():
        entry = payload["params"][key]
        data = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if data.shape != arr.shape:
            raise ConfigError(f"checkpoint shape mismatch for {key}: {data.shape} vs {arr.shape}")
        np.copyto(arr, data)
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = payload["rng_state"]
    return model, rng, payload.get("extra", {})
