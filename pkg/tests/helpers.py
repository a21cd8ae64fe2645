"""Shared test utilities: finite-difference oracles and a CLI runner."""

import os
import subprocess
import sys

import numpy as np

FD_STEP = 1e-3


def fd_grad(loss_fn, arr: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of loss_fn() w.r.t. arr, entry by entry.

    loss_fn takes no arguments and must read arr by reference; the array is
    perturbed in place and restored exactly after each probe.
    """
    out = np.zeros_like(arr)
    flat, grad = arr.ravel(), out.ravel()
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + step
        hi = loss_fn()
        flat[i] = keep - step
        lo = loss_fn()
        flat[i] = keep
        grad[i] = (hi - lo) / (2.0 * step)
    return out


def rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest deviation, normalized by the larger of the two sup-norms.

    The tensor-level norm keeps the measure meaningful where individual
    entries cancel to near zero; a pair of all-zero tensors scores 0.
    """
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / scale)


def run_cli(args, cwd, env=None):
    """Invoke the CLI as a subprocess so exit codes and files are real."""
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "collapse_lab.cli", *map(str, args)],
        cwd=cwd,
        env=full_env,
        capture_output=True,
        text=True,
        timeout=600,
    )


def tree_bytes(root):
    """Map of file name -> raw bytes for every file directly under root."""
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = fh.read()
    return out
