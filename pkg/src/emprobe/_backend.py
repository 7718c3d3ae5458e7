"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
implementation is the fallback. ``EMPROBE_KERNELS`` overrides the choice:

    auto      compiled if built, else python (default)
    compiled  require the extension, raise if missing
    python    force the numpy fallback

The compiled loops win on call overhead while problems are small; above the
work cutoffs the numpy expressions hand the arithmetic to BLAS, which wins
on throughput. ``loss_grad_for`` / ``hessian_for`` apply that routing so
callers never pick a backend by hand. Cutoffs are calibrated with
benchmarks/bench_kernels.py.
"""

from __future__ import annotations

import os

from emprobe import _kernels_py

try:
    from emprobe import _kernels  # compiled extension, absent on pure builds
except ImportError:  # pragma: no cover - depends on how the package was built
    _kernels = None

KERNELS_ENV = "EMPROBE_KERNELS"

# multiply-adds per call: n*d for the gradient pass, n*(d+1)^2 for the Hessian
LOSS_GRAD_WORK_CUTOFF = 20_000
HESSIAN_WORK_CUTOFF = 600_000


def _choice() -> str:
    mode = os.environ.get(KERNELS_ENV, "auto").strip().lower() or "auto"
    if mode not in ("auto", "compiled", "python"):
        raise ValueError(f"{KERNELS_ENV} must be auto, compiled or python, got {mode!r}")
    if mode == "compiled" and _kernels is None:
        raise ImportError("EMPROBE_KERNELS=compiled but emprobe._kernels is not built")
    return mode


def active():
    """The module implementing the kernels for the current configuration."""
    mode = _choice()
    if mode == "python" or _kernels is None:
        return _kernels_py
    return _kernels


def name() -> str:
    return active().NAME


def loss_grad_for(n: int, d: int):
    """Pick the logistic_loss_grad implementation for an n x d problem."""
    mod = active()
    if mod is not _kernels_py and n * d > LOSS_GRAD_WORK_CUTOFF:
        return _kernels_py.logistic_loss_grad
    return mod.logistic_loss_grad


def hessian_for(n: int, d: int):
    """Pick the logistic_hessian implementation for an n x d problem."""
    mod = active()
    if mod is not _kernels_py and n * (d + 1) ** 2 > HESSIAN_WORK_CUTOFF:
        return _kernels_py.logistic_hessian
    return mod.logistic_hessian
