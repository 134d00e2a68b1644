"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np


def bump_oracle(x: float) -> float:
    """Direct scalar transcription of the piecewise cubic bump.

    Kept deliberately independent from the library implementation so the
    two can disagree if either is wrong.
    """
    x = float(x)
    if 0.0 <= x < 1.0:
        return (1.0 / 6.0) * x**3
    if 1.0 <= x < 2.0:
        u = x - 1.0
        return (1.0 / 6.0) * (-3.0 * u**3 + 3.0 * u**2 + 3.0 * u + 1.0)
    if 2.0 <= x < 3.0:
        u = x - 2.0
        return (1.0 / 6.0) * (3.0 * u**3 - 6.0 * u**2 + 4.0)
    if 3.0 <= x < 4.0:
        return (1.0 / 6.0) * (4.0 - x) ** 3
    return 0.0


def fd_param_grad(model, x, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of model.forward(x) in parameters."""
    base = model.param_vector()
    grad = np.empty_like(base)
    for i in range(base.size):
        p = base.copy()
        p[i] = base[i] + h
        model.set_param_vector(p)
        fp = model.forward(x)
        p[i] = base[i] - h
        model.set_param_vector(p)
        fm = model.forward(x)
        grad[i] = (fp - fm) / (2.0 * h)
    model.set_param_vector(base)
    return grad


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray, tol: float):
    """Mixed absolute/relative elementwise agreement check."""
    err = np.abs(analytic - numeric)
    bound = tol * (1.0 + np.abs(numeric))
    worst = float((err - bound).max())
    assert np.all(err <= bound), f"gradient mismatch, worst excess {worst:.3e}"
