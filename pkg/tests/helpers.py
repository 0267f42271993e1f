"""Shared numeric checking utilities for the test suite."""

import numpy as np

FD_STEP = 1e-5


def central_diff_grad(f, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Numerical gradient of scalar-valued f at x by central differences."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    base = x.copy()
    for i in range(x.size):
        bumped = base.ravel().copy()
        bumped[i] += step
        up = f(bumped.reshape(x.shape))
        bumped[i] -= 2 * step
        down = f(bumped.reshape(x.shape))
        flat[i] = (up - down) / (2 * step)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Worst relative disagreement between gradients.

    Pairs where both magnitudes sit under ``floor`` are compared
    absolutely against 1e-9 (the finite-difference noise floor makes a
    relative test meaningless there).
    """
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    err = np.abs(analytic - numeric)
    rel = np.where(scale < floor, 0.0, err / np.maximum(scale, 1e-300))
    tiny_bad = (scale < floor) & (err > 1e-9)
    if tiny_bad.any():
        return float("inf")
    return float(rel.max()) if rel.size else 0.0


def assert_grad_matches(f, x: np.ndarray, analytic: np.ndarray, tol: float = 1e-4):
    numeric = central_diff_grad(f, x)
    worst = max_rel_error(analytic, numeric)
    assert worst < tol, f"gradient mismatch: max relative error {worst:.3e} >= {tol}"


def away_from_kinks(rng: np.random.Generator, shape, margin: float = 1e-3) -> np.ndarray:
    """Uniform values in [-1, 1] excluding a band around zero.

    Keeps finite-difference probes away from the kinks of relu-family
    activations.
    """
    x = rng.uniform(-1.0, 1.0, size=shape)
    small = np.abs(x) < margin
    x[small] = np.sign(x[small] + 1e-30) * (margin + np.abs(x[small]))
    return x
