"""Finite-difference references shared by the test modules."""

import numpy as np

from rarpinn.net import NetworkShape, forward_values, init_params


def fd_network_jets(params, shape, X, h=1e-3):
    """Value, d/dt, d/dx, d2/dx2 of the plain forward pass.

    Fourth-order central stencils keep truncation error far below the test
    tolerance without pushing h into the round-off regime.
    """
    def f(dx, dt):
        return forward_values(params, shape, X + np.array([dx, dt]))

    def d1(k):
        e = np.eye(2)[k] * h
        return (-f(*2 * e) + 8 * f(*e) - 8 * f(*-e) + f(*-2 * e)) / (12 * h)

    f0 = f(0.0, 0.0)
    fxx = (-f(2 * h, 0.0) + 16 * f(h, 0.0) - 30 * f0 + 16 * f(-h, 0.0) - f(-2 * h, 0.0)) / (12 * h * h)
    return np.stack([f0, d1(1), d1(0), fxx])


def fd_gradient(fun, x, h=1e-6, idx=None):
    """Central-difference gradient of a scalar ``fun`` at selected coordinates."""
    idx = range(len(x)) if idx is None else idx
    out = {}
    for i in idx:
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (fun(xp) - fun(xm)) / (2 * h)
    return out


def rel_err(a, b, floor=1e-8):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def random_net(rng, activation="tanh"):
    """1 to 6 hidden layers of width 1 to 32, with or without input scaling."""
    layers = int(rng.integers(1, 7))
    width = int(rng.integers(1, 33))
    bounds = ((-10.0, 10.0), (-2.0, 2.0)) if rng.random() < 0.5 else None
    shape = NetworkShape(layers, width, 4, activation, bounds)
    return shape, init_params(shape, int(rng.integers(2**31)))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
