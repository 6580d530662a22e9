"""Fully connected network with second-order input jets.

Inputs are (x, t); every layer carries four streams per point: the value
and its derivatives d/dt, d/dx and d2/dx2. Parameter gradients of any scalar
function of those streams are obtained by reverse accumulation through the
same layers (:func:`jet_backward`).
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, NumericError, UsageError


class Jet2(NamedTuple):
    """Value of one network output and its d/dt, d/dx, d2/dx2."""

    value: float
    d_t: float
    d_x: float
    d_xx: float


class Point(NamedTuple):
    x: float
    t: float


@dataclass(frozen=True)
class NetworkShape:
    """Architecture of the surrogate.

    ``input_bounds`` optionally maps x and t affinely onto [-1, 1] before the
    first layer, ``((x_lo, x_hi), (t_lo, t_hi))``. The map is fixed, not
    trained, and the jets account for it.
    """

    hidden_layers: int
    hidden_width: int
    output_dim: int = 4
    activation: str = "tanh"
    input_bounds: tuple[tuple[float, float], tuple[float, float]] | None = None
    input_dim: int = 2

    def __post_init__(self):
        if self.input_dim != 2:
            raise ConfigurationError(f"input_dim must be 2, got {self.input_dim}")
        if self.output_dim < 2 or self.output_dim % 2:
            raise ConfigurationError(f"output_dim must be even and >= 2, got {self.output_dim}")
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise ConfigurationError("hidden_layers and hidden_width must be >= 1")
        if self.activation not in kernels.ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if self.input_bounds is not None:
            (xl, xh), (tl, th) = self.input_bounds
            if not (xl < xh and tl < th):
                raise ConfigurationError(f"degenerate input_bounds {self.input_bounds}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]

    @property
    def n_params(self) -> int:
        sizes = self.layer_sizes
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))

    def layout(self) -> list[tuple[slice, slice, int, int]]:
        """Offset table: (weight slice, bias slice, fan_in, fan_out) per layer.

        Weights are stored row-major as a (fan_in, fan_out) matrix followed by
        the bias vector of that layer.
        """
        out = []
        off = 0
        sizes = self.layer_sizes
        for fi, fo in zip(sizes[:-1], sizes[1:]):
            w = slice(off, off + fi * fo)
            off += fi * fo
            b = slice(off, off + fo)
            off += fo
            out.append((w, b, fi, fo))
        return out

    def input_affine(self) -> tuple[np.ndarray, np.ndarray]:
        """Scale and shift applied to (x, t) before the first layer."""
        if self.input_bounds is None:
            return np.ones(2), np.zeros(2)
        (xl, xh), (tl, th) = self.input_bounds
        scale = np.array([2.0 / (xh - xl), 2.0 / (th - tl)])
        shift = np.array([-1.0 - xl * scale[0], -1.0 - tl * scale[1]])
        return scale, shift


def init_params(shape: NetworkShape, seed: int) -> np.ndarray:
    """Glorot-uniform weights and zero biases, deterministic in ``seed``."""
    if not isinstance(shape, NetworkShape):
        raise ConfigurationError("shape must be a NetworkShape")
    rng = np.random.default_rng(seed)
    params = np.zeros(shape.n_params)
    for w, _, fi, fo in shape.layout():
        bound = np.sqrt(6.0 / (fi + fo))
        params[w] = rng.uniform(-bound, bound, size=fi * fo)
    return params


def _unpack(params: np.ndarray, shape: NetworkShape):
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1 or params.size != shape.n_params:
        raise UsageError(f"expected {shape.n_params} parameters, got {params.shape}")
    return [
        (params[w].reshape(fi, fo), params[b]) for w, b, fi, fo in shape.layout()
    ]


def _as_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, 2)
    if X.ndim != 2 or X.shape[1] != 2:
        raise UsageError(f"points must have shape (N, 2), got {X.shape}")
    return X


class JetWorkspace:
    """Stream buffers reused across jet passes over batches of one size.

    Freshly allocated multi-megabyte arrays cost a page fault per page on
    first touch, which dominates small-network passes. Arrays returned by a
    pass that used a workspace (outputs and cache) are overwritten by the
    next pass through the same workspace.
    """

    def __init__(self):
        self._bufs: dict = {}

    def get(self, key, shape: tuple) -> np.ndarray:
        arr = self._bufs.get(key)
        if arr is None or arr.shape != shape:
            arr = np.empty(shape)
            self._bufs[key] = arr
        return arr


def _buffer(ws: JetWorkspace | None, key, shape: tuple) -> np.ndarray:
    return np.empty(shape) if ws is None else ws.get(key, shape)


def _input_streams(shape: NetworkShape, X: np.ndarray, ws: JetWorkspace | None = None) -> np.ndarray:
    scale, shift = shape.input_affine()
    S = _buffer(ws, "input", (4, X.shape[0], 2))
    S[1:] = 0.0
    S[kernels.VALUE] = X * scale + shift
    S[kernels.DT, :, 1] = scale[1]
    S[kernels.DX, :, 0] = scale[0]
    return S


def _linear(S: np.ndarray, W: np.ndarray, b: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    n, fi = S.shape[1], S.shape[2]
    Z = np.empty((4, n, W.shape[1])) if out is None else out
    # value stream multiplied on its own so a value-only pass is bit-identical
    np.matmul(S[0], W, out=Z[0])
    Z[0] += b
    np.matmul(S[1:].reshape(3 * n, fi), W, out=Z[1:].reshape(3 * n, W.shape[1]))
    return Z


class JetCache(NamedTuple):
    inputs: list  # stream array entering each layer
    preacts: list  # pre-activation streams of each hidden layer


def jet_forward(
    params: np.ndarray, shape: NetworkShape, X, workspace: JetWorkspace | None = None
) -> tuple[np.ndarray, JetCache]:
    """Evaluate output jets at a batch of points.

    Returns ``Y`` of shape (4, N, output_dim) and a cache for
    :func:`jet_backward`. Raises :class:`NumericError` naming the first
    layer whose output is non-finite.
    """
    layers = _unpack(params, shape)
    X = _as_points(X)
    n = X.shape[0]
    S = _input_streams(shape, X, workspace)
    inputs, preacts = [], []
    last = len(layers) - 1
    for idx, (W, b) in enumerate(layers):
        inputs.append(S)
        Z = _linear(S, W, b, _buffer(workspace, ("z", idx), (4, n, W.shape[1])))
        if idx == last:
            S = Z
        else:
            preacts.append(Z)
            S = kernels.jet_activation_forward(
                shape.activation, Z, _buffer(workspace, ("a", idx), Z.shape)
            )
    if not np.isfinite(S).all():
        _raise_nonfinite(inputs[1:] + [S])
    return S, JetCache(inputs, preacts)


def _raise_nonfinite(stages):
    for idx, arr in enumerate(stages):
        if not np.isfinite(arr).all():
            raise NumericError(f"non-finite activation in layer {idx}", where=idx)
    raise NumericError("non-finite network output", where=len(stages) - 1)


def jet_backward(
    params: np.ndarray,
    shape: NetworkShape,
    cache: JetCache,
    GY: np.ndarray,
    workspace: JetWorkspace | None = None,
) -> np.ndarray:
    """Reverse pass: parameter gradient of ``sum(GY * Y)``.

    ``GY`` has the shape of the ``Y`` returned by :func:`jet_forward`.
    """
    layers = _unpack(params, shape)
    grad = np.zeros(shape.n_params)
    G = np.ascontiguousarray(GY, dtype=np.float64)
    layout = shape.layout()
    for idx in range(len(layers) - 1, -1, -1):
        W, _ = layers[idx]
        w_sl, b_sl, fi, fo = layout[idx]
        S = cache.inputs[idx]
        n = S.shape[1]
        G2 = G.reshape(4 * n, fo)
        np.matmul(S.reshape(4 * n, fi).T, G2, out=grad[w_sl].reshape(fi, fo))
        grad[b_sl] = G[0].sum(axis=0)
        if idx == 0:
            break
        GS = _buffer(workspace, ("gs", idx), (4, n, fi))
        np.matmul(G2, W.T, out=GS.reshape(4 * n, fi))
        Z = cache.preacts[idx - 1]
        G = kernels.jet_activation_backward(
            shape.activation, Z, S, GS, _buffer(workspace, ("gz", idx), (4, n, fi))
        )
    return grad


def forward_values(params: np.ndarray, shape: NetworkShape, X) -> np.ndarray:
    """Plain forward pass, outputs only, shape (N, output_dim)."""
    layers = _unpack(params, shape)
    X = _as_points(X)
    scale, shift = shape.input_affine()
    a = X * scale + shift
    last = len(layers) - 1
    for idx, (W, b) in enumerate(layers):
        z = np.matmul(a, W)
        z += b
        a = z if idx == last else kernels.activation_value(shape.activation, z)
    return a


def forward_jet(params: np.ndarray, shape: NetworkShape, p: Point | Sequence[float]) -> list[Jet2]:
    """Jets of every output at a single point."""
    Y, _ = jet_forward(params, shape, np.array([[p[0], p[1]]], dtype=np.float64))
    return [Jet2(*(float(v) for v in Y[:, 0, k])) for k in range(shape.output_dim)]


def grad_params(params: np.ndarray, loss: Callable[[np.ndarray], tuple]) -> np.ndarray:
    """Gradient of a scalar loss over the flat parameter vector.

    ``loss(params)`` returns ``(value, gradient, ...)``; network-based losses
    compute the gradient with :func:`jet_backward`. The gradient is checked
    for layout and finiteness.
    """
    params = np.asarray(params, dtype=np.float64)
    out = loss(params)
    value, grad = out[0], np.asarray(out[1], dtype=np.float64)
    if not np.isfinite(value):
        raise NumericError(f"non-finite loss {value}")
    if grad.shape != params.shape:
        raise UsageError(f"gradient shape {grad.shape} does not match params {params.shape}")
    if not np.isfinite(grad).all():
        raise NumericError("non-finite gradient")
    return grad
