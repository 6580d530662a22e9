"""Residuals of the coupled generalized NLS system in real/imaginary form.

With h1 = u1 + i v1 and h2 = u2 + i v2 the system

    i h_jt + h_jxx + 2 (alpha|h1|^2 + beta|h2|^2 + gamma h1 h2* + gamma* h2 h1*) h_j = 0

splits into four real equations. The bracket is real; it is written G below.
The inverse problem replaces the unit dispersion and the factor 2 by trainable
lambda_1..lambda_4 with alpha = beta = gamma = 1.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import UsageError
from .net import Jet2


@dataclass(frozen=True)
class CGNLSCoefficients:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: complex = 1.0

    def as_array(self) -> np.ndarray:
        g = complex(self.gamma)
        return np.array([self.alpha, self.beta, g.real, g.imag], dtype=np.float64)


@dataclass(frozen=True)
class LambdaVector:
    l1: float
    l2: float
    l3: float
    l4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.l1, self.l2, self.l3, self.l4], dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "LambdaVector":
        a = [float(v) for v in np.asarray(arr).ravel()]
        if len(a) != 4:
            raise UsageError(f"need 4 lambda values, got {len(a)}")
        return cls(*a)


class ResidualVector(NamedTuple):
    f1u: float
    f1v: float
    f2u: float
    f2v: float


# the inverse problem fixes alpha = beta = gamma = 1
UNIT_COEFFICIENTS = CGNLSCoefficients(1.0, 1.0, 1.0)

# (dispersion d1, d2), (nonlinearity n1, n2) reproducing the forward system
FORWARD_SCALES = ((1.0, 1.0), (2.0, 2.0))


def lambda_scales(lam: LambdaVector) -> tuple[tuple[float, float], tuple[float, float]]:
    return (lam.l1, lam.l3), (lam.l2, lam.l4)


def coupling_term(u1, v1, u2, v2, c: CGNLSCoefficients):
    """The real coupling G; works elementwise on arrays."""
    g = complex(c.gamma)
    return (
        c.alpha * (u1 * u1 + v1 * v1)
        + c.beta * (u2 * u2 + v2 * v2)
        + 2.0 * g.real * (u1 * u2 + v1 * v2)
        - 2.0 * g.imag * (v1 * u2 - u1 * v2)
    )


def _jets_to_streams(jets: Sequence[Jet2]) -> np.ndarray:
    if len(jets) != 4:
        raise UsageError(f"need jets for (u1, v1, u2, v2), got {len(jets)}")
    Y = np.empty((4, 1, 4))
    for k, j in enumerate(jets):
        Y[:, 0, k] = (j.value, j.d_t, j.d_x, j.d_xx)
    return Y


def residual_field(Y: np.ndarray, c: CGNLSCoefficients, disp=(1.0, 1.0), nonl=(2.0, 2.0)) -> np.ndarray:
    """Residuals (N, 4) from output jets ``Y`` of shape (4, N, 4)."""
    return kernels.residual_forward(np.ascontiguousarray(Y, dtype=np.float64), disp, nonl, c.as_array())


def forward_residual(jets: Sequence[Jet2], c: CGNLSCoefficients) -> ResidualVector:
    disp, nonl = FORWARD_SCALES
    F = residual_field(_jets_to_streams(jets), c, disp, nonl)
    return ResidualVector(*(float(v) for v in F[0]))


def inverse_residual(jets: Sequence[Jet2], lam: LambdaVector) -> ResidualVector:
    disp, nonl = lambda_scales(lam)
    F = residual_field(_jets_to_streams(jets), UNIT_COEFFICIENTS, disp, nonl)
    return ResidualVector(*(float(v) for v in F[0]))


def residual_scores(F: np.ndarray) -> np.ndarray:
    """Per-point score |f1u| + |f1v| + |f2u| + |f2v|."""
    return np.abs(np.asarray(F, dtype=np.float64)).sum(axis=-1)


def mean_residual(residuals) -> float:
    """Mean over points of the summed absolute residual components."""
    F = np.asarray(residuals, dtype=np.float64)
    if F.size == 0:
        raise UsageError("mean_residual needs at least one residual vector")
    F = F.reshape(-1, 4)
    return float(residual_scores(F).mean())
