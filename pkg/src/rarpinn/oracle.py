"""Closed-form bright vector one- and two-soliton solutions.

Both solutions come from the Hirota bilinear form of the coupled generalized
NLS system. Evaluation is vectorised over x and t and rescaled so that the
exponentials never overflow on the domains of interest.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigurationError
from .physics import FORWARD_SCALES, CGNLSCoefficients, residual_field


@dataclass(frozen=True)
class OneSolitonSpec:
    a: complex = 1.0
    b: complex = 2.0
    k: complex = 1.5 + 1.0j
    coeffs: CGNLSCoefficients = field(default_factory=CGNLSCoefficients)

    def __post_init__(self):
        if complex(self.k).real == 0.0:
            raise ConfigurationError("Re(k) must be nonzero")
        if complex(self.a) == 0:
            raise ConfigurationError("a must be nonzero")
        if self.exp_c == 0:
            raise ConfigurationError("e^c vanishes; the soliton is undefined")

    @property
    def exp_c(self) -> complex:
        a, b, k = complex(self.a), complex(self.b), complex(self.k)
        c = self.coeffs
        g = complex(c.gamma)
        num = (
            abs(a) ** 2 * c.alpha
            + abs(b) ** 2 * c.beta
            + a * b.conjugate() * g
            + a.conjugate() * b * g.conjugate()
        )
        return num / (k + k.conjugate()) ** 2

    @property
    def c(self) -> complex:
        return complex(np.log(complex(self.exp_c)))


@dataclass(frozen=True)
class TwoSolitonSpec:
    k1: complex = 1.0 + 1.0j
    k2: complex = 2.0 - 1.0j
    xi11: complex = 1.0  # soliton 1, component 1
    xi12: complex = 1.0  # soliton 1, component 2
    xi21: complex = 1.0  # soliton 2, component 1
    xi22: complex = 1.0  # soliton 2, component 2
    coeffs: CGNLSCoefficients = field(default_factory=lambda: CGNLSCoefficients(2.0, 2.0, 0.5 + 0.5j))

    def __post_init__(self):
        k1, k2 = complex(self.k1), complex(self.k2)
        if k1.real == 0.0:
            raise ConfigurationError("Re(k1) must be nonzero")
        if k2.real == 0.0:
            raise ConfigurationError("Re(k2) must be nonzero")
        if k1 + k2.conjugate() == 0:
            raise ConfigurationError("k1 + conj(k2) must be nonzero")
        if k1 == k2:
            raise ConfigurationError("k1 and k2 must differ")

    def xi(self, m: int, j: int) -> complex:
        """Polarization of soliton ``m`` in component ``j`` (both 1-based)."""
        return complex({(1, 1): self.xi11, (1, 2): self.xi12, (2, 1): self.xi21, (2, 2): self.xi22}[(m, j)])

    def k(self, m: int) -> complex:
        return complex(self.k1 if m == 1 else self.k2)


def phi_mn(spec: TwoSolitonSpec, m: int, n: int) -> complex:
    """Coupling constant phi_mn, already divided by k_m + conj(k_n)."""
    if m not in (1, 2) or n not in (1, 2):
        raise ConfigurationError(f"phi indices must be 1 or 2, got ({m}, {n})")
    den = spec.k(m) + spec.k(n).conjugate()
    if den == 0:
        raise ConfigurationError(f"k{m} + conj(k{n}) vanishes")
    c = spec.coeffs
    g = complex(c.gamma)
    a1, a2 = spec.xi(m, 1), spec.xi(m, 2)
    b1, b2 = spec.xi(n, 1).conjugate(), spec.xi(n, 2).conjugate()
    num = c.alpha * a1 * b1 + c.beta * a2 * b2 + g * a1 * b2 + g.conjugate() * a2 * b1
    return num / den


class TwoSolitonConstants(NamedTuple):
    e_delta0: complex
    e_r1: complex
    e_r2: complex
    e_r3: complex
    e_delta1: tuple[complex, complex]  # by component
    e_delta2: tuple[complex, complex]


def two_soliton_constants(spec: TwoSolitonSpec) -> TwoSolitonConstants:
    k1, k2 = spec.k(1), spec.k(2)
    p11, p12 = phi_mn(spec, 1, 1), phi_mn(spec, 1, 2)
    p21, p22 = phi_mn(spec, 2, 1), phi_mn(spec, 2, 2)
    k1k1 = k1 + k1.conjugate()
    k2k2 = k2 + k2.conjugate()
    k1k2 = k1 + k2.conjugate()
    k2k1 = k2 + k1.conjugate()
    e_r3 = abs(k1 - k2) ** 2 * (p11 * p22 - p12 * p21) / (k1k1 * k2k2 * abs(k1k2) ** 2)
    d1 = tuple(
        (k1 - k2) * (spec.xi(1, j) * p21 - spec.xi(2, j) * p11) / (k1k1 * k2k1) for j in (1, 2)
    )
    d2 = tuple(
        (k2 - k1) * (spec.xi(2, j) * p12 - spec.xi(1, j) * p22) / (k2k2 * k1k2) for j in (1, 2)
    )
    return TwoSolitonConstants(p12 / k1k2, p11 / k1k1, p22 / k2k2, e_r3, d1, d2)


def _real(v) -> np.ndarray:
    # extended-precision inputs stay extended (used by the finite-difference check)
    v = np.asarray(v)
    return v if v.dtype == np.longdouble else v.astype(np.float64)


def one_soliton(spec: OneSolitonSpec, x, t) -> tuple[np.ndarray, np.ndarray]:
    """(h1, h2) of the one-soliton at points (x, t); arrays broadcast."""
    x = _real(x)
    t = _real(t)
    k = complex(spec.k)
    theta = k * x + 1j * k * k * t
    # a e^theta / (1 + E e^(2 theta_R)) rewritten to avoid overflow
    h1 = complex(spec.a) * np.exp(1j * theta.imag) / (np.exp(-theta.real) + spec.exp_c * np.exp(theta.real))
    h2 = (complex(spec.b) / complex(spec.a)) * h1
    return h1, h2


def two_soliton(spec: TwoSolitonSpec, x, t, constants: TwoSolitonConstants | None = None):
    """(h1, h2) of the two-soliton at points (x, t); arrays broadcast."""
    cst = constants or two_soliton_constants(spec)
    x = _real(x)
    t = _real(t)
    k1, k2 = spec.k(1), spec.k(2)
    eta1 = k1 * (x + 1j * k1 * t)
    eta2 = k2 * (x + 1j * k2 * t)
    r1, r2 = eta1.real, eta2.real
    # common scale: largest real exponent among the denominator terms
    s = np.maximum.reduce([np.zeros_like(r1), 2 * r1, 2 * r2, r1 + r2, 2 * r1 + 2 * r2])

    def ex(z):
        return np.exp(z - s)

    e1 = ex(eta1)
    e2 = ex(eta2)
    e11 = ex(2 * r1 + eta2)  # eta1 + eta1* + eta2
    e22 = ex(eta1 + 2 * r2)  # eta1 + eta2 + eta2*
    den = (
        np.exp(-s)
        + cst.e_r1 * ex(2 * r1)
        + cst.e_delta0 * ex(eta1 + np.conj(eta2))
        + np.conj(cst.e_delta0) * ex(np.conj(eta1) + eta2)
        + cst.e_r2 * ex(2 * r2)
        + cst.e_r3 * ex(2 * r1 + 2 * r2)
    )
    hs = []
    for j in (1, 2):
        num = (
            spec.xi(1, j) * e1
            + spec.xi(2, j) * e2
            + cst.e_delta1[j - 1] * e11
            + cst.e_delta2[j - 1] * e22
        )
        hs.append(num / den)
    return hs[0], hs[1]


Solution = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def as_solution(spec) -> Solution:
    """Bind an oracle spec into a field function ``f(x, t) -> (h1, h2)``."""
    if isinstance(spec, OneSolitonSpec):
        return lambda x, t: one_soliton(spec, x, t)
    if isinstance(spec, TwoSolitonSpec):
        cst = two_soliton_constants(spec)
        return lambda x, t: two_soliton(spec, x, t, cst)
    raise ConfigurationError(f"no closed form for {type(spec).__name__}")


def coefficients_of(spec) -> CGNLSCoefficients:
    return spec.coeffs


# ----------------------------------------------------------------------------
# grids and sampling
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    t_min: float
    t_max: float
    nx: int
    nt: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.t_min < self.t_max):
            raise ConfigurationError("grid bounds must satisfy min < max")
        if self.nx < 2 or self.nt < 2:
            raise ConfigurationError("grid needs nx >= 2 and nt >= 2")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.nt)

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.nt - 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    def points(self) -> np.ndarray:
        """(nx*nt, 2) array of (x, t), t-major: x varies fastest."""
        T, X = np.meshgrid(self.t, self.x, indexing="ij")
        return np.column_stack([X.ravel(), T.ravel()])


class FieldSample(NamedTuple):
    x: float
    t: float
    u1: float
    v1: float
    u2: float
    v2: float


def field_columns(solution: Solution, X: np.ndarray) -> np.ndarray:
    """(N, 4) array of u1, v1, u2, v2 at points ``X`` (N, 2)."""
    h1, h2 = solution(X[:, 0], X[:, 1])
    return np.column_stack([h1.real, h1.imag, h2.real, h2.imag])


def sample_grid(solution: Solution, grid: GridSpec) -> np.ndarray:
    """Dataset rows (x, t, u1, v1, u2, v2) on the tensor grid, t-major."""
    X = grid.points()
    return np.column_stack([X, field_columns(solution, X)])


def samples_as_records(rows: np.ndarray) -> list[FieldSample]:
    return [FieldSample(*map(float, r)) for r in rows]


# ----------------------------------------------------------------------------
# finite-difference self-check
# ----------------------------------------------------------------------------


def fd_jets(solution: Solution, X: np.ndarray, h: float) -> np.ndarray:
    """Output jets (4, N, 4) of an oracle by central differences with step h.

    The stencil is evaluated in extended precision so that the second
    difference is not swamped by cancellation at small h.
    """
    X = np.asarray(X, dtype=np.longdouble)
    h = np.longdouble(h)
    x, t = X[:, 0], X[:, 1]
    f0 = field_columns(solution, X)
    fxp = field_columns(solution, np.column_stack([x + h, t]))
    fxm = field_columns(solution, np.column_stack([x - h, t]))
    ftp = field_columns(solution, np.column_stack([x, t + h]))
    ftm = field_columns(solution, np.column_stack([x, t - h]))
    Y = np.empty((4, X.shape[0], 4), dtype=np.longdouble)
    Y[0] = f0
    Y[1] = (ftp - ftm) / (2 * h)
    Y[2] = (fxp - fxm) / (2 * h)
    Y[3] = (fxp - 2 * f0 + fxm) / (h * h)
    return Y.astype(np.float64)


def pde_selfcheck(solution: Solution, coeffs: CGNLSCoefficients, grid: GridSpec, fd_step: float = 1e-5) -> float:
    """Max absolute residual component over interior grid nodes.

    Derivatives of the oracle are taken by central differences with step
    ``fd_step``. The boundary ring of the grid is excluded.
    """
    if fd_step <= 0:
        raise ConfigurationError("fd_step must be positive")
    if grid.nx < 3 or grid.nt < 3:
        raise ConfigurationError("grid has no interior nodes")
    T, Xg = np.meshgrid(grid.t[1:-1], grid.x[1:-1], indexing="ij")
    X = np.column_stack([Xg.ravel(), T.ravel()])
    disp, nonl = FORWARD_SCALES
    F = residual_field(fd_jets(solution, X, fd_step), coeffs, disp, nonl)
    return float(np.abs(F).max())
