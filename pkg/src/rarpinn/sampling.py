"""Space-time domains, Latin hypercube designs and greedy residual selection."""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import ConfigurationError, UsageError
from .physics import residual_scores


@dataclass(frozen=True)
class Domain:
    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.t_lo < self.t_hi):
            raise ConfigurationError(f"empty domain {self}")

    @property
    def bounds(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (self.x_lo, self.x_hi), (self.t_lo, self.t_hi)


@dataclass(frozen=True)
class RARConfig:
    """Residual-based adaptive refinement settings.

    ``refit_iterations`` is the number of Adam steps run after each batch of
    added points.
    """

    m: int = 5
    epsilon0: float = 0.01
    max_rounds: int = 2
    candidate_pool: int = 10000
    refit_iterations: int = 1000

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError("RAR m must be >= 1")
        if not self.epsilon0 > 0:
            raise ConfigurationError("RAR epsilon0 must be > 0")
        if self.max_rounds < 0 or self.refit_iterations < 0:
            raise ConfigurationError("RAR rounds and refit iterations must be >= 0")
        if self.candidate_pool < self.m:
            raise ConfigurationError("candidate_pool must be >= m")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def lhs_sample(domain: Domain, n: int, seed) -> np.ndarray:
    """``n`` Latin hypercube points in the domain as an (n, 2) array of (x, t).

    Each of the n equal-width strata along x, and along t, holds exactly one
    point.
    """
    if n < 1:
        raise UsageError("lhs_sample needs n >= 1")
    unit = qmc.LatinHypercube(d=2, rng=_rng(seed)).random(n)
    lo = np.array([domain.x_lo, domain.t_lo])
    hi = np.array([domain.x_hi, domain.t_hi])
    pts = lo + unit * (hi - lo)
    # guard against rounding onto the closed upper edge
    return np.minimum(pts, np.nextafter(hi, lo))


def uniform_sample(domain: Domain, n: int, seed) -> np.ndarray:
    rng = _rng(seed)
    return np.column_stack([
        rng.uniform(domain.x_lo, domain.x_hi, n),
        rng.uniform(domain.t_lo, domain.t_hi, n),
    ])


def top_m_indices(scores, m: int) -> np.ndarray:
    """Indices of the ``m`` largest scores, ties broken by lower index.

    Returned in descending score order.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if m > scores.size:
        raise UsageError(f"cannot select {m} points from a pool of {scores.size}")
    if m < 1:
        raise UsageError("m must be >= 1")
    # stable sort on the negated scores keeps earlier indices first among ties
    order = np.argsort(-scores, kind="stable")
    return order[:m]


def rar_select(
    residual_at: Callable[[np.ndarray], np.ndarray],
    pool: np.ndarray,
    m: int,
) -> np.ndarray:
    """The ``m`` pool points with the largest summed absolute residual.

    ``residual_at`` maps an (N, 2) array of points to (N, 4) residuals.
    """
    pool = np.asarray(pool, dtype=np.float64)
    if m > len(pool):
        raise UsageError(f"cannot select {m} points from a pool of {len(pool)}")
    scores = residual_scores(residual_at(pool))
    return pool[top_m_indices(scores, m)]
