"""Full-batch Adam and L-BFGS with a strong-Wolfe line search.

Both minimizers take ``fun(x) -> (f, g, *extra)``. Whatever ``fun`` returns
after ``(f, g)`` is handed to ``callback(iteration, x, f, extra)`` for the
accepted iterate, which is how training code logs its loss breakdown without
re-evaluating.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericError

Fun = Callable[[np.ndarray], tuple]
Callback = Callable[[int, np.ndarray, float, tuple], None]


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 10000

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigurationError("Adam learning rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError("Adam betas must lie in [0, 1)")
        if self.iterations < 0:
            raise ConfigurationError("Adam iterations must be >= 0")


@dataclass(frozen=True)
class LBFGSConfig:
    memory: int = 50
    gtol: float = 1e-9
    ftol: float = float(np.finfo(float).eps)
    max_iter: int = 50000
    c1: float = 1e-4
    c2: float = 0.9
    max_ls: int = 25

    def __post_init__(self):
        if self.memory < 1:
            raise ConfigurationError("L-BFGS memory must be >= 1")
        if not (0 < self.c1 < self.c2 < 1):
            raise ConfigurationError("line search needs 0 < c1 < c2 < 1")
        if self.max_iter < 0:
            raise ConfigurationError("L-BFGS max_iter must be >= 0")


@dataclass(frozen=True)
class OptimizerConfig:
    adam: AdamConfig = field(default_factory=AdamConfig)
    lbfgs: LBFGSConfig = field(default_factory=LBFGSConfig)


@dataclass
class OptimizeResult:
    x: np.ndarray
    f: float
    iterations: int
    status: str
    history: list[float] = field(default_factory=list)
    n_evals: int = 0


def _split(out) -> tuple[float, np.ndarray, tuple]:
    return float(out[0]), np.asarray(out[1], dtype=np.float64), tuple(out[2:])


@dataclass
class AdamState:
    """Moment estimates and step count, so a run can be resumed."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_minimize(
    x0: np.ndarray,
    fun: Fun,
    config: AdamConfig = AdamConfig(),
    callback: Callback | None = None,
    state: AdamState | None = None,
    iterations: int | None = None,
) -> OptimizeResult:
    """Adam with bias correction; history[i] is the loss before step i.

    Passing ``state`` continues from (and updates in place) earlier moment
    estimates, e.g. across refinement rounds.
    """
    x = np.array(x0, dtype=np.float64)
    if state is None:
        state = AdamState.zeros(x.size)
    if state.m.size != x.size:
        raise ConfigurationError("Adam state does not match the parameter vector")
    n_iter = config.iterations if iterations is None else iterations
    b1, b2 = config.beta1, config.beta2
    hist: list[float] = []
    for it in range(n_iter):
        f, g, extra = _split(fun(x))
        if not np.isfinite(f) or not np.isfinite(g).all():
            raise NumericError(f"non-finite loss or gradient at Adam iteration {it}", where=it)
        hist.append(f)
        if callback is not None:
            callback(it, x, f, extra)
        state.step += 1
        state.m *= b1
        state.m += (1 - b1) * g
        state.v *= b2
        state.v += (1 - b2) * g * g
        m_hat = state.m / (1 - b1**state.step)
        v_hat = state.v / (1 - b2**state.step)
        x -= config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
    f_final = hist[-1] if hist else float("nan")
    return OptimizeResult(x, f_final, n_iter, "max_iter", hist, n_iter)


# ---------------------------------------------------------------------------
# strong-Wolfe line search (bracketing + zoom with safeguarded cubic steps)
# ---------------------------------------------------------------------------


def _cubic_min(a, fa, ga, b, fb, gb, lo, hi):
    d1 = ga + gb - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc >= 0:
        d2 = np.sqrt(disc)
        if a <= b:
            t = b - (b - a) * ((gb + d2 - d1) / (gb - ga + 2 * d2))
        else:
            t = a - (a - b) * ((ga + d2 - d1) / (ga - gb + 2 * d2))
        if np.isfinite(t):
            return min(max(t, lo), hi)
    return 0.5 * (lo + hi)


class _LineSearchFailure(Exception):
    pass


def strong_wolfe(fun: Fun, x, f0, g0, d, step, c1=1e-4, c2=0.9, max_ls=25):
    """Find a step satisfying the strong Wolfe conditions along ``d``.

    Returns ``(step, f, g, extra, n_evals)``; raises on failure.
    """
    gd0 = float(g0 @ d)
    if gd0 >= 0:
        raise _LineSearchFailure("not a descent direction")
    n_eval = 0

    def phi(a):
        nonlocal n_eval
        n_eval += 1
        try:
            f, g, extra = _split(fun(x + a * d))
        except NumericError:
            return np.inf, None, np.nan, ()
        if not np.isfinite(f) or not np.isfinite(g).all():
            return np.inf, None, np.nan, ()
        return f, g, float(g @ d), extra

    a_prev, f_prev, gd_prev, g_prev, ex_prev = 0.0, f0, gd0, g0, ()
    a = step
    bracket = None
    for i in range(max_ls):
        f, g, gd, ex = phi(a)
        if not np.isfinite(f):
            # shrink back into the finite region
            bracket = (a_prev, f_prev, gd_prev, g_prev, ex_prev, a, np.inf, np.nan, None, ())
            break
        if f > f0 + c1 * a * gd0 or (i > 0 and f >= f_prev):
            bracket = (a_prev, f_prev, gd_prev, g_prev, ex_prev, a, f, gd, g, ex)
            break
        if abs(gd) <= -c2 * gd0:
            return a, f, g, ex, n_eval
        if gd >= 0:
            bracket = (a, f, gd, g, ex, a_prev, f_prev, gd_prev, g_prev, ex_prev)
            break
        a_next = _cubic_min(a_prev, f_prev, gd_prev, a, f, gd, a + 0.01 * (a - a_prev), 10 * a)
        a_prev, f_prev, gd_prev, g_prev, ex_prev = a, f, gd, g, ex
        a = a_next
    else:
        raise _LineSearchFailure("bracketing phase exhausted")

    lo_a, lo_f, lo_gd, lo_g, lo_ex, hi_a, hi_f, hi_gd, hi_g, hi_ex = bracket
    for _ in range(max_ls):
        left, right = min(lo_a, hi_a), max(lo_a, hi_a)
        width = right - left
        if width <= 1e-12 * max(1.0, right):
            break
        if np.isfinite(hi_f) and np.isfinite(hi_gd):
            a = _cubic_min(lo_a, lo_f, lo_gd, hi_a, hi_f, hi_gd, left + 0.1 * width, right - 0.1 * width)
        else:
            a = 0.5 * (left + right)
        f, g, gd, ex = phi(a)
        if not np.isfinite(f) or f > f0 + c1 * a * gd0 or f >= lo_f:
            hi_a, hi_f, hi_gd, hi_g, hi_ex = a, f, gd, g, ex
        else:
            if abs(gd) <= -c2 * gd0:
                return a, f, g, ex, n_eval
            if gd * (hi_a - lo_a) >= 0:
                hi_a, hi_f, hi_gd, hi_g, hi_ex = lo_a, lo_f, lo_gd, lo_g, lo_ex
            lo_a, lo_f, lo_gd, lo_g, lo_ex = a, f, gd, g, ex
    if lo_a > 0 and lo_f < f0:
        # sufficient decrease holds at lo; accept it without the curvature test
        return lo_a, lo_f, lo_g, lo_ex, n_eval
    raise _LineSearchFailure("zoom phase exhausted")


def lbfgs_minimize(
    x0: np.ndarray,
    fun: Fun,
    config: LBFGSConfig = LBFGSConfig(),
    callback: Callback | None = None,
) -> OptimizeResult:
    """Limited-memory BFGS; stops on gradient norm, stalled loss or max_iter.

    A failed line search ends the run with ``status='line_search_failed'`` and
    the best iterate so far.
    """
    x = np.array(x0, dtype=np.float64)
    f, g, extra = _split(fun(x))
    n_evals = 1
    if not np.isfinite(f) or not np.isfinite(g).all():
        raise NumericError("non-finite loss at L-BFGS start", where=0)
    hist: list[float] = []
    S: list[np.ndarray] = []
    Yv: list[np.ndarray] = []
    rho: list[float] = []
    status = "max_iter"
    it = 0
    if np.max(np.abs(g), initial=0.0) <= config.gtol:
        return OptimizeResult(x, f, 0, "converged", hist, n_evals)
    while it < config.max_iter:
        # two-loop recursion
        q = -g
        alphas = []
        for s, y, r in zip(reversed(S), reversed(Yv), reversed(rho)):
            a = r * (s @ q)
            alphas.append(a)
            q = q - a * y
        if S:
            q *= (S[-1] @ Yv[-1]) / (Yv[-1] @ Yv[-1])
        for (s, y, r), a in zip(zip(S, Yv, rho), reversed(alphas)):
            b = r * (y @ q)
            q = q + (a - b) * s
        d = q
        if g @ d >= 0:
            # curvature memory went bad; restart from steepest descent
            S.clear(); Yv.clear(); rho.clear()
            d = -g
        step = 1.0 if S else min(1.0, 1.0 / np.sum(np.abs(g)))
        try:
            a, f_new, g_new, ex_new, ne = strong_wolfe(
                fun, x, f, g, d, step, config.c1, config.c2, config.max_ls
            )
        except _LineSearchFailure:
            status = "line_search_failed"
            break
        n_evals += ne
        s = a * d
        y = g_new - g
        sy = float(s @ y)
        x = x + s
        f_old = f
        f, g, extra = f_new, g_new, ex_new
        it += 1
        hist.append(f)
        if callback is not None:
            callback(it - 1, x, f, extra)
        if sy > 1e-12 * float(y @ y):
            S.append(s); Yv.append(y); rho.append(1.0 / sy)
            if len(S) > config.memory:
                S.pop(0); Yv.pop(0); rho.pop(0)
        if np.max(np.abs(g)) <= config.gtol:
            status = "converged"
            break
        if f_old - f <= config.ftol * max(abs(f_old), abs(f), 1.0):
            status = "stalled"
            break
    return OptimizeResult(x, f, it, status, hist, n_evals)
