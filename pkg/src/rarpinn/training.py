"""Loss assembly and the forward training driver with residual-based refinement.

The loss is the unweighted sum of an initial-condition misfit, a boundary
term and the mean squared PDE residual over the collocation set. All terms
share one batched jet evaluation per call.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .errors import ConfigurationError, UsageError
from .net import JetWorkspace, NetworkShape, init_params, jet_backward, jet_forward
from .optim import AdamConfig, AdamState, LBFGSConfig, adam_minimize, lbfgs_minimize
from .physics import (
    FORWARD_SCALES,
    UNIT_COEFFICIENTS,
    CGNLSCoefficients,
    LambdaVector,
    lambda_scales,
    residual_scores,
)
from .sampling import Domain, RARConfig, lhs_sample, top_m_indices

log = logging.getLogger(__name__)

BOUNDARY_MODES = ("periodic", "supervised", "none")


# ---------------------------------------------------------------------------
# data sets
# ---------------------------------------------------------------------------


@dataclass
class TrainingDataSets:
    """Initial, boundary and collocation point sets.

    In ``periodic`` mode ``xb`` holds the left-edge points (x = x_lo, t); each
    is paired with (x_hi, t) and ``ub`` is unused. In ``supervised`` mode
    ``xb`` lies on either edge and ``ub`` holds (u1, v1, u2, v2) targets.
    """

    domain: Domain
    x0: np.ndarray
    u0: np.ndarray
    xb: np.ndarray
    xf: np.ndarray
    ub: np.ndarray | None = None
    boundary_mode: str = "periodic"

    def __post_init__(self):
        d = self.domain
        self.x0 = np.asarray(self.x0, dtype=np.float64).reshape(-1, 2)
        self.u0 = np.asarray(self.u0, dtype=np.float64).reshape(-1, 4)
        self.xb = np.asarray(self.xb, dtype=np.float64).reshape(-1, 2)
        self.xf = np.asarray(self.xf, dtype=np.float64).reshape(-1, 2)
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ConfigurationError(f"unknown boundary mode {self.boundary_mode!r}")
        if len(self.x0) != len(self.u0):
            raise ConfigurationError("x0 and u0 lengths differ")
        if len(self.x0) and not np.all(self.x0[:, 1] == d.t_lo):
            raise ConfigurationError("initial points must lie on t = t_lo")
        if self.boundary_mode == "periodic" and len(self.xb) and not np.all(self.xb[:, 0] == d.x_lo):
            raise ConfigurationError("periodic boundary points must lie on x = x_lo")
        if self.boundary_mode == "supervised":
            if self.ub is None or len(self.ub) != len(self.xb):
                raise ConfigurationError("supervised boundary needs ub matching xb")
            self.ub = np.asarray(self.ub, dtype=np.float64).reshape(-1, 4)
            on_edge = (self.xb[:, 0] == d.x_lo) | (self.xb[:, 0] == d.x_hi)
            if not on_edge.all():
                raise ConfigurationError("boundary points must lie on x = x_lo or x = x_hi")
        if len(self.xf) < 1:
            raise ConfigurationError("need at least one collocation point")

    @property
    def n0(self) -> int:
        return len(self.x0)

    @property
    def nb(self) -> int:
        return 0 if self.boundary_mode == "none" else len(self.xb)

    @property
    def nf(self) -> int:
        return len(self.xf)

    def with_collocation(self, xf: np.ndarray) -> "TrainingDataSets":
        return replace(self, xf=xf)


@dataclass(frozen=True)
class LossBreakdown:
    loss0: float
    lossb: float
    lossf: float

    @property
    def total(self) -> float:
        return self.loss0 + self.lossb + self.lossf

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.loss0, self.lossb, self.lossf, self.total


# ---------------------------------------------------------------------------
# composite jet loss
# ---------------------------------------------------------------------------


class _Supervised(NamedTuple):
    name: str
    sl: slice
    target: np.ndarray


class _Periodic(NamedTuple):
    name: str
    left: slice
    right: slice


class _Residual(NamedTuple):
    name: str
    sl: slice


def _physics_scales(physics):
    """(coefficients, dispersion pair, nonlinearity pair) for a residual mode."""
    if isinstance(physics, CGNLSCoefficients):
        disp, nonl = FORWARD_SCALES
        return physics, np.array(disp), np.array(nonl)
    if isinstance(physics, LambdaVector):
        disp, nonl = lambda_scales(physics)
        return UNIT_COEFFICIENTS, np.array(disp), np.array(nonl)
    raise ConfigurationError(f"unknown residual mode {physics!r}")


class JetLoss:
    """Sum of mean-squared terms evaluated on one concatenated point batch.

    Called with a flat vector it returns ``(total, gradient, parts)`` where
    ``parts`` is a dict of the named terms. With ``train_lambda`` the vector
    is the network parameters followed by lambda_1..lambda_4.
    """

    def __init__(self, shape: NetworkShape, X: np.ndarray, terms: list, physics, train_lambda: bool = False):
        self.shape = shape
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.terms = terms
        self.physics = physics
        self.train_lambda = train_lambda
        if train_lambda and not isinstance(physics, LambdaVector):
            raise ConfigurationError("lambda training needs a LambdaVector residual mode")
        self.names = list(dict.fromkeys(t.name for t in terms))
        self._ws = JetWorkspace()

    @property
    def n_vars(self) -> int:
        return self.shape.n_params + (4 if self.train_lambda else 0)

    def split(self, theta: np.ndarray) -> tuple[np.ndarray, object]:
        theta = np.asarray(theta, dtype=np.float64)
        if self.train_lambda:
            n = self.shape.n_params
            return theta[:n], LambdaVector.from_array(theta[n:])
        return theta, self.physics

    def __call__(self, theta: np.ndarray):
        params, physics = self.split(theta)
        coeffs, disp, nonl = _physics_scales(physics)
        coef = coeffs.as_array()
        Y, cache = jet_forward(params, self.shape, self.X, self._ws)
        GY = np.zeros_like(Y)
        parts = dict.fromkeys(self.names, 0.0)
        g_lam = np.zeros(4)
        for term in self.terms:
            if isinstance(term, _Supervised):
                n = term.sl.stop - term.sl.start
                if n == 0:
                    continue
                diff = Y[kernels.VALUE, term.sl, :] - term.target
                parts[term.name] += float(np.sum(diff * diff)) / n
                GY[kernels.VALUE, term.sl, :] += 2.0 * diff / n
            elif isinstance(term, _Periodic):
                n = term.left.stop - term.left.start
                if n == 0:
                    continue
                for s in (kernels.VALUE, kernels.DX):
                    diff = Y[s, term.left, :] - Y[s, term.right, :]
                    parts[term.name] += float(np.sum(diff * diff)) / n
                    GY[s, term.left, :] += 2.0 * diff / n
                    GY[s, term.right, :] -= 2.0 * diff / n
            else:
                n = term.sl.stop - term.sl.start
                Ys = np.ascontiguousarray(Y[:, term.sl, :])
                F = kernels.residual_forward(Ys, disp, nonl, coef)
                parts[term.name] += float(np.sum(F * F)) / n
                GYs, g_disp, g_nonl = kernels.residual_vjp(Ys, disp, nonl, coef, 2.0 * F / n)
                GY[:, term.sl, :] += GYs
                # lambda order is (dispersion 1, nonlinearity 1, dispersion 2, nonlinearity 2)
                g_lam += np.array([g_disp[0], g_nonl[0], g_disp[1], g_nonl[1]])
        grad = jet_backward(params, self.shape, cache, GY, self._ws)
        if self.train_lambda:
            grad = np.concatenate([grad, g_lam])
        total = float(sum(parts.values()))
        return total, grad, parts


def forward_loss(shape: NetworkShape, data: TrainingDataSets, physics) -> JetLoss:
    """The initial + boundary + collocation objective for ``data``."""
    blocks = [data.x0]
    pos = 0
    terms: list = []
    sl0 = slice(pos, pos + data.n0)
    terms.append(_Supervised("loss0", sl0, data.u0))
    pos = sl0.stop
    if data.boundary_mode == "periodic":
        right = data.xb.copy()
        right[:, 0] = data.domain.x_hi
        blocks += [data.xb, right]
        nb = len(data.xb)
        terms.append(_Periodic("lossb", slice(pos, pos + nb), slice(pos + nb, pos + 2 * nb)))
        pos += 2 * nb
    elif data.boundary_mode == "supervised":
        blocks.append(data.xb)
        nb = len(data.xb)
        terms.append(_Supervised("lossb", slice(pos, pos + nb), data.ub))
        pos += nb
    else:
        terms.append(_Supervised("lossb", slice(pos, pos), np.zeros((0, 4))))
    blocks.append(data.xf)
    terms.append(_Residual("lossf", slice(pos, pos + data.nf)))
    return JetLoss(shape, np.vstack(blocks), terms, physics, train_lambda=False)


def compute_loss(params: np.ndarray, shape: NetworkShape, data: TrainingDataSets, physics) -> LossBreakdown:
    """Loss breakdown at ``params``; ``physics`` is coefficients or a LambdaVector."""
    _, _, parts = forward_loss(shape, data, physics)(params)
    return LossBreakdown(parts["loss0"], parts["lossb"], parts["lossf"])


def loss_and_grad(params: np.ndarray, shape: NetworkShape, data: TrainingDataSets, physics):
    """(LossBreakdown, parameter gradient of the total)."""
    _, grad, parts = forward_loss(shape, data, physics)(params)
    return LossBreakdown(parts["loss0"], parts["lossb"], parts["lossf"]), grad


# ---------------------------------------------------------------------------
# residual evaluation over many points
# ---------------------------------------------------------------------------


def evaluate_residuals(params: np.ndarray, shape: NetworkShape, X: np.ndarray, physics, chunk: int = 4096) -> np.ndarray:
    """Residuals (N, 4) at points X, evaluated in chunks."""
    coeffs, disp, nonl = _physics_scales(physics)
    X = np.asarray(X, dtype=np.float64).reshape(-1, 2)
    out = np.empty((len(X), 4))
    ws = JetWorkspace()
    for start in range(0, len(X), chunk):
        Y, _ = jet_forward(params, shape, X[start:start + chunk], ws)
        out[start:start + chunk] = kernels.residual_forward(Y, disp, nonl, coeffs.as_array())
    return out


def export_residual_field(params: np.ndarray, shape: NetworkShape, grid, physics) -> np.ndarray:
    """Residual score at every node of ``grid`` as an (nt, nx) array."""
    F = evaluate_residuals(params, shape, grid.points(), physics)
    return residual_scores(F).reshape(grid.nt, grid.nx)


# ---------------------------------------------------------------------------
# history
# ---------------------------------------------------------------------------


class IterationRecord(NamedTuple):
    phase: str
    iteration: int
    loss0: float
    lossb: float
    lossf: float
    total: float


@dataclass
class RAREvent:
    round: int
    err: float
    added: int
    pool_max: float
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))


@dataclass
class TrainingHistory:
    records: list[IterationRecord] = field(default_factory=list)
    rar_events: list[RAREvent] = field(default_factory=list)
    lbfgs_status: str = ""
    final_nf: int = 0

    def recorder(self, phase: str, names=("loss0", "lossb", "lossf"), offset: int = 0):
        def cb(it, x, f, extra):
            parts = extra[0] if extra else {}
            vals = [parts.get(n, 0.0) for n in names]
            self.records.append(IterationRecord(phase, offset + it, *vals, f))
        return cb

    def phase(self, name: str) -> list[IterationRecord]:
        return [r for r in self.records if r.phase == name]

    @property
    def pool_max_before(self) -> float:
        return self.rar_events[0].pool_max if self.rar_events else float("nan")

    @property
    def pool_max_after(self) -> float:
        return self.rar_events[-1].pool_max if self.rar_events else float("nan")


# ---------------------------------------------------------------------------
# forward experiment
# ---------------------------------------------------------------------------


@dataclass
class ForwardExperiment:
    """Everything needed to train one forward surrogate.

    Supervision comes from ``solution`` (a field function ``f(x, t) -> (h1, h2)``).
    ``tpinn=True`` selects the fixed-collocation baseline; its collocation
    set has ``nf + m * max_rounds`` points (the refinement budget) unless
    ``tpinn_nf`` overrides it. ``rar=None`` disables refinement outright.
    """

    solution: Callable
    coeffs: CGNLSCoefficients
    domain: Domain
    hidden_layers: int = 6
    hidden_width: int = 32
    n0: int = 50
    nb: int = 50
    nf: int = 4000
    nx_grid: int = 300
    nt_grid: int = 201
    boundary_mode: str = "periodic"
    rar: RARConfig | None = field(default_factory=RARConfig)
    tpinn: bool = False
    tpinn_nf: int | None = None
    adam: AdamConfig = field(default_factory=AdamConfig)
    lbfgs: LBFGSConfig = field(default_factory=LBFGSConfig)
    normalize_inputs: bool = True
    seed: int = 1234

    def shape(self) -> NetworkShape:
        bounds = self.domain.bounds if self.normalize_inputs else None
        return NetworkShape(self.hidden_layers, self.hidden_width, 4, "tanh", bounds)

    def collocation_count(self) -> int:
        if not self.tpinn:
            return self.nf
        if self.tpinn_nf is not None:
            return self.tpinn_nf
        return self.nf + (self.rar.m * self.rar.max_rounds if self.rar else 0)


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("initial", "boundary", "collocation", "network", "pool")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.default_rng(c) for n, c in zip(names, children)}


def field_targets(solution: Callable, X: np.ndarray) -> np.ndarray:
    h1, h2 = solution(X[:, 0], X[:, 1])
    return np.column_stack([h1.real, h1.imag, h2.real, h2.imag])


def build_datasets(exp: ForwardExperiment, rngs=None) -> TrainingDataSets:
    """Draw the initial, boundary and collocation sets.

    Initial x-positions and boundary times are drawn without replacement from
    the evaluation grid; collocation points are a Latin hypercube.
    """
    rngs = rngs or _streams(exp.seed)
    d = exp.domain
    gx = np.linspace(d.x_lo, d.x_hi, exp.nx_grid)
    gt = np.linspace(d.t_lo, d.t_hi, exp.nt_grid)
    if exp.n0 > gx.size or exp.nb > gt.size:
        raise ConfigurationError("more initial/boundary points requested than grid nodes")
    xs = np.sort(rngs["initial"].choice(gx, exp.n0, replace=False))
    x0 = np.column_stack([xs, np.full(exp.n0, d.t_lo)])
    u0 = field_targets(exp.solution, x0)
    ts = np.sort(rngs["boundary"].choice(gt, exp.nb, replace=False))
    ub = None
    if exp.boundary_mode == "supervised":
        side = np.where(np.arange(exp.nb) % 2 == 0, d.x_lo, d.x_hi)
        xb = np.column_stack([side, ts])
        ub = field_targets(exp.solution, xb)
    else:
        xb = np.column_stack([np.full(exp.nb, d.x_lo), ts])
    xf = lhs_sample(d, exp.collocation_count(), rngs["collocation"])
    return TrainingDataSets(d, x0, u0, xb, xf, ub, exp.boundary_mode)


@dataclass
class ForwardResult:
    params: np.ndarray
    shape: NetworkShape
    history: TrainingHistory
    data: TrainingDataSets


def rar_check(params, shape, domain, physics, pool_size, rng):
    """Score a fresh candidate pool: returns (pool, scores, mean, max)."""
    pool = lhs_sample(domain, pool_size, rng)
    scores = residual_scores(evaluate_residuals(params, shape, pool, physics))
    return pool, scores, float(scores.mean()), float(scores.max())


def train_forward(
    exp: ForwardExperiment,
    progress: Callable[[str], None] | None = None,
    history: TrainingHistory | None = None,
) -> ForwardResult:
    """Adam, then the refinement loop, then L-BFGS.

    Refinement: score a fresh Latin hypercube candidate pool; while its mean
    score is at least epsilon0 and rounds remain, append the m worst points to
    the collocation set and continue Adam for ``refit_iterations`` steps.
    Passing ``history`` lets the caller keep the records if a phase fails.
    """
    say = progress or log.info
    rngs = _streams(exp.seed)
    shape = exp.shape()
    data = build_datasets(exp, rngs)
    params = init_params(shape, int(rngs["network"].integers(2**31)))
    history = TrainingHistory() if history is None else history
    physics = exp.coeffs

    objective = forward_loss(shape, data, physics)
    state = AdamState.zeros(shape.n_params)
    res = adam_minimize(params, objective, exp.adam, history.recorder("adam"), state)
    params = res.x
    say(f"adam: {exp.adam.iterations} iterations, loss {res.f:.3e}")

    if exp.rar is not None and not exp.tpinn:
        rar = exp.rar
        pool, scores, err, mx = rar_check(params, shape, exp.domain, physics, rar.candidate_pool, rngs["pool"])
        history.rar_events.append(RAREvent(0, err, 0, mx))
        say(f"rar round 0: err {err:.4e}, pool max {mx:.4e}")
        rounds = 0
        offset = exp.adam.iterations
        while err >= rar.epsilon0 and rounds < rar.max_rounds:
            new = pool[top_m_indices(scores, rar.m)]
            data = data.with_collocation(np.vstack([data.xf, new]))
            objective = forward_loss(shape, data, physics)
            res = adam_minimize(
                params, objective, exp.adam, history.recorder("rar", offset=offset), state,
                iterations=rar.refit_iterations,
            )
            params = res.x
            offset += rar.refit_iterations
            rounds += 1
            pool, scores, err, mx = rar_check(params, shape, exp.domain, physics, rar.candidate_pool, rngs["pool"])
            history.rar_events.append(RAREvent(rounds, err, len(new), mx, new))
            say(f"rar round {rounds}: err {err:.4e}, pool max {mx:.4e}, nf {data.nf}")
        if err >= rar.epsilon0 and rar.max_rounds > 0:
            warnings.warn(
                f"refinement stopped after {rounds} rounds with err {err:.3e} >= {rar.epsilon0}",
                RuntimeWarning,
                stacklevel=2,
            )

    if exp.lbfgs.max_iter > 0:
        res = lbfgs_minimize(params, objective, exp.lbfgs, history.recorder("lbfgs"))
        params = res.x
        history.lbfgs_status = res.status
        say(f"lbfgs: {res.iterations} iterations ({res.status}), loss {res.f:.3e}")
    history.final_nf = data.nf
    return ForwardResult(params, shape, history, data)
