"""Identification of the dispersion and nonlinearity coefficients from field data.

The network and lambda_1..lambda_4 are fitted jointly: a data misfit on the
sample rows plus the lambda-scaled residual at the same locations.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UsageError
from .net import NetworkShape, init_params
from .optim import AdamState, OptimizerConfig, adam_minimize, lbfgs_minimize
from .physics import LambdaVector, residual_scores
from .sampling import RARConfig, top_m_indices
from .training import JetLoss, RAREvent, TrainingHistory, _Residual, _Supervised, evaluate_residuals

log = logging.getLogger(__name__)

FIELDS = ("u1", "v1", "u2", "v2")


def as_rows(dataset) -> np.ndarray:
    """Dataset as an (N, 6) float array of x, t, u1, v1, u2, v2."""
    rows = np.asarray(dataset, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != 6:
        raise UsageError(f"dataset rows must have 6 columns, got shape {rows.shape}")
    return rows


def add_noise(dataset, level: float, seed, reference=None) -> np.ndarray:
    """Perturb u1, v1, u2, v2 by independent zero-mean Gaussian noise.

    The standard deviation for each field is ``level`` times that field's
    sample standard deviation over ``reference`` (default: the dataset
    itself). Coordinates are left untouched. ``level == 0`` returns an
    unchanged copy.
    """
    if level < 0:
        raise UsageError("noise level must be >= 0")
    rows = as_rows(dataset).copy()
    if level == 0:
        return rows
    ref = rows if reference is None else as_rows(reference)
    std = ref[:, 2:].std(axis=0)
    rng = np.random.default_rng(seed)
    rows[:, 2:] += level * std * rng.standard_normal((len(rows), 4))
    return rows


def identification_error(lambda_hat: LambdaVector, truth: LambdaVector) -> tuple[float, float, float, float]:
    return tuple(float(v) for v in np.abs(lambda_hat.as_array() - truth.as_array()))


def split_seed(seed: int) -> np.random.SeedSequence:
    """Seed for choosing the N_u rows, independent of the training streams."""
    return np.random.SeedSequence(seed, spawn_key=(3,))


def split_dataset(rows, n_u: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n_u`` rows without replacement; the rest form the refinement pool."""
    rows = as_rows(rows)
    if not 1 <= n_u <= len(rows):
        raise ConfigurationError(f"n_u must lie in [1, {len(rows)}], got {n_u}")
    perm = np.random.default_rng(seed).permutation(len(rows))
    return rows[np.sort(perm[:n_u])], rows[np.sort(perm[n_u:])]


@dataclass
class InverseExperiment:
    """Joint fit of a network and lambda to ``dataset``.

    ``pool`` holds further sample rows from which refinement draws points; it
    is required when ``rar`` is set. Noise is applied to both dataset and
    pool, scaled by the dataset's field statistics.
    """

    dataset: np.ndarray
    shape: NetworkShape
    noise_level: float = 0.0
    lambda_init: LambdaVector = field(default_factory=lambda: LambdaVector(0.0, 0.0, 0.0, 0.0))
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    rar: RARConfig | None = None
    pool: np.ndarray | None = None
    seed: int = 1234

    def __post_init__(self):
        self.dataset = as_rows(self.dataset)
        if len(self.dataset) < 1:
            raise ConfigurationError("inverse dataset needs N_u >= 1")
        if not 0 <= self.noise_level < 1:
            raise ConfigurationError("noise_level must lie in [0, 1)")
        if self.pool is not None:
            self.pool = as_rows(self.pool)
        if self.rar is not None and self.rar.max_rounds > 0:
            if self.pool is None or len(self.pool) < self.rar.m:
                raise ConfigurationError("refinement needs a pool of at least m rows")

    @property
    def n_u(self) -> int:
        return len(self.dataset)


@dataclass(frozen=True)
class InverseLoss:
    mse_p: float
    mse_f: float

    @property
    def total(self) -> float:
        return self.mse_p + self.mse_f


@dataclass
class IdentificationReport:
    lambda_hat: LambdaVector
    errors: tuple[float, float, float, float]
    noise_level: float
    n_u: int
    n_total: int
    status: str
    loss: InverseLoss
    params: np.ndarray = field(repr=False, default=None)
    history: TrainingHistory = field(repr=False, default_factory=TrainingHistory)

    @property
    def max_error(self) -> float:
        return max(self.errors)

    def equation(self) -> str:
        """The identified system written out with the fitted coefficients."""
        lam = self.lambda_hat
        bracket = "(|h1|^2 + |h2|^2 + h1 h2* + h1* h2)"

        def term(v):
            return f"{'-' if v < 0 else '+'} {abs(v):.5f}"

        return "\n".join(
            f"i h{j}_t {term(d)} h{j}_xx {term(n)} {bracket} h{j} = 0"
            for j, d, n in ((1, lam.l1, lam.l2), (2, lam.l3, lam.l4))
        )


def inverse_loss(shape: NetworkShape, rows: np.ndarray, lam: LambdaVector) -> JetLoss:
    """MSE_p + MSE_f on one index set; the trainable vector is params then lambda."""
    rows = as_rows(rows)
    sl = slice(0, len(rows))
    terms = [_Supervised("mse_p", sl, rows[:, 2:]), _Residual("mse_f", sl)]
    return JetLoss(shape, rows[:, :2], terms, lam, train_lambda=True)


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("noise", "network", "pool")
    return {n: np.random.default_rng(c) for n, c in zip(names, np.random.SeedSequence(seed).spawn(3))}


def train_inverse(
    exp: InverseExperiment,
    truth: LambdaVector,
    progress=None,
    history: TrainingHistory | None = None,
) -> IdentificationReport:
    """Adam, optional refinement from the pool, then L-BFGS."""
    say = progress or log.info
    rngs = _streams(exp.seed)
    shape = exp.shape
    n_data = len(exp.dataset)
    both = exp.dataset if exp.pool is None else np.vstack([exp.dataset, exp.pool])
    noisy = add_noise(both, exp.noise_level, rngs["noise"], reference=exp.dataset)
    rows, pool = noisy[:n_data], noisy[n_data:]

    params = init_params(shape, int(rngs["network"].integers(2**31)))
    theta = np.concatenate([params, exp.lambda_init.as_array()])
    history = TrainingHistory() if history is None else history
    names = ("mse_p", "lossb", "mse_f")
    objective = inverse_loss(shape, rows, exp.lambda_init)
    adam = exp.optimizer.adam
    state = AdamState.zeros(theta.size)
    theta = adam_minimize(theta, objective, adam, history.recorder("adam", names), state).x
    say(f"adam: {adam.iterations} iterations, lambda {np.round(theta[-4:], 5)}")

    rar = exp.rar
    if rar is not None and pool.size:
        available = np.ones(len(pool), dtype=bool)
        offset = adam.iterations
        rounds = 0
        while True:
            cand = np.flatnonzero(available)
            if len(cand) > rar.candidate_pool:
                cand = np.sort(rngs["pool"].choice(cand, rar.candidate_pool, replace=False))
            lam = LambdaVector.from_array(theta[-4:])
            scores = residual_scores(evaluate_residuals(theta[:-4], shape, pool[cand, :2], lam))
            err = float(scores.mean())
            if err < rar.epsilon0 or rounds >= rar.max_rounds or len(cand) < rar.m:
                break
            pick = cand[top_m_indices(scores, rar.m)]
            available[pick] = False
            rows = np.vstack([rows, pool[pick]])
            objective = inverse_loss(shape, rows, lam)
            theta = adam_minimize(
                theta, objective, adam, history.recorder("rar", names, offset), state,
                iterations=rar.refit_iterations,
            ).x
            offset += rar.refit_iterations
            rounds += 1
            history.rar_events.append(RAREvent(rounds, err, rar.m, float(scores.max()), pool[pick, :2]))
            say(f"rar round {rounds}: err {err:.4e}, N {len(rows)}")
        if err >= rar.epsilon0 and rar.max_rounds > 0:
            warnings.warn(f"refinement stopped with err {err:.3e} >= {rar.epsilon0}", RuntimeWarning, stacklevel=2)

    status = "skipped"
    if exp.optimizer.lbfgs.max_iter > 0:
        res = lbfgs_minimize(theta, objective, exp.optimizer.lbfgs, history.recorder("lbfgs", names))
        theta, status = res.x, res.status
        say(f"lbfgs: {res.iterations} iterations ({res.status})")
    history.lbfgs_status = status
    history.final_nf = len(rows)

    _, _, parts = objective(theta)
    lam_hat = LambdaVector.from_array(theta[-4:])
    return IdentificationReport(
        lambda_hat=lam_hat,
        errors=identification_error(lam_hat, truth),
        noise_level=exp.noise_level,
        n_u=n_data,
        n_total=len(rows),
        status=status,
        loss=InverseLoss(parts["mse_p"], parts["mse_f"]),
        params=theta[:-4].copy(),
        history=history,
    )

