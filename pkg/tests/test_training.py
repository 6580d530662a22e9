import warnings

import numpy as np
import pytest

from rarpinn.errors import ConfigurationError
from rarpinn.net import NetworkShape, init_params
from rarpinn.oracle import GridSpec, OneSolitonSpec, as_solution
from rarpinn.optim import AdamConfig, LBFGSConfig
from rarpinn.physics import CGNLSCoefficients
from rarpinn.sampling import Domain, RARConfig
from rarpinn.training import (
    ForwardExperiment,
    TrainingDataSets,
    build_datasets,
    compute_loss,
    export_residual_field,
    forward_loss,
    loss_and_grad,
    train_forward,
)

from helpers import fd_gradient, rel_err

DOMAIN = Domain(-10.0, 10.0, -2.0, 2.0)
COEF = CGNLSCoefficients(1.0, 1.0, 1.0)
SMALL = NetworkShape(2, 8, 4, "tanh", DOMAIN.bounds)


def zero_data(n0=3, nb=4, nf=6, **kw):
    rng = np.random.default_rng(0)
    x0 = np.column_stack([rng.uniform(-10, 10, n0), np.full(n0, -2.0)])
    xb = np.column_stack([np.full(nb, -10.0), rng.uniform(-2, 2, nb)])
    xf = np.column_stack([rng.uniform(-10, 10, nf), rng.uniform(-2, 2, nf)])
    return TrainingDataSets(DOMAIN, x0, np.zeros((n0, 4)), xb, xf, **kw)


def test_zero_network_fits_zero_field():
    assert compute_loss(np.zeros(SMALL.n_params), SMALL, zero_data(), COEF).total == 0.0


def test_single_initial_error_gives_unit_loss():
    data = zero_data(n0=1)
    data.u0[0] = (1.0, 0.0, 0.0, 0.0)
    loss = compute_loss(np.zeros(SMALL.n_params), SMALL, data, COEF)
    assert loss.loss0 == 1.0 and loss.lossb == 0.0 and loss.lossf == 0.0


def test_x_independent_network_has_zero_periodic_loss():
    shape = NetworkShape(1, 8, 4, "tanh", None)
    params = init_params(shape, 3)
    params[: 2 * 8].reshape(2, 8)[0] = 0.0  # first-layer weights on x
    assert compute_loss(params, shape, zero_data(), COEF).lossb == 0.0
    assert compute_loss(init_params(shape, 3), shape, zero_data(), COEF).lossb > 0.0


@pytest.mark.parametrize("mode", ["periodic", "supervised", "none"])
def test_full_loss_gradient_matches_finite_differences(mode):
    rng = np.random.default_rng(7)
    x0 = np.column_stack([rng.uniform(-10, 10, 5), np.full(5, -2.0)])
    xb = np.column_stack([np.where(np.arange(5) % 2, 10.0, -10.0), rng.uniform(-2, 2, 5)])
    if mode != "supervised":
        xb[:, 0] = -10.0
    xf = np.column_stack([rng.uniform(-10, 10, 20), rng.uniform(-2, 2, 20)])
    sol = as_solution(OneSolitonSpec())
    h1, h2 = sol(x0[:, 0], x0[:, 1])
    u0 = np.column_stack([h1.real, h1.imag, h2.real, h2.imag])
    ub = rng.normal(size=(5, 4)) if mode == "supervised" else None
    data = TrainingDataSets(DOMAIN, x0, u0, xb, xf, ub, mode)
    params = init_params(SMALL, 11)
    _, grad = loss_and_grad(params, SMALL, data, COEF)
    idx = rng.choice(params.size, 25, replace=False)
    fd = fd_gradient(lambda p: compute_loss(p, SMALL, data, COEF).total, params, idx=idx)
    assert rel_err(grad[idx], [fd[i] for i in idx], floor=1e-6) < 1e-5


def test_dataset_validation():
    with pytest.raises(ConfigurationError):
        TrainingDataSets(DOMAIN, [[0.0, -1.0]], np.zeros((1, 4)), np.zeros((0, 2)), [[0.0, 0.0]])
    with pytest.raises(ConfigurationError):
        TrainingDataSets(DOMAIN, np.zeros((0, 2)), np.zeros((0, 4)), [[0.0, 0.0]], [[0.0, 0.0]])
    with pytest.raises(ConfigurationError):
        TrainingDataSets(DOMAIN, np.zeros((0, 2)), np.zeros((0, 4)), [[-10.0, 0.0]], np.zeros((0, 2)))
    with pytest.raises(ConfigurationError):
        zero_data(boundary_mode="supervised")


def test_residual_field_shape_and_scale():
    grid = GridSpec(-10, 10, -2, 2, 2, 2)
    assert export_residual_field(np.zeros(SMALL.n_params), SMALL, grid, COEF).shape == (2, 2)
    field = export_residual_field(init_params(SMALL, 1), SMALL, GridSpec(-10, 10, -2, 2, 20, 10), COEF)
    assert field.max() > 1e-2


def tiny_experiment(**kw):
    spec = OneSolitonSpec()
    base = dict(
        solution=as_solution(spec), coeffs=spec.coeffs, domain=DOMAIN,
        hidden_layers=2, hidden_width=8, n0=5, nb=5, nf=40, nx_grid=30, nt_grid=21,
        rar=RARConfig(m=3, epsilon0=1e-12, max_rounds=2, candidate_pool=200, refit_iterations=5),
        adam=AdamConfig(lr=1e-2, iterations=10), lbfgs=LBFGSConfig(max_iter=5), seed=5,
    )
    base.update(kw)
    return ForwardExperiment(**base)


def quiet_train(exp):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return train_forward(exp, progress=lambda s: None)


def test_tpinn_budget_and_shared_sets():
    rar = tiny_experiment()
    tpinn = tiny_experiment(tpinn=True)
    assert tpinn.collocation_count() == 40 + 3 * 2
    a, b = build_datasets(rar), build_datasets(tpinn)
    np.testing.assert_array_equal(a.x0, b.x0)
    np.testing.assert_array_equal(a.xb, b.xb)
    assert tiny_experiment(tpinn=True, tpinn_nf=77).collocation_count() == 77


def test_initial_and_boundary_points_are_grid_nodes():
    data = build_datasets(tiny_experiment())
    gx = np.linspace(-10, 10, 30)
    gt = np.linspace(-2, 2, 21)
    assert np.isin(data.x0[:, 0], gx).all() and np.isin(data.xb[:, 1], gt).all()
    assert len(np.unique(data.x0[:, 0])) == 5


def test_zero_rounds_matches_fixed_collocation():
    a = quiet_train(tiny_experiment(rar=RARConfig(m=3, max_rounds=0, candidate_pool=200)))
    b = quiet_train(tiny_experiment(rar=RARConfig(m=3, max_rounds=0, candidate_pool=200), tpinn=True))
    np.testing.assert_array_equal(a.params, b.params)
    assert len(a.history.rar_events) == 1 and a.history.rar_events[0].added == 0


def test_refinement_skipped_when_error_already_small():
    r = train_forward(tiny_experiment(rar=RARConfig(m=3, epsilon0=1e9, candidate_pool=200)))
    assert [(e.round, e.added) for e in r.history.rar_events] == [(0, 0)]
    assert r.data.nf == 40


def test_refinement_adds_m_points_per_round():
    r = quiet_train(tiny_experiment())
    events = r.history.rar_events
    assert [e.added for e in events] == [0, 3, 3]
    assert r.data.nf == 46 == r.history.final_nf
    for e in events[1:]:
        assert any((r.data.xf == p).all(axis=1).any() for p in e.points)


def test_warns_when_rounds_run_out():
    with pytest.warns(RuntimeWarning, match="refinement stopped"):
        train_forward(tiny_experiment(), progress=lambda s: None)


def test_history_indices_increase_within_phase():
    h = quiet_train(tiny_experiment()).history
    for phase in ("adam", "rar", "lbfgs"):
        its = [r.iteration for r in h.phase(phase)]
        assert its and all(b > a for a, b in zip(its, its[1:]))
    assert h.phase("rar")[0].iteration == 10
    rec = h.records[0]
    assert rec.total == pytest.approx(rec.loss0 + rec.lossb + rec.lossf)


def test_training_is_bit_reproducible():
    a = quiet_train(tiny_experiment())
    b = quiet_train(tiny_experiment())
    np.testing.assert_array_equal(a.params, b.params)
    assert [r.total for r in a.history.records] == [r.total for r in b.history.records]
    c = quiet_train(tiny_experiment(seed=6))
    assert not np.array_equal(a.params, c.params)


def test_forward_loss_reports_named_parts():
    data = zero_data()
    total, grad, parts = forward_loss(SMALL, data, COEF)(init_params(SMALL, 2))
    assert set(parts) == {"loss0", "lossb", "lossf"}
    assert total == pytest.approx(sum(parts.values()))
    assert grad.shape == (SMALL.n_params,)
