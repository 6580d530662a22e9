import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rarpinn.errors import UsageError
from rarpinn.net import Jet2
from rarpinn.oracle import OneSolitonSpec, as_solution, fd_jets
from rarpinn.physics import (
    CGNLSCoefficients,
    LambdaVector,
    coupling_term,
    forward_residual,
    inverse_residual,
    mean_residual,
    residual_field,
)

ZERO_JETS = [Jet2(0.0, 0.0, 0.0, 0.0)] * 4


def jets_from(Y, i):
    return [Jet2(*Y[:, i, k]) for k in range(4)]


def test_coupling_examples():
    assert coupling_term(0, 0, 0, 0, CGNLSCoefficients()) == 0
    assert coupling_term(1, 0, 0, 1, CGNLSCoefficients(1, 1, 0)) == 2
    assert coupling_term(1, 0, 1, 0, CGNLSCoefficients(1, 1, 1)) == 4


def test_coupling_matches_complex_form(rng):
    u1, v1, u2, v2 = rng.normal(size=4)
    c = CGNLSCoefficients(1.3, 0.7, 0.4 - 0.9j)
    h1, h2 = u1 + 1j * v1, u2 + 1j * v2
    g = c.gamma
    ref = c.alpha * abs(h1) ** 2 + c.beta * abs(h2) ** 2 + g * h1 * np.conj(h2) + np.conj(g) * h2 * np.conj(h1)
    assert abs(ref.imag) < 1e-14
    assert coupling_term(u1, v1, u2, v2, c) == pytest.approx(ref.real, rel=1e-14)


def test_zero_jets_give_zero_residual():
    assert tuple(forward_residual(ZERO_JETS, CGNLSCoefficients())) == (0, 0, 0, 0)
    assert tuple(inverse_residual(ZERO_JETS, LambdaVector(3, -1, 2, 5))) == (0, 0, 0, 0)


def test_constant_u1_plane_wave():
    jets = [Jet2(1.0, 0.0, 0.0, 0.0)] + [Jet2(0.0, 0.0, 0.0, 0.0)] * 3
    r = forward_residual(jets, CGNLSCoefficients(1.0, 0.0, 0.0))
    assert r.f1u == -2.0 and r.f1v == 0.0


def test_zero_lambda_leaves_time_derivatives(rng):
    vals = rng.normal(size=(4, 4))
    jets = [Jet2(*v) for v in vals]
    r = inverse_residual(jets, LambdaVector(0, 0, 0, 0))
    assert tuple(r) == (jets[1].d_t, jets[0].d_t, jets[3].d_t, jets[2].d_t)


def test_exact_one_soliton_annihilates_residuals(rng):
    spec = OneSolitonSpec()
    X = np.column_stack([rng.uniform(-9, 9, 50), rng.uniform(-1.9, 1.9, 50)])
    Y = fd_jets(as_solution(spec), X, 1e-5)
    for i in range(50):
        assert max(map(abs, forward_residual(jets_from(Y, i), spec.coeffs))) < 1e-6
        assert max(map(abs, inverse_residual(jets_from(Y, i), LambdaVector(1, 2, 1, 2)))) < 1e-6


def test_inverse_at_truth_equals_forward_with_unit_coefficients(rng):
    Y = rng.normal(size=(4, 40, 4))
    lam = LambdaVector(1.0, 2.0, 1.0, 2.0)
    for i in range(40):
        jets = jets_from(Y, i)
        assert tuple(inverse_residual(jets, lam)) == tuple(forward_residual(jets, CGNLSCoefficients(1, 1, 1)))


def test_residual_field_is_vectorised(rng):
    Y = rng.normal(size=(4, 9, 4))
    c = CGNLSCoefficients(2, 2, 0.5 + 0.5j)
    F = residual_field(Y, c)
    for i in range(9):
        np.testing.assert_allclose(F[i], forward_residual(jets_from(Y, i), c), rtol=1e-14, atol=1e-15)


def test_mean_residual_examples():
    assert mean_residual([(1, 1, 1, 1)]) == 4
    assert mean_residual([(1, 0, 0, 0), (0, 1, 0, 0)]) == 1
    assert mean_residual([(-2, 0, 0, 0)]) == 2
    with pytest.raises(UsageError):
        mean_residual([])


@given(
    st.lists(st.tuples(*[st.floats(-1e3, 1e3)] * 4), min_size=1, max_size=30),
    st.floats(0.0, 100.0),
    st.randoms(use_true_random=False),
)
def test_mean_residual_permutation_and_scaling(rows, scale, rnd):
    base = mean_residual(rows)
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert mean_residual(shuffled) == pytest.approx(base, rel=1e-12, abs=1e-12)
    scaled = [tuple(scale * v for v in r) for r in rows]
    assert mean_residual(scaled) == pytest.approx(scale * base, rel=1e-12, abs=1e-9)


def test_lambda_vector_round_trip():
    lam = LambdaVector.from_array([1, 2, 3, 4])
    assert lam == LambdaVector(1.0, 2.0, 3.0, 4.0)
    with pytest.raises(UsageError):
        LambdaVector.from_array([1, 2, 3])
