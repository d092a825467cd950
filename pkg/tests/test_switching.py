import numpy as np
import pytest

from pdmplab.switching import (
    RateMatrixError,
    ReducibleChainError,
    sample_chain,
    scale,
    stationary_law,
    validate_rate_matrix,
)


def test_validator_accepts_and_normalizes():
    Q = validate_rate_matrix([[-1, 1], [2, -2]])
    assert np.allclose(Q.Q.sum(axis=1), 0.0, atol=1e-15)
    assert Q.strictly_positive


def test_validator_row_sum_error():
    with pytest.raises(RateMatrixError, match="row 0 sums"):
        validate_rate_matrix([[-1, 0.5], [2, -2]])


def test_validator_negative_offdiag():
    with pytest.raises(RateMatrixError, match="negative off-diagonal"):
        validate_rate_matrix([[1, -1], [2, -2]])


def test_validator_warns_on_vanishing_offdiag():
    with pytest.warns(UserWarning, match="vanishing off-diagonal"):
        Q = validate_rate_matrix([[-1, 1], [0, 0]])
    assert not Q.strictly_positive


def test_stationary_law_two_state():
    Q = validate_rate_matrix([[-1, 1], [2, -2]])
    law = stationary_law(Q)
    assert np.allclose(law.pi, [2 / 3, 1 / 3], atol=1e-14)

    sym = validate_rate_matrix([[-3, 3], [3, -3]])
    assert np.allclose(stationary_law(sym).pi, [0.5, 0.5], atol=1e-14)


def test_stationary_law_random_residual(rng):
    for _ in range(20):
        n = rng.integers(2, 6)
        off = rng.uniform(0.1, 3.0, size=(n, n))
        Q = off - np.diag(np.diag(off))
        Q -= np.diag(Q.sum(axis=1))
        law = stationary_law(validate_rate_matrix(Q))
        assert np.abs(law.pi @ Q).max() <= 1e-10
        assert law.pi.min() > 0


def test_stationary_law_reducible():
    with pytest.warns(UserWarning):
        Q = validate_rate_matrix([[-1, 1, 0], [1, -1, 0], [0, 0, 0]])
    with pytest.raises(ReducibleChainError):
        stationary_law(Q)


def test_scale():
    Q = validate_rate_matrix([[-1, 1], [2, -2]])
    assert np.array_equal(scale(Q, 10).Q, np.array([[-10.0, 10.0], [20.0, -20.0]]))
    with pytest.raises(RateMatrixError):
        scale(Q, 0.0)
    with pytest.raises(RateMatrixError):
        scale(Q, -1.0)


def test_scale_preserves_stationary_law(rng):
    for lam in (0.1, 7.3):
        off = rng.uniform(0.2, 2.0, size=(3, 3))
        Q = off - np.diag(np.diag(off))
        Q -= np.diag(Q.sum(axis=1))
        Q = validate_rate_matrix(Q)
        assert np.allclose(stationary_law(scale(Q, lam)).pi,
                           stationary_law(Q).pi, atol=1e-12)


def test_sample_chain_deterministic():
    Q = validate_rate_matrix([[-1, 1], [2, -2]])
    a = sample_chain(Q, 0, 200.0, seed=99)
    b = sample_chain(Q, 0, 200.0, seed=99)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.holds, b.holds)
    c = sample_chain(Q, 0, 200.0, seed=100)
    assert not np.array_equal(a.holds, c.holds)


def test_sample_chain_structure():
    Q = validate_rate_matrix([[-1, 1], [2, -2]])
    rec = sample_chain(Q, 0, 500.0, seed=5)
    assert rec.start_state == 0
    assert np.all(np.diff(rec.states) != 0)
    assert rec.total_time == pytest.approx(500.0)
    assert np.all(rec.holds > 0)


def test_sample_chain_absorbing_error():
    with pytest.warns(UserWarning):
        Q = validate_rate_matrix([[-1, 1], [0, 0]])
    with pytest.raises(RateMatrixError, match="absorbing"):
        sample_chain(Q, 0, 10.0, seed=1)


def test_mean_holding_times():
    Q = validate_rate_matrix([[-1, 1], [2, -2]])
    rec = sample_chain(Q, 0, 50000.0, seed=7)
    # censor the final truncated hold
    states, holds = rec.states[:-1], rec.holds[:-1]
    for i, rate in ((0, 1.0), (1, 2.0)):
        mean = holds[states == i].mean()
        assert mean == pytest.approx(1.0 / rate, rel=0.02)


def test_ergodic_occupation_long_run():
    Q = validate_rate_matrix([[-1, 1], [2, -2]])
    rec = sample_chain(Q, 0, 1e5, seed=11)
    frac = rec.occupation_fractions(2)
    assert abs(frac[0] - 2 / 3) <= 1e-2


def test_scaled_chain_jump_sequence_distribution():
    # time-compressing a scaled chain leaves the jump-sequence law alone;
    # both embedded chains must match the exact transition matrix
    off = np.array([[0.0, 1.0, 0.4], [2.0, 0.0, 0.6], [0.3, 0.9, 0.0]])
    Q = off - np.diag(off.sum(axis=1))
    Q = validate_rate_matrix(Q)
    a = sample_chain(Q, 0, 80000.0, seed=21)
    b = sample_chain(scale(Q, 5.0), 0, 16000.0, seed=22)
    exact = off / off.sum(axis=1, keepdims=True)

    def transition_freqs(states):
        counts = np.zeros((3, 3))
        for u, v in zip(states[:-1], states[1:]):
            counts[u, v] += 1
        return counts / counts.sum(axis=1, keepdims=True)

    assert np.abs(transition_freqs(a.states) - exact).max() <= 1e-2
    assert np.abs(transition_freqs(b.states) - exact).max() <= 1e-2
