import numpy as np
import pytest

from pdmplab.rotcontract import make_rate_matrix
from pdmplab.singularity import (
    GammaCandidate,
    blowup_exponent,
    check_backward_invariance,
    compute_R,
    full_verdict,
)
from pdmplab.vecfield import affine_field, expression_field


def test_backward_invariance_equilibria(rc_fields):
    v, w = rc_fields
    origin = GammaCandidate(points=[[0.0, 0.0]], state=0)
    ok, dev = check_backward_invariance(origin, v, t_max=3.0, tol=1e-6)
    assert ok and dev <= 1e-9

    e0 = GammaCandidate(points=[[1.0, 0.0]], state=1)
    ok, _ = check_backward_invariance(e0, w, t_max=3.0, tol=1e-6)
    assert ok


def test_backward_invariance_fails_off_equilibrium(rc_fields):
    # backward flow of w from 0 runs along e0 + e^t (0 - e0), leaving 0
    _, w = rc_fields
    origin = GammaCandidate(points=[[0.0, 0.0]], state=1)
    ok, dev = check_backward_invariance(origin, w, t_max=2.0, tol=1e-3)
    assert not ok
    assert dev == pytest.approx(np.exp(2.0) - 1.0, rel=1e-6)


def test_compute_R_examples(rc_fields):
    v, w = rc_fields
    assert compute_R([[0.0, 0.0]], v) == 2.0
    assert compute_R([[0.33, -0.7]], w) == 2.0
    expanding = affine_field(np.eye(2), label=1)
    assert compute_R([[0.1, 0.1]], expanding) == -2.0


def test_compute_R_affine_trace_constant(rc_fields, rng):
    v, _ = rc_fields
    pts = rng.uniform(-1, 1, size=(7, 2))
    assert compute_R(pts, v) == 2.0  # exact: trace of A is constant


def test_full_verdict_slow_switching(rc_fields, rc_box):
    v, w = rc_fields
    Q = make_rate_matrix(q1=1.5, q2=2.0)
    cand = GammaCandidate(points=[[0.0, 0.0]], state=0, neighborhood_radius=0.2)
    verdict = full_verdict(cand, (v, w), Q, rc_box,
                           accessibility_trials=40,
                           accessibility_horizon=25.0, seed=3)
    assert verdict.R == 2.0
    assert verdict.minus_Q_ii == 1.5
    assert verdict.inequality_holds
    assert all(verdict.clauses.values())
    assert verdict.prediction == "blow-up expected"
    assert verdict.accessibility_note == "witnessed"


def test_full_verdict_fast_switching_no_prediction(rc_fields, rc_box):
    v, w = rc_fields
    Q = make_rate_matrix(q1=10.0, q2=2.0)
    cand = GammaCandidate(points=[[0.0, 0.0]], state=0, neighborhood_radius=0.2)
    verdict = full_verdict(cand, (v, w), Q, rc_box,
                           accessibility_trials=20,
                           accessibility_horizon=15.0, seed=3)
    assert not verdict.inequality_holds
    assert verdict.prediction == "no prediction"


def test_full_verdict_positive_divergence(rc_fields, rc_box):
    v, w = rc_fields
    expanding = affine_field(np.eye(2) * 0.5, label=1)
    Q = make_rate_matrix(1.0, 1.0)
    cand = GammaCandidate(points=[[0.0, 0.0]], state=0)
    verdict = full_verdict(cand, (expanding, w), Q, rc_box,
                           accessibility_trials=10,
                           accessibility_horizon=5.0, seed=4)
    assert not verdict.clauses["negative_divergence"]
    assert verdict.R < 0
    assert verdict.prediction == "no prediction"


def test_full_verdict_monotone_in_exit_rate(rc_fields, rc_box):
    # if blow-up is predicted at -Q_11, it stays predicted for any
    # slower exit rate out of that state
    v, w = rc_fields
    cand = GammaCandidate(points=[[0.0, 0.0]], state=0, neighborhood_radius=0.2)
    kw = dict(accessibility_trials=30, accessibility_horizon=25.0, seed=5)
    base = full_verdict(cand, (v, w), make_rate_matrix(1.8, 2.0), rc_box, **kw)
    slower = full_verdict(cand, (v, w), make_rate_matrix(0.7, 2.0), rc_box, **kw)
    assert base.prediction == "blow-up expected"
    assert slower.prediction == "blow-up expected"
    assert slower.minus_Q_ii < base.minus_Q_ii


def test_blowup_exponent_critical_linear(rc_fields):
    # at the critical rate -Q_11 = R = 2 the exponent vanishes identically
    v, _ = rc_fields
    Q = make_rate_matrix(q1=2.0, q2=2.0)
    samples = blowup_exponent(np.zeros(2), v, Q, state=0, s_max=4.0)
    assert samples[0, 0] == 0.0 and samples[0, 1] == 0.0
    assert np.abs(samples[:, 1]).max() <= 1e-9


@pytest.mark.parametrize("q1,slope", [(1.0, 1.0), (4.0, -2.0)])
def test_blowup_exponent_linear_rates(rc_fields, q1, slope):
    v, _ = rc_fields
    Q = make_rate_matrix(q1=q1, q2=2.0)
    samples = blowup_exponent(np.zeros(2), v, Q, state=0, s_max=3.0)
    assert np.abs(samples[:, 1] - slope * samples[:, 0]).max() <= 1e-9


def test_blowup_exponent_zero_at_zero_everywhere(rng):
    f = expression_field(["-x1 + 0.2*sin(x2)", "-x2"], 2)
    Q = make_rate_matrix(1.3, 0.9)
    y = rng.uniform(-0.3, 0.3, size=2)
    samples = blowup_exponent(y, f, Q, state=0, s_max=1.0, n_samples=8)
    assert samples[0, 1] == 0.0


def test_blowup_exponent_nonconstant_trace():
    # field with divergence -2 - x1: along the backward orbit from y with
    # x2-dynamics decoupled the trace integral differs from -2s
    f = expression_field(["-x1 - 0.5*x1^2", "-x2"], 2)
    Q = make_rate_matrix(2.0, 1.0)
    y = np.array([0.4, 0.0])
    samples = blowup_exponent(y, f, Q, state=0, s_max=0.5, n_samples=4,
                              step=1e-3)
    # oracle by fine quadrature of the divergence along the backward orbit
    from pdmplab.flow import flow
    from pdmplab.vecfield import divergence

    s_grid = samples[:, 0]
    for s, val in samples[1:]:
        rs = np.linspace(0, s, 401)
        trs = []
        for r in rs:
            pt = flow(f, y, -r, step=1e-3).endpoint
            trs.append(divergence(f, pt))
        integral = np.trapezoid(trs, rs)
        assert val == pytest.approx(Q.Q[0, 0] * s - integral, abs=1e-6)


def test_candidate_validation():
    with pytest.raises(ValueError):
        GammaCandidate(points=np.zeros((0, 2)), state=0)
