import numpy as np
import pytest
import scipy.linalg

from pdmplab.flow import (
    affine_flow,
    composite_flow,
    flow,
    flow_rows,
    reversed_word,
    transport_density,
)
from pdmplab.switching import SwitchingRecord
from pdmplab.vecfield import affine_field, expression_field


def test_pure_contraction_closed_form(rc_fields):
    _, w = rc_fields
    e0 = np.array([1.0, 0.0])
    x = np.array([-0.4, 0.7])
    for t in (0.5, 2.0, 7.0):
        res = flow(w, x, t, step=1e-3)
        expected = e0 + np.exp(-t) * (x - e0)
        assert np.abs(res.endpoint - expected).max() < 1e-10


def test_spiral_closed_form(rc_fields):
    # e^{tA} = e^{-t} (rotation), so from e_0 at t=pi the state is (-e^-pi, 0)
    v, _ = rc_fields
    res = flow(v, [1.0, 0.0], np.pi, step=1e-3)
    assert np.abs(res.endpoint - [-np.exp(-np.pi), 0.0]).max() < 1e-9


def test_zero_time_identity(rc_fields):
    v, _ = rc_fields
    res = flow(v, [0.3, 0.4], 0.0, step=1e-3, with_jacobian=True)
    assert np.array_equal(res.endpoint, [0.3, 0.4])
    assert np.array_equal(res.jacobian, np.eye(2))
    assert res.log_jacobian_det == 0.0


def test_negative_time_reverses(rc_fields):
    _, w = rc_fields
    x = np.array([0.2, -0.3])
    fwd = flow(w, x, 1.3, step=1e-3).endpoint
    back = flow(w, fwd, -1.3, step=1e-3).endpoint
    assert np.abs(back - x).max() < 1e-9


def test_affine_flow_translation():
    res = affine_flow(np.zeros((2, 2)), [1.0, 0.0], [0.0, 0.0], 2.0)
    assert np.abs(res.endpoint - [2.0, 0.0]).max() < 1e-14
    assert np.abs(res.jacobian - np.eye(2)).max() < 1e-14


def test_affine_flow_spiral_and_liouville(rc_fields):
    v, _ = rc_fields
    res = affine_flow(v.matrix, v.offset, [1.0, 0.0], np.pi)
    assert np.abs(res.endpoint - [-np.exp(-np.pi), 0.0]).max() < 1e-12
    # det(e^{tA}) = e^{t tr A} = e^{-2t}
    for t in (0.3, 1.7, 5.0):
        r = affine_flow(v.matrix, v.offset, [0.2, 0.1], t)
        assert np.linalg.det(r.jacobian) == pytest.approx(np.exp(-2 * t), rel=1e-12)
        assert r.log_jacobian_det == pytest.approx(-2 * t, abs=1e-12)


def test_affine_flow_matches_scipy_expm(rng):
    for _ in range(25):
        A = rng.uniform(-1.5, 1.5, size=(3, 3))
        b = rng.uniform(-1, 1, size=3)
        x = rng.uniform(-1, 1, size=3)
        t = rng.uniform(-4, 4)
        res = affine_flow(A, b, x, t)
        aug = np.zeros((4, 4))
        aug[:3, :3] = A * t
        aug[:3, 3] = b * t
        E = scipy.linalg.expm(aug)
        expected = E[:3, :3] @ x + E[:3, 3]
        scale = max(1.0, float(np.abs(E).max()))
        assert np.abs(res.endpoint - expected).max() < 1e-12 * scale
        assert np.abs(res.jacobian - E[:3, :3]).max() < 1e-12 * scale


def test_rk4_matches_affine_oracle(rc_fields, rng):
    v, w = rc_fields
    worst = 0.0
    for _ in range(30):
        f = v if rng.random() < 0.5 else w
        x = rng.uniform(-1, 1, size=2)
        t = rng.uniform(-10, 10)
        rk = flow(f, x, t, step=1e-3).endpoint
        exact = affine_flow(f.matrix, f.offset, x, t).endpoint
        worst = max(worst, float(np.abs(rk - exact).max()))
    assert worst <= 1e-8


def test_convergence_order_fourth(rng):
    f = expression_field(["-x2 + 0.3*sin(x1)", "x1 - 0.25*x2^3"], 2)
    x = np.array([0.7, -0.2])
    t = 2.0
    ref = flow(f, x, t, step=t / 100000).endpoint
    errs = []
    for h in (0.05, 0.025, 0.0125):
        errs.append(np.linalg.norm(flow(f, x, t, step=h).endpoint - ref))
    orders = [np.log2(errs[k] / errs[k + 1]) for k in range(2)]
    for order in orders:
        assert order == pytest.approx(4.0, abs=0.3)


def test_composite_single_segment_equals_flow(rc_fields):
    v, w = rc_fields
    x = np.array([0.1, 0.2])
    a = composite_flow((v, w), [0], [1.1], x, step=1e-3).endpoint
    b = flow(v, x, 1.1, step=1e-3).endpoint
    assert np.array_equal(a, b)


def test_composite_semigroup(rc_fields):
    v, w = rc_fields
    x = np.array([0.4, -0.1])
    one = composite_flow((v, w), [0], [1.5], x, step=1e-3).endpoint
    two = composite_flow((v, w), [0, 0], [0.6, 0.9], x, step=1e-3).endpoint
    assert np.abs(one - two).max() < 1e-12


def test_composite_reversal_roundtrip(rc_fields, rng):
    v, w = rc_fields
    fields = (v, w)
    for _ in range(10):
        L = rng.integers(1, 6)
        states = rng.integers(0, 2, size=L).tolist()
        times = rng.uniform(0.05, 1.0, size=L).tolist()
        x = rng.uniform(-0.5, 0.5, size=2)
        fwd = composite_flow(fields, states, times, x, step=1e-3).endpoint
        rs, rt = reversed_word(states, times)
        back = composite_flow(fields, rs, rt, fwd, step=1e-3).endpoint
        assert np.linalg.norm(back - x) <= 1e-6


def test_composite_jacobian_chain(rc_fields):
    v, w = rc_fields
    x = np.array([0.3, 0.3])
    res = composite_flow((v, w), [0, 1], [0.7, 0.4], x, step=1e-3,
                         with_jacobian=True)
    Jv = affine_flow(v.matrix, v.offset, x, 0.7).jacobian
    mid = affine_flow(v.matrix, v.offset, x, 0.7).endpoint
    Jw = affine_flow(w.matrix, w.offset, mid, 0.4).jacobian
    assert np.abs(res.jacobian - Jw @ Jv).max() < 1e-9
    sign, logdet = np.linalg.slogdet(Jw @ Jv)
    assert res.log_jacobian_det == pytest.approx(logdet, abs=1e-9)


def test_liouville_logdet_vs_trace_quadrature(rng):
    # the variational log-determinant equals the time integral of the
    # divergence along the same path (independent augmented integration)
    from pdmplab.vecfield import divergence, eval_field

    f = expression_field(["-x2 + 0.3*sin(x1)", "x1 - 0.2*x2^3"], 2)
    for _ in range(5):
        x = rng.uniform(-0.8, 0.8, size=2)
        t = rng.uniform(0.5, 3.0)
        res = flow(f, x, t, step=1e-3, with_jacobian=True)
        h = 1e-3
        y = x.copy()
        acc = 0.0
        remaining = t
        while remaining > 1e-12:
            hh = min(h, remaining)
            k1, d1 = eval_field(f, y), divergence(f, y)
            y2 = y + 0.5 * hh * k1
            k2, d2 = eval_field(f, y2), divergence(f, y2)
            y3 = y + 0.5 * hh * k2
            k3, d3 = eval_field(f, y3), divergence(f, y3)
            y4 = y + hh * k3
            k4, d4 = eval_field(f, y4), divergence(f, y4)
            y = y + (hh / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            acc += (hh / 6) * (d1 + 2 * d2 + 2 * d3 + d4)
            remaining -= hh
        assert res.log_jacobian_det == pytest.approx(acc, abs=1e-6)


def test_flow_rows_matches_scalar(rc_fields):
    v, _ = rc_fields
    pts = np.random.default_rng(1).uniform(-0.7, 0.7, size=(16, 2))
    cloud = flow_rows(v, pts, 1.2, step=1e-2)
    for k in range(16):
        single = flow(v, pts[k], 1.2, step=1e-2).endpoint
        assert np.abs(cloud[k] - single).max() < 1e-12


def test_transport_density_contraction(rc_fields):
    _, w = rc_fields
    rec = SwitchingRecord(states=np.array([1]), holds=np.array([0.8]),
                          start_state=1)
    val = transport_density((None, w), rec, lambda y: 3.0, np.array([0.9, 0.05]),
                            step=1e-3)
    assert val == pytest.approx(3.0 * np.exp(2 * 0.8), rel=1e-8)


def test_transport_density_identity():
    w = affine_field(-np.eye(2), [1.0, 0.0], label=2)
    rec = SwitchingRecord(states=np.array([0]), holds=np.array([0.0]),
                          start_state=0)
    rho = lambda y: float(np.exp(-np.sum(y**2)))
    y = np.array([0.3, -0.2])
    assert transport_density((w,), rec, rho, y, step=1e-3) == rho(y)


def test_transport_density_mass_conservation(rc_fields):
    # quadrature oracle: the pushforward of a gaussian keeps unit mass
    v, w = rc_fields
    fields = (v, w)
    rec = SwitchingRecord(states=np.array([0, 1]), holds=np.array([0.3, 0.4]),
                          start_state=0)
    sigma = 0.35

    def rho(y):
        return float(np.exp(-np.sum(y**2) / (2 * sigma**2))
                     / (2 * np.pi * sigma**2))

    n = 90
    lim = 2.2
    xs = np.linspace(-lim, lim, n, endpoint=False) + lim / n
    cell = (2 * lim / n) ** 2
    mass = 0.0
    for xv in xs:
        for yv in xs:
            mass += transport_density(fields, rec, rho, np.array([xv, yv]),
                                      step=2e-2) * cell
    assert mass == pytest.approx(1.0, abs=0.01)
