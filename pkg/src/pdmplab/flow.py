"""Flow maps of the switchable fields.

Fixed-step classical RK4 with exact landing on the requested time (the
final partial step is shortened, never overshoot), an exact oracle for
affine fields via the augmented matrix exponential, composite maps along
a state word, and density transport along a realized switching record.
Negative times integrate the reversed field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vecfield import eval_field, jacobian

__all__ = [
    "FlowResult",
    "FlowError",
    "flow",
    "flow_rows",
    "affine_flow",
    "composite_flow",
    "reversed_word",
    "transport_density",
    "DEFAULT_STEP",
]

DEFAULT_STEP = 1e-3


class FlowError(RuntimeError):
    """Non-finite state encountered during integration."""


@dataclass(frozen=True, eq=False)
class FlowResult:
    endpoint: np.ndarray
    jacobian: np.ndarray | None = None
    log_jacobian_det: float | None = None


def _steps(t: float, step: float):
    """Yield signed sub-steps covering t exactly."""
    if t == 0.0:
        return
    sign = 1.0 if t > 0 else -1.0
    remaining = abs(t)
    n_full = int(remaining / step)
    tail = remaining - n_full * step
    for _ in range(n_full):
        yield sign * step
    if tail > 1e-15 * max(1.0, remaining):
        yield sign * tail


def _rk4_point(f, x, h):
    k1 = eval_field(f, x)
    k2 = eval_field(f, x + (0.5 * h) * k1)
    k3 = eval_field(f, x + (0.5 * h) * k2)
    k4 = eval_field(f, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_point_jac(f, x, Y, h):
    # variational equation dY = Dv(x) Y integrated with the same stages
    k1 = eval_field(f, x)
    K1 = jacobian(f, x) @ Y
    x2 = x + (0.5 * h) * k1
    k2 = eval_field(f, x2)
    K2 = jacobian(f, x2) @ (Y + (0.5 * h) * K1)
    x3 = x + (0.5 * h) * k2
    k3 = eval_field(f, x3)
    K3 = jacobian(f, x3) @ (Y + (0.5 * h) * K2)
    x4 = x + h * k3
    k4 = eval_field(f, x4)
    K4 = jacobian(f, x4) @ (Y + h * K3)
    return (
        x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4),
        Y + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4),
    )


def flow(f, x, t: float, step: float = DEFAULT_STEP, with_jacobian: bool = False) -> FlowResult:
    """phi^f_t(x) by fixed-step RK4; t < 0 runs the reversed field."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float).copy()
    if with_jacobian:
        Y = np.eye(len(x))
        for h in _steps(t, step):
            x, Y = _rk4_point_jac(f, x, Y, h)
            if not np.all(np.isfinite(x)):
                raise FlowError("non-finite state during flow integration")
        sign, logdet = np.linalg.slogdet(Y)
        if sign <= 0:
            raise FlowError("flow Jacobian lost orientation (step too large)")
        return FlowResult(endpoint=x, jacobian=Y, log_jacobian_det=float(logdet))
    for h in _steps(t, step):
        x = _rk4_point(f, x, h)
        if not np.all(np.isfinite(x)):
            raise FlowError("non-finite state during flow integration")
    return FlowResult(endpoint=x)


def flow_rows(f, X: np.ndarray, t: float, step: float = DEFAULT_STEP) -> np.ndarray:
    """Flow a whole cloud of points (N, d) by the same duration."""
    X = np.array(X, dtype=float)
    for h in _steps(t, step):
        k1 = f.eval_rows(X)
        k2 = f.eval_rows(X + (0.5 * h) * k1)
        k3 = f.eval_rows(X + (0.5 * h) * k2)
        k4 = f.eval_rows(X + h * k3)
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(X)):
        raise FlowError("non-finite state during cloud flow")
    return X


def _expm_taylor(M: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring of the Taylor series."""
    norm = float(np.abs(M).sum(axis=1).max())
    squarings = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    S = M / (2.0 ** squarings)
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, 40):
        term = term @ S / k
        out = out + term
        if float(np.abs(term).max()) < 1e-18:
            break
    for _ in range(squarings):
        out = out @ out
    return out


def affine_flow(A, b, x, t: float) -> FlowResult:
    """Exact flow of v(x) = A x + b: endpoint e^{tA} x + (int_0^t e^{sA} ds) b,
    computed from the exponential of the augmented (d+1)x(d+1) matrix."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    aug = np.zeros((d + 1, d + 1))
    aug[:d, :d] = A * t
    aug[:d, d] = b * t
    E = _expm_taylor(aug)
    J = E[:d, :d]
    endpoint = J @ x + E[:d, d]
    sign, logdet = np.linalg.slogdet(J)
    return FlowResult(endpoint=endpoint, jacobian=J, log_jacobian_det=float(logdet))


def composite_flow(fields, states, times, x, step: float = DEFAULT_STEP,
                   with_jacobian: bool = False) -> FlowResult:
    """Phi^i(x, t): flow along fields[states[0]] for times[0], then the
    next, left to right.  Jacobian is chained across segments.  Negative
    segment times run the corresponding reversed flow (used for the
    reversal identity Phi^{-i}(., -t))."""
    if len(states) != len(times):
        raise ValueError("states and times must have equal length")
    x = np.asarray(x, dtype=float)
    if with_jacobian:
        J = np.eye(len(x))
        logdet = 0.0
        for i, t in zip(states, times):
            res = flow(fields[i], x, t, step, with_jacobian=True)
            x = res.endpoint
            J = res.jacobian @ J
            logdet += res.log_jacobian_det
        return FlowResult(endpoint=x, jacobian=J, log_jacobian_det=logdet)
    for i, t in zip(states, times):
        x = flow(fields[i], x, t, step).endpoint
    return FlowResult(endpoint=x)


def reversed_word(states, times):
    """The word whose composite undoes (states, times)."""
    return list(states)[::-1], [-t for t in list(times)[::-1]]


def transport_density(fields, record, rho0, y, step: float = DEFAULT_STEP) -> float:
    """Density at y after pushing rho0 forward along the record.

    The pushforward density is det(D psi^{-1}(y)) * rho0(psi^{-1}(y))
    where psi is the composite forward map of the record; the inverse is
    the reversed composite, and its Jacobian determinant comes from the
    chained variational equation.
    """
    states, times = reversed_word(list(record.states), list(record.holds))
    res = composite_flow(fields, states, times, y, step, with_jacobian=True)
    return float(np.exp(res.log_jacobian_det)) * float(rho0(res.endpoint))
