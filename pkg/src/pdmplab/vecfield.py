"""Evaluable vector fields with exact first derivatives.

A field is either affine (``A @ x + b``, derivatives read off the matrix)
or built from parsed expression trees, in which case directional
derivatives come from forward-mode dual numbers.  Dual numbers nest, so
derived fields (Lie brackets) can themselves be differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exprparse import ExprAst, ExprDomainError, eval_expr_generic, eval_expr_rows, parse_expr

__all__ = [
    "Dual",
    "DualVector",
    "VectorFieldSpec",
    "affine_field",
    "expression_field",
    "eval_field",
    "eval_field_rows",
    "jacobian",
    "divergence",
    "directional_derivative",
]


class Dual:
    """Forward-mode scalar: value + derivative along one direction.

    ``value`` and ``deriv`` may themselves be Duals, which is what makes
    nested differentiation (brackets of brackets) work.
    """

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv=0.0):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.deriv + other.deriv)
        return Dual(self.value + other, self.deriv)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.value, -self.deriv)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.deriv - other.deriv)
        return Dual(self.value - other, self.deriv)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.deriv)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.deriv * other.value + self.value * other.deriv,
            )
        return Dual(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.value
            return Dual(
                self.value * inv,
                (self.deriv * other.value - self.value * other.deriv) * inv * inv,
            )
        return Dual(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.value
        return Dual(other * inv, -other * self.deriv * inv * inv)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise ExprDomainError("dual power requires an integer exponent")
        if n == 0:
            return Dual(1.0, 0.0)
        base = self.value ** (n - 1)
        return Dual(base * self.value, n * base * self.deriv)

    def sin(self):
        return Dual(_sin(self.value), _cos(self.value) * self.deriv)

    def cos(self):
        return Dual(_cos(self.value), -_sin(self.value) * self.deriv)

    def exp(self):
        e = _exp(self.value)
        return Dual(e, e * self.deriv)

    def tanh(self):
        t = _tanh(self.value)
        return Dual(t, (1.0 - t * t) * self.deriv)


def _sin(x):
    return x.sin() if isinstance(x, Dual) else np.sin(x)


def _cos(x):
    return x.cos() if isinstance(x, Dual) else np.cos(x)


def _exp(x):
    return x.exp() if isinstance(x, Dual) else np.exp(x)


def _tanh(x):
    return x.tanh() if isinstance(x, Dual) else np.tanh(x)


def _primal(x):
    while isinstance(x, Dual):
        x = x.value
    return x


@dataclass(frozen=True)
class DualVector:
    """Value and directional derivative of a vector field at a point."""

    value: np.ndarray
    derivative: np.ndarray


@dataclass(frozen=True, eq=False)
class VectorFieldSpec:
    """One of the switchable fields v^i.

    Either ``matrix``/``offset`` are set (affine kind, evaluates exactly
    as A x + b) or ``components`` holds one expression tree per
    coordinate.  ``label`` is the 1-based state index the field is
    attached to.
    """

    dim: int
    label: int
    matrix: np.ndarray | None = None
    offset: np.ndarray | None = None
    components: tuple[ExprAst, ...] = field(default=())

    @property
    def is_affine(self) -> bool:
        return self.matrix is not None

    # -- evaluation ----------------------------------------------------

    def eval_generic(self, xs):
        """Evaluate with arbitrary scalar carriers (floats or Duals)."""
        if self.is_affine:
            A, b = self.matrix, self.offset
            return [
                sum((A[r, c] * xs[c] for c in range(self.dim)), b[r])
                for r in range(self.dim)
            ]
        return [eval_expr_generic(c, xs) for c in self.components]

    def eval_rows(self, rows: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an (N, d) array of points."""
        if self.is_affine:
            A, b = self.matrix, self.offset
            out = np.empty_like(rows)
            for r in range(self.dim):
                acc = rows[:, 0] * A[r, 0]
                for c in range(1, self.dim):
                    acc = acc + rows[:, c] * A[r, c]
                out[:, r] = acc + b[r]
            return out
        out = np.empty_like(rows)
        for r, comp in enumerate(self.components):
            out[:, r] = eval_expr_rows(comp, rows)
        return out


def affine_field(A, b=None, label: int = 1) -> VectorFieldSpec:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be a square matrix")
    d = A.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float)
    if b.shape != (d,):
        raise ValueError("b must have length matching A")
    A = A.copy()
    b = b.copy()
    A.flags.writeable = False
    b.flags.writeable = False
    return VectorFieldSpec(dim=d, label=label, matrix=A, offset=b)


def expression_field(components, dim: int, label: int = 1) -> VectorFieldSpec:
    """Build a field from ``dim`` component sources (strings or trees)."""
    trees = []
    for comp in components:
        tree = parse_expr(comp, dim) if isinstance(comp, str) else comp
        if tree.max_var_index() > dim:
            raise ValueError("component references a variable beyond dim")
        trees.append(tree)
    if len(trees) != dim:
        raise ValueError(f"need {dim} components, got {len(trees)}")
    return VectorFieldSpec(dim=dim, label=label, components=tuple(trees))


def eval_field(f, x) -> np.ndarray:
    """v(x) as a length-d array; raises ExprDomainError on bad evaluations."""
    x = np.asarray(x, dtype=float)
    out = np.array([_primal(v) for v in f.eval_generic(list(x))], dtype=float)
    if not np.all(np.isfinite(out)):
        raise ExprDomainError("vector field evaluated to a non-finite value")
    return out


def eval_field_rows(f, rows: np.ndarray) -> np.ndarray:
    return f.eval_rows(np.asarray(rows, dtype=float))


def directional_derivative(f, x, direction) -> DualVector:
    """Value and exact derivative of f along ``direction`` at ``x``."""
    xs = [Dual(float(xv), float(uv)) for xv, uv in zip(x, direction)]
    out = f.eval_generic(xs)
    value = np.array([_primal(o.value) if isinstance(o, Dual) else float(o) for o in out])
    deriv = np.array([_primal(o.deriv) if isinstance(o, Dual) else 0.0 for o in out])
    return DualVector(value=value, derivative=deriv)


def jacobian(f, x) -> np.ndarray:
    """d x d Jacobian; exact (returns A) for affine fields, otherwise one
    dual pass per basis direction."""
    if getattr(f, "is_affine", False):
        return np.array(f.matrix, dtype=float)
    x = np.asarray(x, dtype=float)
    d = len(x)
    J = np.empty((d, d))
    for c in range(d):
        e = np.zeros(d)
        e[c] = 1.0
        J[:, c] = directional_derivative(f, x, e).derivative
    return J


def divergence(f, x) -> float:
    """tr(Dv(x))."""
    return float(np.trace(jacobian(f, x)))
