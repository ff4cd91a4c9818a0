"""Forward-mode dual-number arithmetic.

A :class:`Dual` carries a value and one partial derivative per active
direction. Values and partials may themselves be duals: a dual whose
components are first-order duals is a second-order (nested) dual, which is
how mixed second derivatives such as ``d/dpsi (df/dx)`` are obtained.

Model evaluators are written once against the :data:`Scalar` union and the
module-level :func:`sin`, :func:`cos` helpers, and run unchanged over plain
floats, first-order and nested duals.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Union

from pkcontrol.core.errors import InvalidParameterError, SingularMatrixError

Scalar = Union[float, "Dual"]

PIVOT_RATIO = 1e-12


class Dual:
    """Scalar dual number with a fixed number of derivative directions."""

    __slots__ = ("partials", "value")

    def __init__(self, value: Scalar, partials: Sequence[Scalar]) -> None:
        self.value = value
        self.partials = tuple(partials)

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.partials!r})"

    @property
    def order(self) -> int:
        """Nesting depth: 1 for first-order duals, 2 for nested duals."""
        return 1 + (self.value.order if isinstance(self.value, Dual) else 0)

    def _check(self, other: Dual) -> None:
        if len(other.partials) != len(self.partials):
            raise InvalidParameterError(
                f"dual direction count mismatch: {len(self.partials)} vs {len(other.partials)}"
            )

    def __add__(self, other: Scalar) -> Dual:
        if isinstance(other, Dual):
            self._check(other)
            return Dual(
                self.value + other.value,
                tuple(p + q for p, q in zip(self.partials, other.partials, strict=True)),
            )
        return Dual(self.value + other, self.partials)

    __radd__ = __add__

    def __neg__(self) -> Dual:
        return Dual(-self.value, tuple(-p for p in self.partials))

    def __pos__(self) -> Dual:
        return self

    def __sub__(self, other: Scalar) -> Dual:
        if isinstance(other, Dual):
            self._check(other)
            return Dual(
                self.value - other.value,
                tuple(p - q for p, q in zip(self.partials, other.partials, strict=True)),
            )
        return Dual(self.value - other, self.partials)

    def __rsub__(self, other: Scalar) -> Dual:
        return Dual(other - self.value, tuple(-p for p in self.partials))

    def __mul__(self, other: Scalar) -> Dual:
        if isinstance(other, Dual):
            self._check(other)
            a, b = self.value, other.value
            return Dual(
                a * b,
                tuple(a * q + p * b for p, q in zip(self.partials, other.partials, strict=True)),
            )
        return Dual(self.value * other, tuple(p * other for p in self.partials))

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> Dual:
        if isinstance(other, Dual):
            self._check(other)
            inv = 1.0 / other.value
            quotient = self.value * inv
            return Dual(
                quotient,
                tuple(
                    (p - quotient * q) * inv
                    for p, q in zip(self.partials, other.partials, strict=True)
                ),
            )
        inv_const = 1.0 / other
        return Dual(self.value * inv_const, tuple(p * inv_const for p in self.partials))

    def __rtruediv__(self, other: Scalar) -> Dual:
        inv = 1.0 / self.value
        quotient = other * inv
        return Dual(quotient, tuple(-quotient * p * inv for p in self.partials))

    def __pow__(self, exponent: float) -> Dual:
        if isinstance(exponent, Dual):
            raise TypeError("dual exponents are not supported")
        if exponent == 0:
            return Dual(1.0, tuple(0.0 * p for p in self.partials))
        slope = exponent * self.value ** (exponent - 1)
        return Dual(self.value**exponent, tuple(slope * p for p in self.partials))


def sin(x: Scalar) -> Scalar:
    """Sine over floats and (nested) duals."""
    if isinstance(x, Dual):
        c = cos(x.value)
        return Dual(sin(x.value), tuple(c * p for p in x.partials))
    return math.sin(x)


def cos(x: Scalar) -> Scalar:
    """Cosine over floats and (nested) duals."""
    if isinstance(x, Dual):
        s = sin(x.value)
        return Dual(cos(x.value), tuple(-s * p for p in x.partials))
    return math.cos(x)


def real(x: Scalar) -> float:
    """Innermost real value of a float or (nested) dual."""
    while isinstance(x, Dual):
        x = x.value
    return float(x)


def variable(value: float, direction: int, n_dirs: int) -> Dual:
    """First-order dual seeded along ``direction`` of ``n_dirs``."""
    return Dual(value, tuple(1.0 if k == direction else 0.0 for k in range(n_dirs)))


def nested_variable(
    value: float,
    inner: int | None,
    n_inner: int,
    outer: int | None,
    n_outer: int,
) -> Dual:
    """Second-order dual seeded along one inner and/or one outer direction.

    ``inner`` indexes the differentiation variables of the first derivative
    (for example state and control coordinates); ``outer`` indexes the
    parameters the first derivative is in turn differentiated by. Pass None
    for a direction the value does not depend on.
    """
    zeros = (0.0,) * n_inner
    inner_value = variable(value, inner, n_inner) if inner is not None else Dual(value, zeros)
    outer_partials = tuple(Dual(1.0 if k == outer else 0.0, zeros) for k in range(n_outer))
    return Dual(inner_value, outer_partials)


def partials_of(x: Scalar, n_dirs: int) -> tuple[Scalar, ...]:
    """Partials of ``x``, treating plain numbers as constants."""
    if isinstance(x, Dual):
        return x.partials
    return (0.0,) * n_dirs


def value_of(x: Scalar) -> Scalar:
    """One level of value extraction; plain numbers pass through."""
    return x.value if isinstance(x, Dual) else x


def solve_dense(matrix: Sequence[Sequence[Scalar]], rhs: Sequence[Scalar]) -> list[Scalar]:
    """Gaussian elimination with partial pivoting over dual scalars.

    Pivots are chosen on the real part. Used for the small mass-matrix solves
    inside model evaluators, so derivatives flow through the solution.

    Raises:
        SingularMatrixError: If a pivot falls below ``1e-12`` times the
            largest real entry of the matrix.
    """
    n = len(rhs)
    rows = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    if any(len(row) != n + 1 for row in rows):
        raise InvalidParameterError("dense solve needs a square matrix")
    scale = max((abs(real(entry)) for row in matrix for entry in row), default=0.0)
    if scale == 0.0:
        raise SingularMatrixError("mass matrix is zero")

    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(real(rows[r][col])))
        if abs(real(rows[pivot_row][col])) < PIVOT_RATIO * scale:
            raise SingularMatrixError(f"singular mass matrix at column {col}")
        rows[col], rows[pivot_row] = rows[pivot_row], rows[col]
        pivot = rows[col][col]
        for r in range(col + 1, n):
            factor = rows[r][col] / pivot
            rows[r] = [rows[r][k] - factor * rows[col][k] for k in range(n + 1)]

    solution: list[Scalar] = [0.0] * n
    for i in range(n - 1, -1, -1):
        acc = rows[i][n]
        for k in range(i + 1, n):
            acc = acc - rows[i][k] * solution[k]
        solution[i] = acc / rows[i][i]
    return solution
