"""Dense univariate polynomials over an exact or extended-precision field.

Coefficients are stored lowest degree first and may be ``int``/``Fraction``
(exact) or ``mpmath.mpf`` (extended precision).  Trailing zeros are trimmed,
so the zero polynomial has no coefficients and degree -1.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Sequence

__all__ = ["Poly"]


def _trim(coeffs: list) -> list:
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


class Poly:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        self.coeffs = tuple(_trim(list(coeffs)))

    @classmethod
    def monomial(cls, degree: int, coef=1) -> "Poly":
        return cls([0] * degree + [coef])

    @classmethod
    def x(cls) -> "Poly":
        return cls.monomial(1)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def __iter__(self):
        return iter(self.coeffs)

    def __repr__(self):
        return f"Poly({list(self.coeffs)!r})"

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        n = max(len(self), len(other))
        return Poly([self[k] + other[k] for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly([c * other for c in self.coeffs])
        if not self or not other:
            return Poly()
        out = [0] * (len(self) + len(other) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, int):
            scalar = Fraction(scalar)
        return Poly([c / scalar for c in self.coeffs])

    def __pow__(self, k: int):
        out = Poly([1])
        for _ in range(k):
            out = out * self
        return out

    # calculus -------------------------------------------------------------
    def deriv(self, order: int = 1) -> "Poly":
        c = list(self.coeffs)
        for _ in range(order):
            c = [k * c[k] for k in range(1, len(c))]
        return Poly(c)

    def antideriv(self, constant=0) -> "Poly":
        """Term-wise antiderivative with value ``constant`` at 0."""
        out = [constant]
        for k, c in enumerate(self.coeffs):
            out.append(c / Fraction(k + 1) if isinstance(c, (int, Fraction)) else c / (k + 1))
        return Poly(out)

    # evaluation and conversion -----------------------------------------------
    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def map(self, fn: Callable) -> "Poly":
        return Poly([fn(c) for c in self.coeffs])

    def float_coeffs(self) -> list[float]:
        return [float(c) for c in self.coeffs]

    def scale_arg(self, factor) -> "Poly":
        """p(factor * x)."""
        out = []
        power = factor ** 0
        for c in self.coeffs:
            out.append(c * power)
            power = power * factor
        return Poly(out)

    def truncate(self, degree: int) -> "Poly":
        return Poly(self.coeffs[: degree + 1])

    def is_even(self) -> bool:
        return all(c == 0 for c in self.coeffs[1::2])

    def is_odd(self) -> bool:
        return all(c == 0 for c in self.coeffs[0::2])

    @classmethod
    def from_sequence(cls, coeffs: Sequence) -> "Poly":
        return cls(coeffs)
