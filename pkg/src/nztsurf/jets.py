"""Truncated-Taylor scalars for forward-mode automatic differentiation.

A :class:`Jet` holds the coefficients ``c[0..K]`` of a truncated Taylor
series ``f(t) = c0 + c1 t + ... + cK t^K``; arithmetic propagates them
through arbitrary expressions, so ``k! * c[k]`` is the k-th derivative
along the seeded direction. Coefficients may be floats, numpy arrays
(for batched evaluation over many points at once), or again Jets, which
gives nested/higher-order differentiation without symbolic algebra.

Only the operations needed by the geometry and manufactured-solution
pipelines are provided: + - * / ** sqrt sin cos.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Jet", "variable", "constant", "value", "coefficient",
           "jsqrt", "jsin", "jcos"]


def _sqrt(v):
    if isinstance(v, Jet):
        return jsqrt(v)
    return np.sqrt(v)


def _sincos(v):
    if isinstance(v, Jet):
        return jsin(v), jcos(v)
    return np.sin(v), np.cos(v)


class Jet:
    """Truncated Taylor series with generic coefficients."""

    __slots__ = ("c",)
    # make numpy defer to the reflected operators instead of building
    # object arrays when an ndarray meets a Jet
    __array_ufunc__ = None

    def __init__(self, coeffs):
        self.c = tuple(coeffs)

    @property
    def order(self):
        return len(self.c) - 1

    def _coerce(self, other):
        """Lift a non-Jet operand to a constant Jet of matching order."""
        if isinstance(other, Jet):
            if len(other.c) != len(self.c):
                raise ValueError("jet order mismatch")
            return other
        return Jet((other,) + (0.0,) * self.order)

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(a + b for a, b in zip(self.c, o.c))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-a for a in self.c)

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet(a - b for a, b in zip(self.c, o.c))

    def __rsub__(self, other):
        o = self._coerce(other)
        return Jet(b - a for a, b in zip(self.c, o.c))

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(a * other for a in self.c)
        if len(other.c) != len(self.c):
            raise ValueError("jet order mismatch")
        a, b = self.c, other.c
        return Jet(sum(a[i] * b[k - i] for i in range(k + 1))
                   for k in range(len(a)))

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.c
        b = [1.0 / a[0]]
        for k in range(1, len(a)):
            s = sum(a[i] * b[k - i] for i in range(1, k + 1))
            b.append(-s * b[0])
        return Jet(b)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(a / other for a in self.c)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("jet powers must be nonnegative integers")
        out = Jet((1.0,) + (0.0,) * self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __repr__(self):
        return f"Jet{self.c!r}"


def variable(x0, order):
    """Jet for the seed ``x0 + t`` (unit first coefficient)."""
    return Jet((x0, 1.0) + (0.0,) * (order - 1))


def constant(x0, order):
    return Jet((x0,) + (0.0,) * order)


def value(x):
    """Innermost zeroth coefficient of a possibly nested Jet."""
    while isinstance(x, Jet):
        x = x.c[0]
    return x


def coefficient(x, k):
    """k-th Taylor coefficient; the k-th derivative is ``k! * coefficient``."""
    return x.c[k] if isinstance(x, Jet) else (x if k == 0 else 0.0)


def jsqrt(x):
    if not isinstance(x, Jet):
        return np.sqrt(x)
    a = x.c
    b = [_sqrt(a[0])]
    half_inv = 0.5 / b[0]
    for k in range(1, len(a)):
        s = sum(b[i] * b[k - i] for i in range(1, k))
        b.append((a[k] - s) * half_inv)
    return Jet(b)


def jsin(x):
    return _sincos_series(x)[0]


def jcos(x):
    return _sincos_series(x)[1]


def _sincos_series(x):
    if not isinstance(x, Jet):
        return np.sin(x), np.cos(x)
    a = x.c
    s0, c0 = _sincos(a[0])
    s, c = [s0], [c0]
    # s' = c a', c' = -s a'  =>  coefficient recursions
    for k in range(1, len(a)):
        sk = sum(j * a[j] * c[k - j] for j in range(1, k + 1)) * (1.0 / k)
        ck = -sum(j * a[j] * s[k - j] for j in range(1, k + 1)) * (1.0 / k)
        s.append(sk)
        c.append(ck)
    return Jet(s), Jet(c)
