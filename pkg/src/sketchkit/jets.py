"""First-order forward-mode scalars for assembling residual Jacobians.

A Jet carries a value and its gradient with respect to a small block of
local variables. Residual formulas are written once against ordinary
arithmetic; evaluated on floats they produce residual values, evaluated
on Jets they produce exact derivatives via the chain rule.
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    __slots__ = ("val", "grad")

    def __init__(self, val: float, grad: np.ndarray):
        self.val = val
        self.grad = grad

    @staticmethod
    def variable(val: float, index: int, width: int) -> "Jet":
        grad = np.zeros(width)
        grad[index] = 1.0
        return Jet(float(val), grad)

    @staticmethod
    def constant(val: float, width: int) -> "Jet":
        return Jet(float(val), np.zeros(width))

    def __repr__(self):
        return f"Jet({self.val!r})"

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad)
        return Jet(self.val + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.grad - other.grad)
        return Jet(self.val - other, self.grad)

    def __rsub__(self, other):
        return Jet(other - self.val, -self.grad)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val * other.val, self.val * other.grad + other.val * self.grad)
        return Jet(self.val * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            inv = 1.0 / other.val
            return Jet(self.val * inv, (self.grad - self.val * inv * other.grad) * inv)
        return Jet(self.val / other, self.grad / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        return Jet(other * inv, -other * inv * inv * self.grad)

    def __neg__(self):
        return Jet(-self.val, -self.grad)

    def __abs__(self):
        return Jet(-self.val, -self.grad) if self.val < 0 else self

    def __lt__(self, other):
        return self.val < _value(other)

    def __le__(self, other):
        return self.val <= _value(other)

    def __gt__(self, other):
        return self.val > _value(other)

    def __ge__(self, other):
        return self.val >= _value(other)


def _value(x):
    return x.val if isinstance(x, Jet) else x


def jsqrt(x):
    if isinstance(x, Jet):
        root = math.sqrt(x.val)
        return Jet(root, x.grad / (2.0 * root))
    return math.sqrt(x)


def jcos(x):
    if isinstance(x, Jet):
        return Jet(math.cos(x.val), -math.sin(x.val) * x.grad)
    return math.cos(x)


def jsin(x):
    if isinstance(x, Jet):
        return Jet(math.sin(x.val), math.cos(x.val) * x.grad)
    return math.sin(x)


def jatan2(y, x):
    yv, xv = _value(y), _value(x)
    angle = math.atan2(yv, xv)
    if not (isinstance(y, Jet) or isinstance(x, Jet)):
        return angle
    width = y.grad.shape[0] if isinstance(y, Jet) else x.grad.shape[0]
    ygrad = y.grad if isinstance(y, Jet) else np.zeros(width)
    xgrad = x.grad if isinstance(x, Jet) else np.zeros(width)
    denom = xv * xv + yv * yv
    return Jet(angle, (xv * ygrad - yv * xgrad) / denom)


def jwrap(a):
    """Wrap an angle to (-pi, pi]; the shift is locally constant."""
    if isinstance(a, Jet):
        return Jet(jwrap(a.val), a.grad)
    wrapped = math.fmod(a, math.tau)
    if wrapped > math.pi:
        wrapped -= math.tau
    elif wrapped <= -math.pi:
        wrapped += math.tau
    return wrapped
