"""Forward-mode differentiation carriers.

A :class:`Jet` bundles the value of a scalar observable with its gradient
and propagates both through arithmetic by the chain rule.  The gradient is
a trailing axis of arbitrary width, so the same class serves phase-space
gradients (width ``2N``), position-only gradients for chart Jacobians
(width ``N``) and generator-space gradients (width 3).  Values may be a
single float or a 1-D array of samples; gradients then grow a matching
leading axis, which lets one evaluation process a whole batch of states.

:class:`Jet3` is a plain-float specialisation with exactly three gradient
slots.  It exists only because the time integrator evaluates Hamiltonians
millions of times at single states, where numpy's per-call overhead on
length-3 arrays dominates; it implements the identical algebra.

Integer powers are computed by repeated multiplication (square-and-multiply),
never via ``exp``/``log``, so negative bases stay exact.
"""

from __future__ import annotations

import numpy as np

from .errors import EvaluationDomainError

__all__ = ["Jet", "Jet3", "jet_sqrt", "coordinate_jets", "seed"]


def _scale(value, grad):
    # value * grad with the gradient axis kept trailing; batched values
    # (shape (S,)) broadcast against gradients of shape (S, m).
    if isinstance(value, np.ndarray) and value.ndim:
        return value[..., None] * grad
    return value * grad


def _any_zero(value) -> bool:
    if isinstance(value, np.ndarray):
        return bool(np.any(value == 0.0))
    return value == 0.0


class Jet:
    """Value plus gradient, combined by the rules of calculus."""

    __slots__ = ("value", "grad")

    def __init__(self, value, grad):
        self.value = value
        self.grad = grad

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value + other.value, self.grad + other.grad)
        return Jet(self.value + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value - other.value, self.grad - other.grad)
        return Jet(self.value - other, self.grad)

    def __rsub__(self, other):
        return Jet(other - self.value, -self.grad)

    def __neg__(self):
        return Jet(-self.value, -self.grad)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(
                self.value * other.value,
                _scale(self.value, other.grad) + _scale(other.value, self.grad),
            )
        return Jet(self.value * other, _scale(other, self.grad))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            if _any_zero(other.value):
                raise EvaluationDomainError("division by zero in jet evaluation")
            value = self.value / other.value
            return Jet(
                value,
                _scale(1.0 / other.value, self.grad - _scale(value, other.grad)),
            )
        return Jet(self.value / other, _scale(1.0 / other, self.grad))

    def __rtruediv__(self, other):
        if _any_zero(self.value):
            raise EvaluationDomainError("division by zero in jet evaluation")
        value = other / self.value
        return Jet(value, _scale(-value / self.value, self.grad))

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, np.integer)):
            raise TypeError(f"jet exponent must be an integer, got {exponent!r}")
        n = int(exponent)
        if n < 0:
            return 1.0 / self.__pow__(-n)
        if n == 0:
            return Jet(np.ones_like(self.value) * 1.0 if isinstance(self.value, np.ndarray)
                       else 1.0, np.zeros_like(self.grad))
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __repr__(self):
        return f"Jet(value={self.value!r}, grad={self.grad!r})"


def jet_sqrt(jet: Jet) -> Jet:
    """Square root of a jet; requires a strictly positive value."""
    value = jet.value
    bad = np.any(np.asarray(value) <= 0.0)
    if bad:
        raise EvaluationDomainError("square root of a non-positive jet value")
    root = np.sqrt(value)
    return Jet(root, _scale(0.5 / root, jet.grad))


class Jet3:
    """Scalar jet with three fixed gradient slots (plain-float fast path)."""

    __slots__ = ("v", "g0", "g1", "g2")

    def __init__(self, v, g0=0.0, g1=0.0, g2=0.0):
        self.v = v
        self.g0 = g0
        self.g1 = g1
        self.g2 = g2

    def __add__(self, other):
        if isinstance(other, Jet3):
            return Jet3(self.v + other.v, self.g0 + other.g0,
                        self.g1 + other.g1, self.g2 + other.g2)
        return Jet3(self.v + other, self.g0, self.g1, self.g2)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet3):
            return Jet3(self.v - other.v, self.g0 - other.g0,
                        self.g1 - other.g1, self.g2 - other.g2)
        return Jet3(self.v - other, self.g0, self.g1, self.g2)

    def __rsub__(self, other):
        return Jet3(other - self.v, -self.g0, -self.g1, -self.g2)

    def __neg__(self):
        return Jet3(-self.v, -self.g0, -self.g1, -self.g2)

    def __mul__(self, other):
        if isinstance(other, Jet3):
            u, w = self.v, other.v
            return Jet3(u * w,
                        u * other.g0 + w * self.g0,
                        u * other.g1 + w * self.g1,
                        u * other.g2 + w * self.g2)
        return Jet3(self.v * other, self.g0 * other, self.g1 * other, self.g2 * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet3):
            if other.v == 0.0:
                raise EvaluationDomainError("division by zero in jet evaluation")
            value = self.v / other.v
            inv = 1.0 / other.v
            return Jet3(value,
                        (self.g0 - value * other.g0) * inv,
                        (self.g1 - value * other.g1) * inv,
                        (self.g2 - value * other.g2) * inv)
        inv = 1.0 / other
        return Jet3(self.v * inv, self.g0 * inv, self.g1 * inv, self.g2 * inv)

    def __rtruediv__(self, other):
        if self.v == 0.0:
            raise EvaluationDomainError("division by zero in jet evaluation")
        value = other / self.v
        factor = -value / self.v
        return Jet3(value, factor * self.g0, factor * self.g1, factor * self.g2)

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, np.integer)):
            raise TypeError(f"jet exponent must be an integer, got {exponent!r}")
        n = int(exponent)
        if n < 0:
            return 1.0 / self.__pow__(-n)
        if n == 0:
            return Jet3(1.0)
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __repr__(self):
        return f"Jet3({self.v!r}, {self.g0!r}, {self.g1!r}, {self.g2!r})"


def coordinate_jets(q: np.ndarray, p: np.ndarray):
    """Seed one jet per phase-space coordinate.

    ``q`` and ``p`` have shape ``(N,)`` for a single state or ``(S, N)``
    for a batch.  Returns two lists of ``N`` jets whose gradients form the
    identity over the ``2N`` coordinates, ordered ``(q_1..q_N, p_1..p_N)``.
    """
    n = q.shape[-1]
    width = 2 * n
    if q.ndim == 1:
        qjets = []
        pjets = []
        for i in range(n):
            g = np.zeros(width)
            g[i] = 1.0
            qjets.append(Jet(float(q[i]), g))
            g = np.zeros(width)
            g[n + i] = 1.0
            pjets.append(Jet(float(p[i]), g))
        return qjets, pjets
    size = q.shape[0]
    qjets = []
    pjets = []
    for i in range(n):
        g = np.zeros((size, width))
        g[:, i] = 1.0
        qjets.append(Jet(q[:, i], g))
        g = np.zeros((size, width))
        g[:, n + i] = 1.0
        pjets.append(Jet(p[:, i], g))
    return qjets, pjets


def seed(q: np.ndarray, p: np.ndarray, index: int) -> Jet:
    """Identity jet for a single phase-space coordinate.

    Index ``0..N-1`` selects positions, ``N..2N-1`` momenta.
    """
    n = len(q)
    if not 0 <= index < 2 * n:
        raise ValueError(f"coordinate index {index} out of range for 2N={2 * n}")
    grad = np.zeros(2 * n)
    grad[index] = 1.0
    value = float(q[index]) if index < n else float(p[index - n])
    return Jet(value, grad)
