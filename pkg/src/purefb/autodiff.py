"""Forward-mode automatic differentiation on nestable dual numbers.

Stage-function synthesis needs partial derivatives of virtual control laws
with respect to state and gain variables, including derivatives of functions
that already contain derivatives of earlier stages.  All controller
arithmetic is therefore written against a generic scalar: a plain float, or a
``Dual`` carrying a dense vector of first partials for one differentiation
pass, whose value and partials may themselves be ``Dual`` values of an
enclosing pass.

Every call to ``seed`` opens a fresh pass identified by a strictly
increasing tag.  Arithmetic between duals of different passes treats the
older (outer) value as a constant of the newer (inner) pass, which is what
makes nested passes compose without perturbation confusion.  Partials are
extracted with ``partial(y, j, tag)`` so that a function which degenerates
to a constant of the queried pass correctly reports a zero derivative.

Supported primitives: ``+ - * /``, integer powers, ``sin``, ``cos``,
``exp``, ``sqrt`` and ``smooth_abs``.  Anything else (``math.*`` calls,
float-exponent ``**``, plain ``abs``) fails loudly rather than silently
dropping derivatives.
"""

from __future__ import annotations

import math

__all__ = [
    "Dual",
    "EvaluationError",
    "cos",
    "exp",
    "gradient",
    "partial",
    "real_value",
    "second_derivative",
    "seed",
    "sin",
    "smooth_abs",
    "sqrt",
]


class EvaluationError(ArithmeticError):
    """A supported primitive was evaluated outside its domain."""


_tag_counter = 0


def _new_tag():
    global _tag_counter
    _tag_counter += 1
    return _tag_counter


def real_value(x):
    """Innermost float of a generic scalar (the raw evaluation-point value)."""
    while x.__class__ is Dual:
        x = x.value
    return x


def partial(y, j, tag):
    """j-th partial of y in the pass identified by tag.

    Returns 0.0 when y is constant with respect to that pass (a plain float,
    or a dual belonging to a different pass).
    """
    if y.__class__ is Dual and y.tag == tag:
        return y.partials[j]
    return 0.0


class Dual:
    """Scalar carrying first partials with respect to one seeded pass.

    ``value`` and each entry of ``partials`` are themselves generic scalars
    (floats, or duals of an enclosing pass).  Instances are immutable in
    practice; build them through ``seed`` rather than by hand.
    """

    __slots__ = ("tag", "value", "partials")

    def __init__(self, tag, value, partials):
        self.tag = tag
        self.value = value
        self.partials = partials

    def __repr__(self):
        return "Dual(tag=%d, %r, %r)" % (self.tag, self.value, self.partials)

    def _check(self, other):
        if len(self.partials) != len(other.partials):
            raise EvaluationError(
                "seed-set mismatch: %d vs %d partials within one pass"
                % (len(self.partials), len(other.partials))
            )

    def __add__(self, other):
        if other.__class__ is Dual:
            st = self.tag
            ot = other.tag
            if st == ot:
                self._check(other)
                return Dual(
                    st,
                    self.value + other.value,
                    tuple([a + b for a, b in zip(self.partials, other.partials)]),
                )
            if st > ot:
                return Dual(st, self.value + other, self.partials)
            return Dual(ot, self + other.value, other.partials)
        return Dual(self.tag, self.value + other, self.partials)

    __radd__ = __add__

    def __sub__(self, other):
        if other.__class__ is Dual:
            st = self.tag
            ot = other.tag
            if st == ot:
                self._check(other)
                return Dual(
                    st,
                    self.value - other.value,
                    tuple([a - b for a, b in zip(self.partials, other.partials)]),
                )
            if st > ot:
                return Dual(st, self.value - other, self.partials)
            return Dual(ot, self - other.value, tuple([-p for p in other.partials]))
        return Dual(self.tag, self.value - other, self.partials)

    def __rsub__(self, other):
        return Dual(self.tag, other - self.value, tuple([-p for p in self.partials]))

    def __neg__(self):
        return Dual(self.tag, -self.value, tuple([-p for p in self.partials]))

    def __pos__(self):
        return self

    def __mul__(self, other):
        if other.__class__ is Dual:
            st = self.tag
            ot = other.tag
            if st == ot:
                self._check(other)
                sv = self.value
                ov = other.value
                return Dual(
                    st,
                    sv * ov,
                    tuple([sv * q + p * ov for p, q in zip(self.partials, other.partials)]),
                )
            if st > ot:
                return Dual(st, self.value * other, tuple([p * other for p in self.partials]))
            return Dual(ot, self * other.value, tuple([self * q for q in other.partials]))
        return Dual(self.tag, self.value * other, tuple([p * other for p in self.partials]))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if other.__class__ is Dual:
            if real_value(other.value) == 0.0:
                raise EvaluationError("division by zero")
            st = self.tag
            ot = other.tag
            if st == ot:
                self._check(other)
                inv = 1.0 / other.value
                q = self.value * inv
                return Dual(
                    st,
                    q,
                    tuple([(p - q * r) * inv for p, r in zip(self.partials, other.partials)]),
                )
            if st > ot:
                return Dual(st, self.value / other, tuple([p / other for p in self.partials]))
            inv = 1.0 / other.value
            q = self * inv
            coef = -(q * inv)
            return Dual(ot, q, tuple([coef * r for r in other.partials]))
        if other == 0.0:
            raise EvaluationError("division by zero")
        inv = 1.0 / other
        return Dual(self.tag, self.value * inv, tuple([p * inv for p in self.partials]))

    def __rtruediv__(self, other):
        if real_value(self.value) == 0.0:
            raise EvaluationError("division by zero")
        inv = 1.0 / self.value
        q = other * inv
        coef = -(q * inv)
        return Dual(self.tag, q, tuple([coef * p for p in self.partials]))

    def __pow__(self, n):
        if not isinstance(n, int) or isinstance(n, bool):
            raise EvaluationError(
                "only integer powers are supported on dual scalars; "
                "got exponent %r" % (n,)
            )
        if n == 0:
            return 1.0
        if n == 1:
            return self
        if n < 0:
            return 1.0 / self.__pow__(-n)
        vn1 = self.value ** (n - 1)
        coef = n * vn1
        return Dual(self.tag, vn1 * self.value, tuple([coef * p for p in self.partials]))


def sin(x):
    if x.__class__ is Dual:
        c = cos(x.value)
        return Dual(x.tag, sin(x.value), tuple([c * p for p in x.partials]))
    return math.sin(x)


def cos(x):
    if x.__class__ is Dual:
        s = sin(x.value)
        return Dual(x.tag, cos(x.value), tuple([-(s * p) for p in x.partials]))
    return math.cos(x)


def exp(x):
    if x.__class__ is Dual:
        e = exp(x.value)
        return Dual(x.tag, e, tuple([e * p for p in x.partials]))
    return math.exp(x)


def sqrt(x):
    if x.__class__ is Dual:
        r = sqrt(x.value)
        if real_value(r) == 0.0:
            raise EvaluationError("sqrt is not differentiable at zero")
        half_inv = 0.5 / r
        return Dual(x.tag, r, tuple([half_inv * p for p in x.partials]))
    if x < 0.0:
        raise EvaluationError("sqrt of negative value %r" % (x,))
    return math.sqrt(x)


def smooth_abs(a, eps):
    """C1 surrogate for |a|: sqrt(a^2 + eps^2), |a| <= result <= |a| + eps."""
    if not eps > 0.0:
        raise ValueError("smoothing constant must be positive, got %r" % (eps,))
    return sqrt(a * a + eps * eps)


def seed(values):
    """Open a differentiation pass: identity-seeded duals plus the pass tag.

    Entries of ``values`` may themselves be duals of an enclosing pass; they
    become the carried values while the new partials vectors form the
    identity basis of this pass.  Returns ``(duals, tag)``.
    """
    tag = _new_tag()
    m = len(values)
    out = []
    for j, v in enumerate(values):
        row = [0.0] * m
        row[j] = 1.0
        out.append(Dual(tag, v, tuple(row)))
    return out, tag


def gradient(f, point):
    """Value and gradient of ``f(*point)`` in one forward pass.

    f must be built from the supported primitives; point is a sequence of
    reals.  Returns ``(value, partials)`` with ``partials`` a tuple of
    floats of the same length as ``point``.
    """
    duals, tag = seed([float(v) for v in point])
    y = f(*duals)
    m = len(duals)
    return real_value(y), tuple(float(real_value(partial(y, j, tag))) for j in range(m))


def second_derivative(f, x):
    """d²f/dx² at x for a univariate f, via one nested forward pass."""
    (inner,), t1 = seed([float(x)])
    (outer,), t2 = seed([inner])
    y = f(outer)
    d1 = partial(y, 0, t2)
    return float(real_value(partial(d1, 0, t1)))
