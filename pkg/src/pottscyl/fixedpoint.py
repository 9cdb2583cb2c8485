"""Configurable-precision arithmetic used by the transfer-matrix engines.

Two coefficient rings are provided:

* ``FxContext`` -- binary fixed-point numbers held as plain Python integers
  with a shared scale of ``bits`` fractional bits.  All hot loops run on these
  (a multiply is one big-int multiply plus a shift), and conversion to mpmath
  floats happens only at the edges.  Rounding is floor rounding, identical in
  the pure-Python and compiled kernels, so results are bit-for-bit
  reproducible across backends.

* ``QSqrt`` -- exact elements a + b*sqrt(Q) with a, b, Q rational.  At the
  critical point v = sqrt(Q) every cylinder weight lies in this ring, which is
  what makes exact small-lattice oracles possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

LOG2_10 = math.log2(10.0)

#: extra guard bits beyond the requested decimal precision
GUARD_BITS = 64


class FxContext:
    """Fixed-point context: values are integers scaled by 2**bits."""

    __slots__ = ("bits", "digits")

    def __init__(self, digits: int | None = None, bits: int | None = None):
        if bits is None:
            if digits is None:
                raise ValueError("need digits or bits")
            bits = int(math.ceil(digits * LOG2_10)) + GUARD_BITS
        self.bits = bits
        self.digits = digits if digits is not None else int(bits / LOG2_10)

    # -- encoding ---------------------------------------------------------

    def one(self) -> int:
        return 1 << self.bits

    def enc_int(self, n: int) -> int:
        return n << self.bits

    def enc_fraction(self, fr: Fraction) -> int:
        return (fr.numerator << self.bits) // fr.denominator

    def enc(self, x) -> int:
        """Encode an int, Fraction, float, str or mpf at full context precision."""
        if isinstance(x, int):
            return x << self.bits
        if isinstance(x, Fraction):
            return self.enc_fraction(x)
        if isinstance(x, float):
            return self.enc_fraction(Fraction(x))
        # strings and mpmath types go through mpf at sufficient precision
        with mpmath.workprec(self.bits + 16):
            m = mpmath.mpf(x) * mpmath.power(2, self.bits)
            return int(mpmath.nint(m))

    def sqrt_enc(self, fr: Fraction | int) -> int:
        """Encoded sqrt of an exact nonnegative rational."""
        fr = Fraction(fr)
        if fr < 0:
            raise ValueError("sqrt of negative rational")
        # sqrt(p/q) * 2^bits = isqrt(p * q * 2^(2bits)) // q
        p, q = fr.numerator, fr.denominator
        return math.isqrt((p * q) << (2 * self.bits)) // q

    # -- arithmetic --------------------------------------------------------

    def mul(self, a: int, b: int) -> int:
        return (a * b) >> self.bits

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("fixed-point division by zero")
        return (a << self.bits) // b

    def dot(self, xs, ys) -> int:
        """Exact sum of products, shifted once (better than per-term shifts)."""
        return sum(map(int.__mul__, xs, ys)) >> self.bits

    def norm2(self, xs) -> int:
        return sum(x * x for x in xs) >> self.bits

    def sqrt(self, a: int) -> int:
        if a < 0:
            raise ValueError("sqrt of negative fixed-point value")
        return math.isqrt(a << self.bits)

    # -- conversion --------------------------------------------------------

    def to_mpf(self, a: int, exp2: int = 0) -> mpmath.mpf:
        return mpmath.mpf(a) * mpmath.power(2, exp2 - self.bits)

    def to_float(self, a: int, exp2: int = 0) -> float:
        return math.ldexp(float(a >> max(0, a.bit_length() - 52)), max(0, a.bit_length() - 52) + exp2 - self.bits) if a else 0.0


class FxVector:
    """A coefficient vector with a shared power-of-two exponent.

    The represented values are ``coeffs[i] * 2**exp2`` where coeffs are
    fixed-point integers of the owning context.  ``rescale`` keeps the largest
    coefficient near the context scale so the ints stay small along a long
    transfer sweep while the exponent tracks the exact power of two that was
    shifted out.
    """

    __slots__ = ("ctx", "coeffs", "exp2")

    def __init__(self, ctx: FxContext, coeffs: list[int], exp2: int = 0):
        self.ctx = ctx
        self.coeffs = coeffs
        self.exp2 = exp2

    @classmethod
    def zeros(cls, ctx: FxContext, n: int) -> "FxVector":
        return cls(ctx, [0] * n, 0)

    @classmethod
    def basis_state(cls, ctx: FxContext, n: int, idx: int) -> "FxVector":
        v = [0] * n
        v[idx] = ctx.one()
        return cls(ctx, v, 0)

    def copy(self) -> "FxVector":
        return FxVector(self.ctx, list(self.coeffs), self.exp2)

    def max_bitlen(self) -> int:
        return max((c.bit_length() for c in self.coeffs), default=0)

    def rescale(self, slack: int = 8) -> None:
        """Shift out excess magnitude, folding it into exp2 (exact)."""
        top = self.max_bitlen()
        excess = top - self.ctx.bits - slack
        if excess > 0:
            self.coeffs = [c >> excess for c in self.coeffs]
            self.exp2 += excess

    def value_mpf(self, i: int) -> mpmath.mpf:
        return self.ctx.to_mpf(self.coeffs[i], self.exp2)


@dataclass(frozen=True)
class QSqrt:
    """Exact element a + b*sqrt(Q) of the quadratic ring over the rationals."""

    a: Fraction
    b: Fraction
    Q: Fraction

    @staticmethod
    def of(a, b, Q) -> "QSqrt":
        return QSqrt(Fraction(a), Fraction(b), Fraction(Q))

    @staticmethod
    def rational(a, Q) -> "QSqrt":
        return QSqrt(Fraction(a), Fraction(0), Fraction(Q))

    @staticmethod
    def root(Q) -> "QSqrt":
        """sqrt(Q) itself (the critical coupling v_c)."""
        return QSqrt(Fraction(0), Fraction(1), Fraction(Q))

    def __add__(self, other: "QSqrt") -> "QSqrt":
        return QSqrt(self.a + other.a, self.b + other.b, self.Q)

    def __sub__(self, other: "QSqrt") -> "QSqrt":
        return QSqrt(self.a - other.a, self.b - other.b, self.Q)

    def __mul__(self, other: "QSqrt") -> "QSqrt":
        return QSqrt(
            self.a * other.a + self.b * other.b * self.Q,
            self.a * other.b + self.b * other.a,
            self.Q,
        )

    def __neg__(self) -> "QSqrt":
        return QSqrt(-self.a, -self.b, self.Q)

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    def scale(self, r) -> "QSqrt":
        r = Fraction(r)
        return QSqrt(self.a * r, self.b * r, self.Q)

    def to_mpf(self) -> mpmath.mpf:
        return mpmath.mpf(self.a.numerator) / self.a.denominator + (
            mpmath.mpf(self.b.numerator) / self.b.denominator
        ) * mpmath.sqrt(mpmath.mpf(self.Q.numerator) / self.Q.denominator)

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(float(self.Q))
