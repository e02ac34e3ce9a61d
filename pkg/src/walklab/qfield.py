"""Exact arithmetic in the quadratic field Q(sqrt(d)).

Transition probabilities of the square-root-biased walk involve sqrt(b)
for the level-ratio base b, so row sums, reversibility and return values
can be checked exactly by computing in Q(sqrt(b)) instead of floats.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational


def _rational_sqrt(d: Fraction) -> Fraction | None:
    """Return sqrt(d) as a Fraction if d is a perfect square, else None."""
    if d < 0:
        raise ValueError("negative discriminant")
    n, m = d.numerator, d.denominator
    rn, rm = math.isqrt(n), math.isqrt(m)
    if rn * rn == n and rm * rm == m:
        return Fraction(rn, rm)
    return None


class QuadExt:
    """A number a + b*sqrt(d) with a, b, d rational and d > 0 fixed.

    If d happens to be a perfect square the irrational part is folded into
    the rational part, so equality comparisons stay meaningful.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, d, a=0, b=0):
        d = Fraction(d)
        a = Fraction(a)
        b = Fraction(b)
        root = _rational_sqrt(d)
        if root is not None and b != 0:
            a += b * root
            b = Fraction(0)
        self.d = d
        self.a = a
        self.b = b

    # ---- helpers -------------------------------------------------

    def _coerce(self, other) -> "QuadExt":
        if isinstance(other, QuadExt):
            if other.d != self.d and other.b != 0 and self.b != 0:
                raise ValueError(f"mixed discriminants {self.d} and {other.d}")
            return other
        if isinstance(other, Rational):
            return QuadExt(self.d, other, 0)
        return NotImplemented  # type: ignore[return-value]

    def _field(self, o: "QuadExt") -> Fraction:
        """Discriminant carried by whichever operand is irrational."""
        return self.d if self.b != 0 else o.d

    @staticmethod
    def sqrt_of(d) -> "QuadExt":
        """The element sqrt(d)."""
        return QuadExt(d, 0, 1)


    # ---- ring operations -----------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QuadExt(self._field(o), self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(self.d, -self.a, -self.b)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QuadExt(self._field(o), self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = self._field(o)
        return QuadExt(
            d,
            self.a * o.a + self.b * o.b * d,
            self.a * o.b + self.b * o.a,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadExt":
        norm = self.a * self.a - self.d * self.b * self.b
        if norm == 0:
            raise ZeroDivisionError("zero element of Q(sqrt(d))")
        return QuadExt(self.d, self.a / norm, -self.b / norm)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = QuadExt(self.d, 1, 0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # ---- comparisons and conversions -----------------------------

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        # rational-valued elements must hash alike whatever their d
        return hash((self.a, self.b, self.d if self.b else 0))

    def sign(self) -> int:
        """Exact sign of a + b*sqrt(d)."""
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a >= 0 and b > 0:
            return 1
        if a <= 0 and b < 0:
            return -1
        # a and b have opposite signs: compare a^2 with d*b^2
        lhs, rhs = a * a, self.d * b * b
        if a > 0:  # b < 0
            return (lhs > rhs) - (lhs < rhs)
        return (rhs > lhs) - (rhs < lhs)

    def __lt__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return (self - o).sign() < 0

    def __le__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return (self - o).sign() <= 0

    def __gt__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return (self - o).sign() > 0

    def __ge__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return (self - o).sign() >= 0

    def is_rational(self) -> bool:
        return self.b == 0

    def as_fraction(self) -> Fraction:
        if self.b != 0:
            raise ValueError(f"{self!r} is irrational")
        return self.a

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(float(self.d))

    def to_mpf(self, mp):
        """High precision value using an mpmath context."""
        return mp.mpf(self.a.numerator) / self.a.denominator + (
            mp.mpf(self.b.numerator) / self.b.denominator
        ) * mp.sqrt(mp.mpf(self.d.numerator) / self.d.denominator)

    def __repr__(self):
        return f"QuadExt({self.d}, {self.a}, {self.b})"


def _squarefree_part(n: int) -> tuple[int, int]:
    """n = s**2 * D with D squarefree; returns (s, D). Trial division."""
    s, D = 1, 1
    i = 2
    while i * i <= n:
        if n % i == 0:
            e = 0
            while n % i == 0:
                n //= i
                e += 1
            s *= i ** (e // 2)
            if e % 2:
                D *= i
        i += 1
    return s, D * n


def sqrt_exact(q) -> QuadExt:
    """sqrt(q) as c*sqrt(D) with D a squarefree integer.

    Normalizing the discriminant lets square roots of different rationals
    (powers of a common base, inverses) combine in one quadratic field.
    """
    q = Fraction(q)
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return QuadExt(1, 0, 0)
    # sqrt(n/m) = sqrt(n*m)/m
    nm = q.numerator * q.denominator
    s, D = _squarefree_part(nm)
    coeff = Fraction(s, q.denominator)
    if D == 1:
        return QuadExt(1, coeff, 0)
    return QuadExt(D, 0, coeff)
