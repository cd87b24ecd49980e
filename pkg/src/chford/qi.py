"""Exact Gaussian-rational arithmetic and small generic matrix helpers.

Scalars are either QI (complex numbers with Fraction real/imaginary parts)
or Python complex.  The matrix helpers below are written against the common
operator surface so the same word-evaluation code runs in both modes.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational


class QI:
    """A Gaussian rational a + b*i with exact Fraction components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # -- constructors -------------------------------------------------

    @staticmethod
    def of(x):
        if isinstance(x, QI):
            return x
        if isinstance(x, Rational):
            return QI(x, 0)
        raise TypeError(f"cannot build QI from {x!r}")

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (complex, float)):
            return complex(self) + other      # mixed mode degrades to float
        other = QI.of(other)
        return QI(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        if isinstance(other, (complex, float)):
            return complex(self) - other
        return self + (-QI.of(other))

    def __rsub__(self, other):
        if isinstance(other, (complex, float)):
            return other - complex(self)
        return QI.of(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (complex, float)):
            return complex(self) * other
        other = QI.of(other)
        return QI(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (complex, float)):
            return complex(self) / other
        other = QI.of(other)
        n = other.norm_sq()
        if n == 0:
            raise ZeroDivisionError("division by zero QI")
        return QI((self.re * other.re + self.im * other.im) / n,
                  (other.re * self.im - self.re * other.im) / n)

    def __rtruediv__(self, other):
        if isinstance(other, (complex, float)):
            return other / complex(self)
        return QI.of(other) / self

    def conjugate(self):
        return QI(self.re, -self.im)

    def norm_sq(self) -> Fraction:
        """|z|^2 as an exact Fraction."""
        return self.re * self.re + self.im * self.im

    # -- comparisons / conversions --------------------------------------

    def __eq__(self, other):
        if isinstance(other, complex):
            return complex(self) == other
        try:
            other = QI.of(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"

    def is_zero(self):
        return self.re == 0 and self.im == 0


QI_ZERO = QI(0)
QI_ONE = QI(1)
QI_I = QI(0, 1)


def sconj(x):
    """Conjugate for either scalar mode."""
    if isinstance(x, QI):
        return x.conjugate()
    return x.conjugate() if isinstance(x, complex) else complex(x).conjugate()


def is_exact(x) -> bool:
    return isinstance(x, QI)


# -- generic 3x3 / 3-vector helpers (tuples of scalars) -----------------

def mat_mul(a, b):
    return tuple(tuple(sum((a[i][k] * b[k][j] for k in range(3)),
                           start=_zero_like(a[0][0]))
                       for j in range(3)) for i in range(3))


def mat_vec(a, v):
    return tuple(sum((a[i][k] * v[k] for k in range(3)), start=_zero_like(v[0]))
                 for i in range(3))


def mat_identity(exact=True):
    o, z = (QI_ONE, QI_ZERO) if exact else (1 + 0j, 0j)
    return ((o, z, z), (z, o, z), (z, z, o))


def mat_conj_transpose(a):
    return tuple(tuple(sconj(a[j][i]) for j in range(3)) for i in range(3))


def su21_inverse(a):
    """Inverse of M in SU(2,1): M^-1 = J M* J with J the antidiagonal form."""
    s = mat_conj_transpose(a)
    # J M* J flips both indices across the antidiagonal
    return tuple(tuple(s[2 - i][2 - j] for j in range(3)) for i in range(3))


def mat_to_complex(a):
    return tuple(tuple(complex(x) for x in row) for row in a)


def vec_to_complex(v):
    return tuple(complex(x) for x in v)


def mat_scale(a, s):
    return tuple(tuple(x * s for x in row) for row in a)


def mat_sub(a, b):
    return tuple(tuple(a[i][j] - b[i][j] for j in range(3)) for i in range(3))


def mat_max_abs(a) -> float:
    return max(abs(complex(x)) for row in a for x in row)


def mat_trace(a):
    return a[0][0] + a[1][1] + a[2][2]


def _zero_like(x):
    return QI_ZERO if isinstance(x, QI) else 0j


_OMEGA = complex(-0.5, 0.75 ** 0.5)
CUBE_ROOTS = (1 + 0j, _OMEGA, _OMEGA.conjugate())


def projective_deviation(a, b) -> float:
    """Max entrywise deviation of a from w*b over cube roots of unity w.

    This is equality in PU(2,1) for SU(2,1) matrices, whose center is the
    cube roots of unity.
    """
    ac, bc = mat_to_complex(a), mat_to_complex(b)
    best = float("inf")
    for w in CUBE_ROOTS:
        dev = max(abs(ac[i][j] - w * bc[i][j]) for i in range(3) for j in range(3))
        best = min(best, dev)
    return best


def projective_equal(a, b, tol=1e-9) -> bool:
    return projective_deviation(a, b) <= tol
