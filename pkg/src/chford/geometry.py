"""Linear algebra over C^{2,1}, the Heisenberg boundary model, Cygan metric.

The Hermitian form has signature (2,1) with antidiagonal Gram matrix:

    <z, w> = z1*conj(w3) + z2*conj(w2) + z3*conj(w1)

Points of the boundary minus the point at infinity are Heisenberg
coordinates (z, t); interior points carry an extra height u > 0.  The
standard lift of (z, t, u) is ((-|z|^2 - u + i t)/2, z, 1), and the
standard lift of the point at infinity is q_inf = (1, 0, 0).

Vectors are plain 3-tuples of scalars (QI in exact mode, complex in float
mode); all functions here accept either.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .qi import (QI, QI_ONE, QI_ZERO, is_exact, mat_to_complex, mat_vec,
                 sconj, su21_inverse)

# Default tolerances; every predicate also takes them explicitly.
EPS_NULL = 1e-10       # zero threshold for <z,z> sign classification
EPS_CLASS = 1e-9       # isometry-type discriminant threshold
EPS_SU21 = 1e-9        # membership tolerance for SU(2,1)

CVector3 = tuple  # 3-tuple of scalars (QI or complex)

Q_INF = (QI_ONE, QI_ZERO, QI_ZERO)   # standard lift of the point at infinity


class SignClass(Enum):
    NEGATIVE = -1
    NULL = 0
    POSITIVE = 1


@dataclass(frozen=True)
class HeisPoint:
    """Boundary point in Heisenberg coordinates (z, t)."""
    z: object
    t: object

    def as_floats(self):
        return complex(self.z), float(self.t)

    def __iter__(self):
        return iter((self.z, self.t))


@dataclass(frozen=True)
class HoroPoint:
    """Horospherical coordinates (z, t, u); u = 0 on the boundary."""
    z: object
    t: object
    u: object = 0

    def boundary(self):
        return float(self.u) == 0.0


class PointAtInfinity(ValueError):
    pass


class BoundaryPoint(ValueError):
    pass


def hermitian_form(z: CVector3, w: CVector3):
    return z[0] * sconj(w[2]) + z[1] * sconj(w[1]) + z[2] * sconj(w[0])


def classify_vector(z: CVector3, eps_null: float = EPS_NULL) -> SignClass:
    if all(complex(c) == 0 for c in z):
        raise ValueError("cannot classify the zero vector")
    h = hermitian_form(z, z)
    if is_exact(h):
        s = h.re
        assert h.im == 0
        if s == 0:
            return SignClass.NULL
        return SignClass.NEGATIVE if s < 0 else SignClass.POSITIVE
    h = complex(h)
    assert abs(h.imag) < eps_null, "Hermitian square should be real"
    if abs(h.real) <= eps_null:
        return SignClass.NULL
    return SignClass.NEGATIVE if h.real < 0 else SignClass.POSITIVE


def box_product(p: CVector3, q: CVector3) -> CVector3:
    """Hermitian cross product, orthogonal to p and q for the form."""
    return (sconj(p[0] * q[1] - p[1] * q[0]),
            sconj(p[2] * q[0] - p[0] * q[2]),
            sconj(p[1] * q[2] - p[2] * q[1]))


def to_lift(h) -> CVector3:
    """Standard lift of a HoroPoint or HeisPoint."""
    z, t, u = (h.z, h.t, getattr(h, "u", 0))
    if isinstance(z, QI) or (not isinstance(z, complex) and not isinstance(z, float)):
        z = QI.of(z) if not isinstance(z, QI) else z
        tq = Fraction(t)
        uq = Fraction(u)
        first = QI(Fraction(-1, 2) * (z.norm_sq() + uq), tq / 2)
        return (first, z, QI_ONE)
    z = complex(z)
    zz = z.real * z.real + z.imag * z.imag
    return (complex(-zz - u, t) / 2.0, z, 1.0 + 0j)


def from_lift(v: CVector3) -> HoroPoint:
    """Horospherical coordinates of a negative or null lift; errors on q_inf."""
    c0, c1, c2 = (complex(c) for c in v)
    if abs(c2) == 0:
        raise PointAtInfinity("lift projects to the point at infinity")
    if is_exact(v[2]):
        w0 = v[0] / v[2]
        w1 = v[1] / v[2]
        h = hermitian_form(v, v)
        u = -h.re / v[2].norm_sq()
        if u < 0:
            raise ValueError("positive vector has no horospherical coordinates")
        return HoroPoint(w1, 2 * w0.im, u)
    w0, w1 = c0 / c2, c1 / c2
    h = complex(hermitian_form(v, v))
    u = -h.real / abs(c2) ** 2
    if u < -EPS_NULL:
        raise ValueError("positive vector has no horospherical coordinates")
    return HoroPoint(w1, 2 * w0.imag, max(u, 0.0))


def heis_mul(a: HeisPoint, b: HeisPoint) -> HeisPoint:
    """Heisenberg group law (z1,t1)*(z2,t2) = (z1+z2, t1+t2+2 Im(z1 conj z2))."""
    z1, z2 = a.z, b.z
    cross = z1 * sconj(z2)
    if is_exact(cross):
        return HeisPoint(z1 + z2, a.t + b.t + 2 * cross.im)
    return HeisPoint(z1 + z2, a.t + b.t + 2 * cross.imag)


def heis_inverse(a: HeisPoint) -> HeisPoint:
    return HeisPoint(-a.z, -a.t)


def heis_translation_matrix(p: HeisPoint):
    """Unipotent upper-triangular translation T_(z,t) in SU(2,1)."""
    z, t = p.z, p.t
    if isinstance(z, QI):
        first = QI(-z.norm_sq() / 2, Fraction(t) / 2)
        return ((QI_ONE, -z.conjugate(), first),
                (QI_ZERO, QI_ONE, z),
                (QI_ZERO, QI_ZERO, QI_ONE))
    z = complex(z)
    return ((1 + 0j, -z.conjugate(), complex(-(z.real * z.real + z.imag * z.imag), t) / 2),
            (0j, 1 + 0j, z),
            (0j, 0j, 1 + 0j))


def heis_norm(p: HeisPoint) -> float:
    z, t = p.as_floats()
    return abs(complex(abs(z) ** 2, t)) ** 0.5


def cygan_distance(a, b) -> float:
    """Extended Cygan metric on horospherical coordinates (u = 0 on boundary)."""
    za, ta, ua = complex(a.z), float(a.t), float(getattr(a, "u", 0))
    zb, tb, ub = complex(b.z), float(b.t), float(getattr(b, "u", 0))
    w = complex(abs(za - zb) ** 2 + abs(ua - ub),
                ta - tb + 2 * (za * zb.conjugate()).imag)
    return abs(w) ** 0.5


def bergman_distance(p: HoroPoint, q: HoroPoint) -> float:
    """Bergman metric via cosh^2(rho/2) = <z,w><w,z> / (<z,z><w,w>)."""
    for x in (p, q):
        if float(getattr(x, "u", 0)) <= 0:
            raise BoundaryPoint("Bergman distance needs interior points")
    zp, zq = to_lift(p), to_lift(q)
    num = abs(complex(hermitian_form(zp, zq))) ** 2
    den = complex(hermitian_form(zp, zp)).real * complex(hermitian_form(zq, zq)).real
    c2 = num / den
    c2 = max(c2, 1.0)
    return 2.0 * math.acosh(math.sqrt(c2))


# -- isometries ----------------------------------------------------------

@dataclass(frozen=True)
class IsometryClass:
    kind: str               # "loxodromic" | "parabolic" | "elliptic"
    regular: bool = False   # elliptic only
    unipotent: bool = False  # parabolic only

    def __str__(self):
        if self.kind == "elliptic":
            return f"elliptic({'regular' if self.regular else 'special'})"
        if self.kind == "parabolic":
            return f"parabolic({'unipotent' if self.unipotent else 'screw'})"
        return self.kind


_J = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=complex)


def su21_deviation(m) -> float:
    """Max entrywise deviation of M* J M from J, plus |det - 1|."""
    a = np.array(mat_to_complex(m))
    return max(float(np.max(np.abs(a.conj().T @ _J @ a - _J))),
               abs(np.linalg.det(a) - 1.0))


def goldman_discriminant(tau: complex) -> float:
    """Trace discriminant: negative iff regular elliptic, positive iff loxodromic."""
    return (abs(tau) ** 4 - 8 * (tau ** 3).real + 18 * abs(tau) ** 2 - 27)


def classify_isometry(m, eps_class: float = EPS_CLASS) -> IsometryClass:
    if su21_deviation(m) > EPS_SU21:
        raise ValueError("matrix is not in SU(2,1)")
    a = np.array(mat_to_complex(m))
    tau = complex(np.trace(a))
    f = goldman_discriminant(tau)
    if f > eps_class:
        return IsometryClass("loxodromic")
    if f < -eps_class:
        return IsometryClass("elliptic", regular=True)
    # Boundary cases: repeated eigenvalue.  Distinguish (special) elliptic
    # from parabolic by diagonalizability at the repeated eigenvalue.
    from .qi import CUBE_ROOTS
    for w in CUBE_ROOTS:
        if np.max(np.abs(a - w * np.eye(3))) < eps_class:
            return IsometryClass("elliptic", regular=False)  # central: identity in PU(2,1)
    vals = np.linalg.eigvals(a)
    # find the repeated eigenvalue (closest pair)
    pairs = [(abs(vals[i] - vals[j]), i, j) for i in range(3) for j in range(i + 1, 3)]
    gap, i, j = min(pairs)
    lam = (vals[i] + vals[j]) / 2
    rank = np.linalg.matrix_rank(a - lam * np.eye(3), tol=1e-6)
    multiplicity = 3 if all(abs(v - lam) < 1e-6 for v in vals) else 2
    diagonalizable = (3 - rank) >= multiplicity
    if diagonalizable:
        return IsometryClass("elliptic", regular=False)
    unipotent = min(abs(tau - 3 * w) for w in CUBE_ROOTS) < eps_class
    return IsometryClass("parabolic", unipotent=unipotent)


def complex_reflection(c: CVector3):
    """Order-2 complex reflection fixing the line polar to the positive vector c."""
    if classify_vector(c) is not SignClass.POSITIVE:
        raise ValueError("polar vector must be positive")
    n = hermitian_form(c, c)
    exact = is_exact(n)
    rows = []
    for i in range(3):
        row = []
        for j in range(3):
            # -id + (2/<c,c>) c (c^* J), with (c^* J)_j = conj(c_{2-j})
            val = (2 * c[i] * sconj(c[2 - j])) / n
            if i == j:
                val = val - (QI_ONE if exact else (1 + 0j))
            row.append(val)
        rows.append(tuple(row))
    return tuple(rows)


def polar_vector_of_ccircle(center: HeisPoint, r) -> CVector3:
    """Polar vector of the finite C-circle with the given center and radius."""
    if float(r) <= 0:
        raise ValueError("radius must be positive")
    z, t = center.z, center.t
    if isinstance(z, QI):
        rr = Fraction(r)
        first = QI((rr * rr - z.norm_sq()) / 2, Fraction(t) / 2)
        return (first, z, QI_ONE)
    z = complex(z)
    return (complex(float(r) ** 2 - abs(z) ** 2, float(t)) / 2, z, 1 + 0j)


def apply_to_boundary(m, p: HeisPoint) -> HeisPoint:
    """Apply a matrix to a boundary point via its standard lift."""
    v = mat_vec(m, to_lift(p))
    h = from_lift(v)
    return HeisPoint(h.z, h.t)


def a_action(p: HeisPoint, k: int = 1) -> HeisPoint:
    """Action of A^k on the Heisenberg group: (z, t) -> (z - 2k, t + 4k Im z).

    A = I1 I2 is the Heisenberg translation by (-2, 0); the printed form of
    this action in the source material has Re where Im is meant (the matrix
    conjugation check pins the convention used here).
    """
    z, t = p.z, p.t
    if isinstance(z, QI):
        return HeisPoint(z - 2 * k, t + 4 * k * z.im)
    z = complex(z)
    return HeisPoint(z - 2 * k, t + 4 * k * z.imag)


def lift_of_infinity_image(m) -> CVector3:
    """m^{-1}(q_inf) as an exact column: (conj g33, conj g32, conj g31)."""
    inv = su21_inverse(m)
    return (inv[0][0], inv[1][0], inv[2][0])


def horo_to_floats(p) -> tuple:
    return (complex(p.z).real, complex(p.z).imag, float(p.t), float(getattr(p, "u", 0)))
