"""Isometric (Cygan) spheres, Giraud charts and certified curve intersection.

Every bisector in play is coequidistant from q_inf, so its trace on a
Giraud torus V(z1,z2) = v0 + z1 v1 + z2 v2 is the zero set of a harmonic
form

    f(z1, z2) = c + 2 Re(p z1) + 2 Re(q z2) + 2 Re(r z1 conj(z2)),

with c real and p, q, r complex; the Giraud norm <V,V> has the same shape.
All curve questions (membership, branch solving, root finding) reduce to
this one family, which keeps the numerics uniform and easy to vectorize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (HeisPoint, Q_INF, box_product, from_lift,
                       hermitian_form, a_action)
from .qi import QI, is_exact, mat_to_complex, mat_vec, sconj, su21_inverse, vec_to_complex
from .triangle import GroupElement, RepresentationBundle, eval_word

EPS_NULL = 1e-10
EPS_TANGENT = 1e-7     # residual margin below which classifications are flagged
NEWTON_SEEDS = 40      # seed grid is NEWTON_SEEDS x NEWTON_SEEDS
DEDUP_TOL = 1e-8


class FixesInfinity(ValueError):
    pass


class DegenerateTriple(ValueError):
    pass


class TangencyFlag(RuntimeError):
    """Raised when a containment test sits within EPS_TANGENT of tangency."""


@dataclass(frozen=True)
class IsometricSphere:
    """Cygan sphere of A^k g A^-k, with its defining lift M^-1(q_inf)."""
    word: str
    k: int
    center: HeisPoint
    radius: float
    radius4: object          # exact Fraction in rational mode
    lift: tuple              # M^-1 applied to the standard lift of q_inf

    @property
    def key(self):
        z, t = self.center.as_floats()
        return (round(z.real, 9), round(z.imag, 9), round(t, 9), round(self.radius, 9))

    @property
    def label(self):
        return (self.word, self.k)

    def contains_boundary_point(self, p: HeisPoint, strict_margin: float = 0.0) -> bool:
        from .geometry import cygan_distance
        return cygan_distance(self.center, p) < self.radius - strict_margin


def isometric_sphere(g: GroupElement, k: int = 0) -> IsometricSphere:
    """Isometric sphere of g: center g^-1(q_inf), radius sqrt(2/|g31|)."""
    m = g.matrix
    g31 = m[2][0]
    if abs(complex(g31)) == 0:
        raise FixesInfinity(f"element {g.word!r} fixes q_inf")
    inv = su21_inverse(m)
    lift = (inv[0][0], inv[1][0], inv[2][0])
    if is_exact(lift[2]):
        z = lift[1] / lift[2]
        c0 = lift[0] / lift[2]
        t = 2 * c0.im
        n = g31.norm_sq()           # |g31|^2 exact
        radius4 = 4 / n
        radius = float(radius4) ** 0.25
        center = HeisPoint(z, t)
    else:
        z = complex(lift[1]) / complex(lift[2])
        t = 2 * (complex(lift[0]) / complex(lift[2])).imag
        radius = math.sqrt(2 / abs(complex(g31)))
        radius4 = radius ** 4
        center = HeisPoint(z, t)
    sph = IsometricSphere(word=g.word, k=k, center=center,
                          radius=radius, radius4=radius4, lift=lift)
    return sph


def translate_sphere(s: IsometricSphere, k: int, a_matrix) -> IsometricSphere:
    """Sphere of A^k M A^-k: center moved by the A-action, radius unchanged."""
    if k == 0:
        return s
    lift = s.lift
    step = a_matrix if k > 0 else su21_inverse(a_matrix)
    for _ in range(abs(k)):
        lift = mat_vec(step, lift)
    return IsometricSphere(word=s.word, k=s.k + k,
                           center=a_action(s.center, k),
                           radius=s.radius, radius4=s.radius4, lift=lift)


# -- harmonic curves on the torus ------------------------------------------

@dataclass(frozen=True)
class TorusPoint:
    t1: float
    t2: float

    @property
    def z1(self):
        return complex(math.cos(self.t1), math.sin(self.t1))

    @property
    def z2(self):
        return complex(math.cos(self.t2), math.sin(self.t2))

    def close_to(self, other, tol=1e-7):
        return (abs(self.z1 - other.z1) < tol and abs(self.z2 - other.z2) < tol)


class TorusCurve:
    """Zero set of c + 2Re(p z1) + 2Re(q z2) + 2Re(r z1 conj z2) on the torus."""

    __slots__ = ("c", "p", "q", "r")

    def __init__(self, c, p, q, r):
        self.c = float(c)
        self.p = complex(p)
        self.q = complex(q)
        self.r = complex(r)

    def eval(self, z1, z2):
        return (self.c + 2 * (self.p * z1).real + 2 * (self.q * z2).real
                + 2 * (self.r * z1 * np.conj(z2)).real)

    def eval_angles(self, t1, t2):
        return self.eval(np.exp(1j * np.asarray(t1)), np.exp(1j * np.asarray(t2)))

    def grad_angles(self, t1, t2):
        z1, z2 = np.exp(1j * np.asarray(t1)), np.exp(1j * np.asarray(t2))
        d1 = 2 * (1j * self.p * z1).real + 2 * (1j * self.r * z1 * np.conj(z2)).real
        d2 = 2 * (1j * self.q * z2).real + 2 * (-1j * self.r * z1 * np.conj(z2)).real
        return d1, d2

    def transposed(self):
        return TorusCurve(self.c, self.q, self.p, np.conj(self.r))

    # For fixed z1 the equation reads alpha(z1) + 2 Re(w(z1) conj(z2)) = 0.
    def _alpha_w(self, z1):
        alpha = self.c + 2 * (self.p * z1).real
        w = np.conj(self.q) + self.r * z1
        return alpha, w

    def solve_t2(self, t1, slack: float = 0.0):
        """The 0, 1 or 2 angles t2 with f(e^{i t1}, e^{i t2}) = 0.

        slack > 0 treats barely-unsolvable values (|x| within slack of 1) as
        fold double roots, which keeps sampling robust at interval ends.
        """
        z1 = complex(math.cos(t1), math.sin(t1))
        alpha, w = self._alpha_w(z1)
        aw = abs(w)
        if aw < 1e-15:
            return []
        x = -alpha / (2 * aw)
        if abs(x) > 1 + slack:
            return []
        d = math.acos(max(-1.0, min(1.0, x)))
        base = math.atan2(w.imag, w.real)
        if d < 1e-12:
            return [base % (2 * math.pi)]
        return [(base + d) % (2 * math.pi), (base - d) % (2 * math.pi)]

    def margin_t1(self, t1):
        """2|w| - |alpha|: nonnegative exactly where solutions in t2 exist."""
        z1 = np.exp(1j * np.asarray(t1))
        alpha = self.c + 2 * (self.p * z1).real
        w = np.conj(self.q) + self.r * z1
        return 2 * np.abs(w) - np.abs(alpha)


def _roots_vec(curve: TorusCurve, t1):
    """Vectorized branch roots (sampling grade: |x| clamped into [-1,1])."""
    z1 = np.exp(1j * np.asarray(t1))
    alpha = curve.c + 2 * (curve.p * z1).real
    w = np.conj(curve.q) + curve.r * z1
    aw = np.maximum(np.abs(w), 1e-300)
    x = np.clip(-alpha / (2 * aw), -1.0, 1.0)
    d = np.arccos(x)
    base = np.angle(w)
    return base + d, base - d


def _refine_zero(fun, a, b, iters=80):
    fa = fun(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = fun(m)
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def solvable_intervals(curve: TorusCurve, samples: int = 2048):
    """Intervals of t1 (possibly wrapping) where the curve has t2 solutions.

    Returns ("full", None), ("empty", None) or ("intervals", [(a, b), ...]).
    """
    ts = np.linspace(0, 2 * math.pi, samples, endpoint=False)
    g = curve.margin_t1(ts)
    if np.all(g >= 0):
        return ("full", None)
    if np.all(g < 0):
        return ("empty", None)
    # rotate so that the scan starts in a negative region
    start = int(np.argmin(g))
    f = lambda t: float(curve.margin_t1(t))
    intervals = []
    state = False
    open_a = None
    prev_t = ts[start]
    prev_g = g[start]
    for i in range(1, samples + 1):
        idx = (start + i) % samples
        t = ts[idx] + (2 * math.pi if (start + i) >= samples else 0.0)
        gg = g[idx]
        if prev_g < 0 <= gg:
            open_a = _refine_zero(f, prev_t, t)
            state = True
        elif state and gg < 0 <= prev_g:
            b = _refine_zero(f, t, prev_t)
            intervals.append((open_a % (2 * math.pi), b % (2 * math.pi)))
            state = False
        prev_t, prev_g = t, gg
    return ("intervals", intervals)


class CurveLoop:
    """A component of a harmonic curve parametrized over a t1 interval.

    Graph-type components live over a t1 interval with two branches.  At a
    genuine fold endpoint the branches meet and the component closes up; at
    a degenerate endpoint (the interval abuts a whole fiber of the zero set)
    the branches end at distinct points and the component is an open arc.
    Band components wrap the t1 circle on a single branch.
    """

    _FOLD_GAP = 0.05

    def __init__(self, curve, a, b, branch=None, half=0):
        self.curve = curve
        self.a = a
        self.b = b if b > a else b + 2 * math.pi
        self.branch = branch      # None: two-branch component; +1/-1: single branch
        self.open = False
        self.both_degenerate = False
        self._from_b = False      # open arc parametrized from the b end
        self._deg_a = self._deg_b = False
        partial = (self.b - self.a) < 2 * math.pi - 1e-12
        if partial:
            self._deg_a = self._end_gap(self.a, +1) > self._FOLD_GAP
            self._deg_b = self._end_gap(self.b, -1) > self._FOLD_GAP
        if branch is None and partial:
            dega, degb = self._deg_a, self._deg_b
            self.both_degenerate = dega and degb
            if degb and not dega:
                self.open = True
                self._from_b = True
            elif dega:
                self.open = True
        elif branch is not None and partial:
            self.open = True       # single branch over a partial interval

    def _end_gap(self, t1, direction):
        roots = self.curve.solve_t2(t1 + direction * 1e-6, slack=1e-9)
        if len(roots) < 2:
            return 0.0
        return abs(np.exp(1j * roots[0]) - np.exp(1j * roots[1]))

    def _roots_extrapolated(self, end, direction):
        """Exact branch-root limits at a degenerate interval end.

        On the fiber f vanishes identically, so f(end + eps, t2)/eps tends to
        the t1-derivative of f along the fiber, itself a cosine equation in
        t2 that is solved in closed form.  Direct root extraction there would
        divide coefficient noise by a vanishing |w|.
        """
        z1 = complex(math.cos(end), math.sin(end))
        a = 2 * (1j * self.curve.p * z1).real
        w = 1j * self.curve.r * z1
        aw = abs(w)
        if aw < 1e-12:
            raise ArithmeticError("degenerate end with vanishing derivative")
        x = -a / (2 * aw)
        if abs(x) > 1 + 1e-9:
            raise ArithmeticError("no branch roots at degenerate end")
        d = math.acos(max(-1.0, min(1.0, x)))
        base = math.atan2(w.imag, w.real)
        roots = [(base + d) % (2 * math.pi), (base - d) % (2 * math.pi)]
        if direction < 0:
            roots.reverse()   # match the [base+d, base-d] order of solve_t2
        return roots

    def _roots_sorted(self, t1):
        # only the last ~1e-8 towards a degenerate end is ill-conditioned;
        # beyond that direct root extraction is accurate
        if self._deg_a and abs(t1 - self.a) < 1e-8:
            return self._roots_extrapolated(self.a, +1)
        if self._deg_b and abs(t1 - self.b) < 1e-8:
            return self._roots_extrapolated(self.b, -1)
        roots = self.curve.solve_t2(t1)
        if len(roots) == 1:
            return [roots[0], roots[0]]
        if not roots:
            # right at a fold |x| creeps beyond 1 by rounding; clamping
            # yields the (double) fold root with O(sqrt(noise)) accuracy
            for slack in (1e-9, 1e-6, 1e-3):
                roots = self.curve.solve_t2(t1, slack=slack)
                if roots:
                    return [roots[0], roots[-1]]
            nudge = (self.b - self.a) * 1e-6
            mid = 0.5 * (self.a + self.b)
            t1n = t1 + (nudge if mid > t1 else -nudge)
            roots = self.curve.solve_t2(t1n, slack=1e-3)
            if roots:
                return [roots[0], roots[-1]]
            raise ArithmeticError("no branch root inside solvable interval")
        return roots  # [base+d, base-d]

    def point_at(self, s: float) -> TorusPoint:
        u = min(max(s, 0.0), 1.0) if self.open else s % 1.0
        L = self.b - self.a
        if self.branch is None:
            # [0, 0.5]: + branch, [0.5, 1]: - branch; an open arc runs from
            # its degenerate end through the opposite fold and back
            if u <= 0.5:
                frac = 2 * u if not self._from_b else 1.0 - 2 * u
                t1 = self.a + frac * L
                t2 = self._roots_sorted(np.clip(t1, self.a + 1e-13, self.b - 1e-13))[0]
            else:
                frac = 2 * (1.0 - u) if not self._from_b else 2 * (u - 0.5)
                t1 = self.a + frac * L
                t2 = self._roots_sorted(np.clip(t1, self.a + 1e-13, self.b - 1e-13))[1]
            return TorusPoint(t1 % (2 * math.pi), t2)
        t1 = self.a + u * L
        idx = 0 if self.branch > 0 else 1
        t1c = np.clip(t1, self.a + 1e-13, self.b - 1e-13) if self.open else t1
        return TorusPoint(t1 % (2 * math.pi), self._roots_sorted(t1c)[idx])

    def _t1_in_interval(self, t1):
        # interval ends at tangential folds are only located to ~1e-8
        t1 = t1 % (2 * math.pi)
        for c in (t1, t1 + 2 * math.pi, t1 - 2 * math.pi):
            if self.a - 1e-7 <= c <= self.b + 1e-7:
                return min(max(c, self.a), self.b)
        return None

    def contains(self, pt: TorusPoint, tol: float = 1e-6) -> bool:
        t1 = self._t1_in_interval(pt.t1)
        if t1 is None:
            return False
        try:
            roots = self._roots_sorted(np.clip(t1, self.a + 1e-13, self.b - 1e-13))
        except ArithmeticError:
            return False
        if self.branch is not None:
            roots = [roots[0 if self.branch > 0 else 1]]
        z = np.exp(1j * pt.t2)
        return min(abs(z - np.exp(1j * r)) for r in roots) < tol

    def param_of(self, pt: TorusPoint) -> float:
        t1 = self._t1_in_interval(pt.t1)
        if t1 is None:
            raise ValueError("point outside the loop's t1 range")
        L = self.b - self.a
        frac = (t1 - self.a) / L
        if self.branch is None:
            roots = self._roots_sorted(np.clip(t1, self.a + 1e-13, self.b - 1e-13))
            d0 = abs(np.exp(1j * pt.t2) - np.exp(1j * roots[0]))
            d1 = abs(np.exp(1j * pt.t2) - np.exp(1j * roots[1]))
            plus = d0 <= d1
            if self._from_b:
                u = 0.5 * (1.0 - frac) if plus else 0.5 + 0.5 * frac
            else:
                u = 0.5 * frac if plus else 1.0 - 0.5 * frac
        else:
            u = frac
        if self.open:
            return min(max(u, 0.0), 1.0)
        return u % 1.0

    def sample(self, n=512):
        return [self.point_at(s) for s in np.linspace(0, 1, n, endpoint=False)]


def curve_components(curve: TorusCurve):
    """Closed components of the curve: degenerate circles plus graph loops.

    Generic curves are graphs over a t1 interval (falling back to t2, and to
    the two wrapping branches for curves wrapping both ways).  Degenerate
    curves containing whole fibers or diagonals get those as explicit parts;
    completeness of the decomposition is then verified on a grid.
    """
    fibers = fiber_parts(curve)
    f1 = [p for p in fibers if p.axis == 1]
    f2 = [p for p in fibers if p.axis == 2]
    kind, intervals = solvable_intervals(curve)
    if kind == "intervals":
        # graphs over t1 trace z2-fibers themselves; only z1-fibers are extra
        comps = list(f1)
        for a, b in intervals:
            loop = CurveLoop(curve, a, b)
            if loop.both_degenerate:
                comps.append(CurveLoop(curve, a, b, branch=+1))
                comps.append(CurveLoop(curve, a, b, branch=-1))
            else:
                comps.append(loop)
        parts = f1
    elif kind == "full":
        tkind, tintervals = solvable_intervals(curve.transposed())
        if tkind == "intervals":
            comps = list(f2)
            for a, b in tintervals:
                loop = CurveLoop(curve.transposed(), a, b)
                if loop.both_degenerate:
                    comps.append(_TransposedLoop(CurveLoop(curve.transposed(), a, b, branch=+1)))
                    comps.append(_TransposedLoop(CurveLoop(curve.transposed(), a, b, branch=-1)))
                else:
                    comps.append(_TransposedLoop(loop))
            parts = f2
        else:
            comps = f1 + [CurveLoop(curve, 0.0, 2 * math.pi, branch=+1),
                          CurveLoop(curve, 0.0, 2 * math.pi, branch=-1)]
            parts = f1
    else:
        comps = parts = fibers
    if parts:
        _check_degenerate_cover(curve, comps)
    return comps


def _check_degenerate_cover(curve, parts, grid=256):
    """Assert the degenerate parts cover the whole zero set of the curve."""
    ts, Z1, Z2 = _torus_grid(grid)
    vals = np.abs(curve.eval(Z1, Z2))
    scale = max(1.0, abs(curve.c), 2 * abs(curve.p), 2 * abs(curve.q), 2 * abs(curve.r))
    ii, jj = np.nonzero(vals < 1e-6 * scale)
    for i, j in zip(ii[::7], jj[::7]):
        p = TorusPoint(ts[i], ts[j])
        if not any(part.contains(p, tol=5e-3) for part in parts):
            raise TangencyFlag(
                "degenerate curve decomposition incomplete near "
                f"({ts[i]:.4f}, {ts[j]:.4f})")


class FiberLoop:
    """Degenerate component {z1 = zeta} or {z2 = zeta} of a harmonic curve."""

    open = False

    def __init__(self, axis: int, angle: float):
        self.axis = axis          # 1: z1 fixed, 2: z2 fixed
        self.angle = angle % (2 * math.pi)

    def point_at(self, s):
        t = (s % 1.0) * 2 * math.pi
        return TorusPoint(self.angle, t) if self.axis == 1 else TorusPoint(t, self.angle)

    def param_of(self, pt):
        t = pt.t2 if self.axis == 1 else pt.t1
        return (t % (2 * math.pi)) / (2 * math.pi)

    def contains(self, pt, tol=1e-6):
        t = pt.t1 if self.axis == 1 else pt.t2
        return abs(np.exp(1j * t) - np.exp(1j * self.angle)) < tol

    def sample(self, n=512):
        return [self.point_at(s) for s in np.linspace(0, 1, n, endpoint=False)]


def fiber_parts(curve: TorusCurve, tol: float = 1e-9):
    """Whole-fiber components {z_i = const} of the zero set.

    The zero set contains the fiber {z1 = zeta} iff alpha(zeta) = 0 and
    w(zeta) = 0, which pins zeta = -conj(q)/r; similarly for z2 fibers.
    Fibers are invisible to the graph parametrization (a full circle at one
    t1 value), so they are carried as explicit components; every other
    degenerate shape (diagonal and Moebius circles) is a graph over t1 and
    is covered by the generic interval machinery.
    """
    scale = max(1.0, abs(curve.c), abs(curve.p), abs(curve.q), abs(curve.r))
    t = tol * scale
    parts = []
    if abs(curve.r) > t:
        zeta = -np.conj(curve.q) / curve.r
        if (abs(abs(zeta) - 1) < tol
                and abs(curve.c + 2 * (curve.p * zeta).real) < t):
            parts.append(FiberLoop(1, math.atan2(zeta.imag, zeta.real)))
        zeta2 = np.conj(-curve.p / curve.r)
        if (abs(abs(zeta2) - 1) < tol
                and abs(curve.c + 2 * (curve.q * zeta2).real) < t):
            parts.append(FiberLoop(2, math.atan2(zeta2.imag, zeta2.real)))
    return parts


class _TransposedLoop:
    """CurveLoop adapter swapping the two torus angles."""

    def __init__(self, inner):
        self.inner = inner
        self.open = inner.open

    def point_at(self, s):
        p = self.inner.point_at(s)
        return TorusPoint(p.t2, p.t1)

    def param_of(self, pt):
        return self.inner.param_of(TorusPoint(pt.t2, pt.t1))

    def contains(self, pt, tol=1e-6):
        return self.inner.contains(TorusPoint(pt.t2, pt.t1), tol)

    def sample(self, n=512):
        return [TorusPoint(p.t2, p.t1) for p in self.inner.sample(n)]


# -- Giraud charts -----------------------------------------------------------

_GRID_CACHE = {}


def _torus_grid(n):
    if n not in _GRID_CACHE:
        ts = np.linspace(0, 2 * math.pi, n, endpoint=False)
        Z1 = np.exp(1j * ts)[:, None]
        Z2 = np.exp(1j * ts)[None, :]
        _GRID_CACHE[n] = (ts, Z1, Z2)
    return _GRID_CACHE[n]


class GiraudChart:
    """Spinal coordinates on the intersection torus of two isometric spheres.

    V(z1, z2) = v0 + z1 v1 + z2 v2 with v0 = q x r, v1 = r x p, v2 = p x q,
    where p is the lift of q_inf and q, r are the defining lifts of the two
    spheres.  The Giraud disk is the locus <V,V> < 0.
    """

    def __init__(self, s1: IsometricSphere, s2: IsometricSphere):
        self.s1 = s1
        self.s2 = s2
        p = vec_to_complex(Q_INF)
        q = vec_to_complex(s1.lift)
        r = vec_to_complex(s2.lift)
        if abs(np.linalg.det(np.array([p, q, r]))) < 1e-12:
            raise DegenerateTriple(
                f"lifts of ({s1.label}, {s2.label}) are linearly dependent")
        self.p, self.q, self.r = p, q, r
        self.v0 = vec_to_complex(box_product(q, r))
        self.v1 = vec_to_complex(box_product(r, p))
        self.v2 = vec_to_complex(box_product(p, q))
        h = hermitian_form
        c = (complex(h(self.v0, self.v0)) + complex(h(self.v1, self.v1))
             + complex(h(self.v2, self.v2))).real
        self.norm_curve = TorusCurve(c,
                                     complex(h(self.v1, self.v0)),
                                     complex(h(self.v2, self.v0)),
                                     complex(h(self.v1, self.v2)))
        self._trace_cache = {}
        self._interior = None

    def V(self, z1, z2):
        v0, v1, v2 = (np.array(v) for v in (self.v0, self.v1, self.v2))
        return v0 + z1 * v1 + z2 * v2

    def point_lift(self, tp: TorusPoint):
        return tuple(self.V(tp.z1, tp.z2))

    def boundary_heis(self, tp: TorusPoint) -> HeisPoint:
        h = from_lift(self.point_lift(tp))
        return HeisPoint(h.z, h.t)

    def norm_at(self, tp: TorusPoint) -> float:
        return float(self.norm_curve.eval(tp.z1, tp.z2))

    def trace_of_lift(self, lift) -> TorusCurve:
        """Equidistance curve |<V, q_inf>| = |<V, lift>| as a TorusCurve."""
        u = vec_to_complex(Q_INF)
        v = vec_to_complex(lift)
        al = np.array([complex(hermitian_form(w, u)) for w in (self.v0, self.v1, self.v2)])
        be = np.array([complex(hermitian_form(w, v)) for w in (self.v0, self.v1, self.v2)])
        c = float((np.abs(al) ** 2).sum() - (np.abs(be) ** 2).sum())
        p = al[1] * np.conj(al[0]) - be[1] * np.conj(be[0])
        q = al[2] * np.conj(al[0]) - be[2] * np.conj(be[0])
        r = al[1] * np.conj(al[2]) - be[1] * np.conj(be[2])
        return TorusCurve(c, p, q, r)

    def trace_of_sphere(self, s: IsometricSphere) -> TorusCurve:
        key = s.key
        if key not in self._trace_cache:
            self._trace_cache[key] = self.trace_of_lift(s.lift)
        return self._trace_cache[key]

    def min_norm(self, grid: int = 256):
        """(min of <V,V> over the torus, argmin TorusPoint), grid + refinement."""
        ts, Z1, Z2 = _torus_grid(grid)
        vals = self.norm_curve.eval(Z1, Z2)
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        t = np.array([ts[i], ts[j]])
        # a few damped Newton steps on the gradient
        for _ in range(40):
            d1, d2 = self.norm_curve.grad_angles(t[0], t[1])
            g = np.array([float(d1), float(d2)])
            if np.linalg.norm(g) < 1e-14:
                break
            h = 1e-6
            h11 = (self.norm_curve.grad_angles(t[0] + h, t[1])[0] - d1) / h
            h12 = (self.norm_curve.grad_angles(t[0], t[1] + h)[0] - d1) / h
            h22 = (self.norm_curve.grad_angles(t[0], t[1] + h)[1] - d2) / h
            hess = np.array([[h11, h12], [h12, h22]])
            try:
                step = np.linalg.solve(hess, -g)
            except np.linalg.LinAlgError:
                break
            if np.linalg.norm(step) > 0.5:
                step = 0.5 * step / np.linalg.norm(step)
            t2 = t + step
            if self.norm_curve.eval_angles(t2[0], t2[1]) <= self.norm_curve.eval_angles(t[0], t[1]):
                t = t2
            else:
                break
        tp = TorusPoint(float(t[0]) % (2 * math.pi), float(t[1]) % (2 * math.pi))
        return min(float(vals[i, j]), self.norm_at(tp)), tp

    def interior_sample(self) -> TorusPoint:
        if self._interior is None:
            val, tp = self.min_norm()
            if val >= 0:
                raise DegenerateTriple("chart has empty Giraud disk")
            self._interior = tp
        return self._interior

    def giraud_norm(self, tp: TorusPoint) -> float:
        return self.norm_at(tp)


def make_giraud(g1: GroupElement, g2: GroupElement) -> GiraudChart:
    """Chart on the Giraud torus of the isometric spheres of g1^-1, g2^-1.

    The two defining lifts are g1(q_inf) and g2(q_inf); to chart the ridge
    I(h1) meet I(h2) pass g1 = h1^-1, g2 = h2^-1 (the paper's usage).
    """
    s1 = IsometricSphere(word=g1.word, k=0, center=HeisPoint(0j, 0.0), radius=1.0,
                         radius4=1.0, lift=mat_vec(g1.matrix, Q_INF))
    s2 = IsometricSphere(word=g2.word, k=0, center=HeisPoint(0j, 0.0), radius=1.0,
                         radius4=1.0, lift=mat_vec(g2.matrix, Q_INF))
    return GiraudChart(s1, s2)


def chart_for_spheres(s1: IsometricSphere, s2: IsometricSphere) -> GiraudChart:
    return GiraudChart(s1, s2)


# -- root finding -------------------------------------------------------------

def _newton_2d(curves, seeds: int = NEWTON_SEEDS, tol: float = 1e-13):
    """All common zeros of two harmonic curves; batched Newton over a seed grid."""
    ca, cb = curves
    ts = np.linspace(0, 2 * math.pi, seeds, endpoint=False)
    T1, T2 = np.meshgrid(ts, ts, indexing="ij")
    t1 = T1.ravel().copy()
    t2 = T2.ravel().copy()
    for _ in range(60):
        fa = ca.eval_angles(t1, t2)
        fb = cb.eval_angles(t1, t2)
        da1, da2 = ca.grad_angles(t1, t2)
        db1, db2 = cb.grad_angles(t1, t2)
        det = da1 * db2 - da2 * db1
        det = np.where(np.abs(det) < 1e-300, np.nan, det)
        s1 = (-fa * db2 + fb * da2) / det
        s2 = (-fb * da1 + fa * db1) / det
        step = np.sqrt(s1 ** 2 + s2 ** 2)
        scale = np.where(step > 0.7, 0.7 / np.maximum(step, 1e-300), 1.0)
        t1 = t1 + np.nan_to_num(s1 * scale)
        t2 = t2 + np.nan_to_num(s2 * scale)
    fa = ca.eval_angles(t1, t2)
    fb = cb.eval_angles(t1, t2)
    ok = (np.abs(fa) < 1e-11) & (np.abs(fb) < 1e-11)
    pts = []
    for u, v in zip(t1[ok], t2[ok]):
        cand = TorusPoint(float(u) % (2 * math.pi), float(v) % (2 * math.pi))
        if not any(cand.close_to(p, DEDUP_TOL) for p in pts):
            pts.append(cand)
    # polish each survivor to full precision
    out = []
    for p in pts:
        t = np.array([p.t1, p.t2])
        for _ in range(50):
            fa = float(ca.eval_angles(t[0], t[1]))
            fb = float(cb.eval_angles(t[0], t[1]))
            if max(abs(fa), abs(fb)) < tol:
                break
            da1, da2 = ca.grad_angles(t[0], t[1])
            db1, db2 = cb.grad_angles(t[0], t[1])
            J = np.array([[float(da1), float(da2)], [float(db1), float(db2)]])
            try:
                st = np.linalg.solve(J, -np.array([fa, fb]))
            except np.linalg.LinAlgError:
                break
            t = t + st
        cand = TorusPoint(float(t[0]) % (2 * math.pi), float(t[1]) % (2 * math.pi))
        if max(abs(float(ca.eval_angles(cand.t1, cand.t2))),
               abs(float(cb.eval_angles(cand.t1, cand.t2)))) < 1e-11:
            if not any(cand.close_to(pp, DEDUP_TOL) for pp in out):
                out.append(cand)
    return out


def _scan_curve_zeros(comp, fun, samples: int = 4096, touch_tol: float = 1e-4):
    """Zeros of fun along a parametrized curve component.

    Sign changes are bisected; local minima of |fun| below touch_tol are
    refined as well, catching tangential touches and crossing pairs closer
    than the sample spacing.
    """
    is_open = getattr(comp, "open", False)
    ss = np.linspace(0.0, 1.0, samples, endpoint=is_open)
    pts = [comp.point_at(s) for s in ss]
    vals = np.array([fun(p) for p in pts])
    out = []

    def bisect(sa, sb):
        fa = fun(comp.point_at(sa))
        for _ in range(80):
            sm = 0.5 * (sa + sb)
            fm = fun(comp.point_at(sm))
            if fa * fm <= 0:
                sb = sm
            else:
                sa, fa = sm, fm
        return 0.5 * (sa + sb)

    n = len(ss)
    last = n - 1 if is_open else n
    for i in range(last):
        j = (i + 1) % n
        sa, sb = ss[i], ss[j] if j else 1.0
        if vals[i] == 0.0:
            out.append(ss[i])
        if vals[i] * vals[j] < 0:
            out.append(bisect(sa, sb))
    # tangential touches / unresolved close pairs at local minima of |fun|
    av = np.abs(vals)
    for i in range(n):
        if av[i] > touch_tol:
            continue
        im, ip = (i - 1) % n, (i + 1) % n
        if is_open and (i == 0 or i == n - 1):
            continue
        if av[i] <= av[im] and av[i] <= av[ip]:
            sa, sb = ss[im], ss[i] + (ss[ip] - ss[i])
            # golden-section refine |fun|
            lo, hi = ss[im], ss[ip] if ss[ip] > ss[im] else ss[ip] + 1.0 / n
            for _ in range(60):
                m1 = lo + 0.382 * (hi - lo)
                m2 = lo + 0.618 * (hi - lo)
                if abs(fun(comp.point_at(m1))) < abs(fun(comp.point_at(m2))):
                    hi = m2
                else:
                    lo = m1
            sm = 0.5 * (lo + hi)
            vm = fun(comp.point_at(sm))
            if abs(vm) < 1e-9:
                out.append(sm)
            elif vm * vals[i - 2 if i >= 2 else i] < 0:
                out.append(bisect(lo, sm))
                out.append(bisect(sm, hi))
    res = []
    for s in out:
        p = comp.point_at(s % 1.0 if not is_open else min(max(s, 0.0), 1.0))
        if not any(p.close_to(q, DEDUP_TOL) for q in res):
            res.append(p)
    return res


def _merge_fiber_crossings(pts, curve_a, curve_b):
    """Replace Newton roots near fibers of either curve by exact solutions.

    Along a fiber of one curve that form vanishes identically, so crossings
    with the other curve reduce to the one-variable cosine solve; tangential
    contacts there defeat the 2D Newton (it smears along the near-zero set).
    """
    exact = []
    drop_zones = []
    for own, other in ((curve_a, curve_b), (curve_b, curve_a)):
        for fib in fiber_parts(own):
            drop_zones.append(fib)
            if fib.axis == 1:
                for t2 in other.solve_t2(fib.angle, slack=1e-9):
                    exact.append(TorusPoint(fib.angle, t2))
            else:
                for t1 in other.transposed().solve_t2(fib.angle, slack=1e-9):
                    exact.append(TorusPoint(t1, fib.angle))
    if not drop_zones:
        return pts
    out = []
    for p in pts:
        near = any((abs(np.exp(1j * (p.t1 if f.axis == 1 else p.t2))
                        - np.exp(1j * f.angle)) < 1e-4) for f in drop_zones)
        if not near:
            out.append(p)
    for p in exact:
        if not any(p.close_to(q, DEDUP_TOL) for q in out):
            out.append(p)
    return out


def curves_common_zeros(curve_a: TorusCurve, curve_b: TorusCurve):
    """All common zeros of two harmonic curves.

    Scans curve_b along the traced components of curve_a (sign changes and
    tangential touches); crossings lying on a fiber of either curve are
    recomputed by the exact one-variable solve.
    """
    pts = []
    for comp in curve_components(curve_a):
        for p in _scan_curve_zeros(comp, lambda q: float(curve_b.eval(q.z1, q.z2))):
            if not any(p.close_to(q, DEDUP_TOL) for q in pts):
                pts.append(p)
    pts = _merge_fiber_crossings(pts, curve_a, curve_b)
    return pts


def boundary_intersections(chart: GiraudChart, lift_or_sphere, seeds: int = NEWTON_SEEDS):
    """Points where a sphere's trace meets the ideal circle of the chart."""
    lift = lift_or_sphere.lift if isinstance(lift_or_sphere, IsometricSphere) else lift_or_sphere
    tr = chart.trace_of_lift(lift) if not isinstance(lift_or_sphere, IsometricSphere) \
        else chart.trace_of_sphere(lift_or_sphere)
    pts = curves_common_zeros(tr, chart.norm_curve)
    return sorted(pts, key=lambda p: (round(p.t1, 9), round(p.t2, 9)))


def curve_curve_points(chart: GiraudChart, sa: IsometricSphere, sb: IsometricSphere,
                       seeds: int = NEWTON_SEEDS):
    """Intersections of two sphere traces lying on the closed Giraud disk."""
    ca, cb = chart.trace_of_sphere(sa), chart.trace_of_sphere(sb)
    pts = curves_common_zeros(ca, cb)
    return [p for p in pts if chart.norm_at(p) <= 1e-9]


@dataclass
class TraceCurve:
    chart: GiraudChart
    curve: TorusCurve
    arcs: list              # polyline arcs (lists of TorusPoint) inside the disk

    @property
    def solved_branches(self):
        return self.arcs


def trace_curve(chart: GiraudChart, u_sphere: IsometricSphere, n_samples: int = 1024) -> TraceCurve:
    """Trace of a sphere on the chart, clipped to the closed Giraud disk."""
    curve = chart.trace_of_sphere(u_sphere)
    arcs = []
    for comp in curve_components(curve):
        pts = comp.sample(n_samples)
        inside = [chart.norm_at(p) <= 0 for p in pts]
        if not any(inside):
            continue
        if all(inside):
            arcs.append(pts)
            continue
        start = inside.index(False)   # rotate the cyclic scan to begin outside
        run = []
        for i in range(1, len(pts) + 1):
            j = (start + i) % len(pts)
            if inside[j]:
                run.append(pts[j])
            elif run:
                arcs.append(run)
                run = []
        if run:
            arcs.append(run)
    return TraceCurve(chart=chart, curve=curve, arcs=arcs)


def curve_meets_disk(chart: GiraudChart, curve: TorusCurve, samples: int = 2048,
                     margin: float = EPS_NULL):
    """Does the zero curve meet the open Giraud disk?  Samples each component.

    Returns (verdict, witness, closest_norm): the witness is a TorusPoint on
    the curve with negative norm when the verdict is True.
    """
    best = math.inf
    witness = None
    for comp in curve_components(curve):
        for p in comp.sample(samples):
            v = chart.norm_at(p)
            if v < best:
                best, witness = v, p
    if best == math.inf:
        return False, None, best
    return best < -margin, witness, best


def critical_points(curve: TorusCurve, seeds: int = 24):
    """Critical points of the harmonic form on the torus (gradient zeros)."""
    grad1 = TorusCurve(0.0, 1j * curve.p, 0j, 1j * curve.r)
    grad2 = TorusCurve(0.0, 0j, 1j * curve.q, -1j * curve.r)
    return _newton_2d((grad1, grad2), seeds=seeds)


def cygan_sphere_points(center, radius, n_s: int = 24, n_th: int = 48):
    """Sample grid on a Cygan sphere: |z-z0|^2 = s, t variation from the
    sphere equation (|s + i(t - t0 + 2 Im(z conj z0))| = r^2)."""
    from .geometry import HeisPoint
    z0, t0 = complex(center.z), float(center.t)
    pts = []
    for s in np.linspace(0.0, radius ** 2, n_s):
        vert = (radius ** 4 - s * s)
        vert = math.sqrt(vert) if vert > 0 else 0.0
        for th in np.linspace(0, 2 * math.pi, n_th, endpoint=False):
            z = z0 + math.sqrt(s) * complex(math.cos(th), math.sin(th))
            base = t0 - 2 * (z * np.conj(z0)).imag
            pts.append(HeisPoint(z, base + vert))
            if vert > 0:
                pts.append(HeisPoint(z, base - vert))
    return pts


def _spheres_intersect_degenerate(s1, s2, eps):
    """Surface test when the defining lifts are linearly dependent.

    The pair fails the Giraud condition (common complex line through
    q_inf), so decide by sampling one spinal sphere against the other:
    a transversal intersection puts sample points strictly on both sides.
    """
    from .geometry import cygan_distance
    signs = [cygan_distance(p, s2.center) - s2.radius
             for p in cygan_sphere_points(s1.center, s1.radius)]
    return min(signs) < -max(eps, 1e-8) and max(signs) > max(eps, 1e-8)


def spheres_intersect(s1: IsometricSphere, s2: IsometricSphere,
                      eps: float = EPS_NULL, grid: int = 256):
    """True iff the bisectors meet, i.e. the Giraud disk is nonempty."""
    if s1.key == s2.key:
        raise ValueError("spheres coincide")
    from .geometry import cygan_distance
    d = cygan_distance(s1.center, s2.center)
    if d > s1.radius + s2.radius + 1e-12:
        return False
    try:
        chart = GiraudChart(s1, s2)
    except DegenerateTriple:
        return _spheres_intersect_degenerate(s1, s2, eps)
    val, _ = chart.min_norm(grid=grid)
    return val < -eps


def disk_inside_sphere(chart: GiraudChart, s: IsometricSphere,
                       samples: int = 2048) -> str:
    """Classify the Giraud disk against a sphere: Inside / Outside / Crossing.

    Crossing when the trace meets the closed disk; otherwise the sign of the
    equidistance form at an interior sample decides.  Near-tangent data (the
    trace approaching the disk within EPS_TANGENT) raises TangencyFlag.
    """
    curve = chart.trace_of_sphere(s)
    hits = boundary_intersections(chart, s)
    if hits:
        return "Crossing"
    meets, witness, closest = curve_meets_disk(chart, curve, samples=samples)
    if meets:
        return "Crossing"
    if closest != math.inf and -EPS_TANGENT < closest < EPS_TANGENT:
        raise TangencyFlag(
            f"trace of {s.label} tangent to disk within {closest:.2e}")
    tp = chart.interior_sample()
    val = float(curve.eval(tp.z1, tp.z2))
    if abs(val) < EPS_TANGENT:
        raise TangencyFlag(f"interior sample ambiguous for {s.label}: {val:.2e}")
    # the interior of I(G) is where |<p, q_inf>| > |<p, G^-1 q_inf>|, i.e.
    # the trace form (|<V,q_inf>|^2 - |<V,lift>|^2) is positive
    return "Inside" if val > 0 else "Outside"
