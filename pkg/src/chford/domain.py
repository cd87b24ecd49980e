"""Partial Ford domains: sphere systems, ridge regions, cycles, certificates.

A partial domain is the exterior of the isometric spheres I(g)^k for g in a
word set and k in a translate window.  Words naming the same sphere are
merged into families; every sphere is addressed by a label (family_word, k).

Ridge regions are computed on Giraud charts as an arrangement of harmonic
curves on the disk: cut the ideal circle and every neighbouring trace at all
intersection points, keep the elementary arcs lying outside every other
sphere, and chain them into closed boundary components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bisectors import (DEDUP_TOL, FiberLoop, GiraudChart, IsometricSphere,
                        TangencyFlag, TorusPoint, boundary_intersections,
                        chart_for_spheres, curve_components, curve_curve_points,
                        isometric_sphere, spheres_intersect, translate_sphere)
from .geometry import (HeisPoint, Q_INF, a_action, cygan_distance, from_lift,
                       classify_isometry, hermitian_form, to_lift)
from .qi import mat_identity, mat_mul, mat_to_complex, mat_vec, projective_deviation, su21_inverse
from .triangle import (INV_LETTER, GroupElement, RepresentationBundle,
                       eval_word, invert_word)

ARC_KEEP_MARGIN = 1e-9     # |F| above this decides containment strictly
POINT_MERGE_TOL = 1e-7     # cut points closer than this on a curve are merged
SECTOR_EPS = 2e-5          # angular offset for sector side tests


class OpenCycle(RuntimeError):
    pass


class DomainLookupError(KeyError):
    pass


def translate_label(label, j):
    return (label[0], label[1] + j)


@dataclass(frozen=True)
class RidgeArc:
    kind: str                 # "sphere" | "ideal"
    label: tuple | None       # (word, k) of the cutting sphere, None for ideal
    start: TorusPoint | None  # None for a closed loop
    end: TorusPoint | None
    mid: TorusPoint

    def shifted(self, j):
        if self.kind == "ideal" or j == 0:
            return self if j == 0 else RidgeArc(self.kind, self.label,
                                                self.start, self.end, self.mid)
        return RidgeArc(self.kind, translate_label(self.label, j),
                        self.start, self.end, self.mid)


@dataclass(frozen=True)
class RidgeComponent:
    arcs: tuple               # cyclic tuple of RidgeArc

    @property
    def n_arcs(self):
        return len(self.arcs)

    @property
    def n_ideal(self):
        return sum(1 for a in self.arcs if a.kind == "ideal")

    def shape(self):
        return (self.n_arcs, self.n_ideal)


@dataclass(frozen=True)
class RidgeRegion:
    pair: tuple               # ((w1,k1),(w2,k2)), canonical order
    components: tuple         # RidgeComponent tuple; empty means dead ridge
    empty_reason: str | None
    shared_vertices: int      # vertices traversed by two components

    @property
    def nonempty(self):
        return bool(self.components)

    @property
    def has_ideal(self):
        return any(c.n_ideal for c in self.components)

    def ideal_arcs(self):
        return [a for c in self.components for a in c.arcs if a.kind == "ideal"]

    def shape_summary(self):
        return tuple(sorted(c.shape() for c in self.components))

    def shifted(self, j):
        if j == 0:
            return self
        comps = tuple(RidgeComponent(tuple(a.shifted(j) for a in c.arcs))
                      for c in self.components)
        return RidgeRegion(tuple(translate_label(l, j) for l in self.pair),
                           comps, self.empty_reason, self.shared_vertices)


class PartialDomain:
    """Sphere system of a word set with all A-translates in a window."""

    def __init__(self, bundle: RepresentationBundle, words, k_range=(-6, 6)):
        self.bundle = bundle
        self.words = tuple(words)
        self.k_range = tuple(k_range)
        self._build_families()
        self._build_spheres()
        self._ridge_cache = {}
        self._intersect_cache = {}

    # -- construction ------------------------------------------------------

    def _build_families(self):
        reps = []          # family representative words, in input order
        alias = {}
        base = {}
        for w in self.words:
            s = isometric_sphere(eval_word(self.bundle, w))
            placed = False
            for rep in reps:
                for j in range(-4, 5):
                    t = translate_sphere(base[rep], j, self.bundle.A.matrix)
                    if s.key == t.key:
                        alias[w] = (rep, j)
                        placed = True
                        break
                if placed:
                    break
            if not placed:
                reps.append(w)
                alias[w] = (w, 0)
                base[w] = s
        self.families = tuple(reps)
        self.alias = alias
        self._family_rank = {w: i for i, w in enumerate(reps)}
        self._base_spheres = base

    def _build_spheres(self):
        lo, hi = self.k_range
        self.spheres = {}
        self.center_lookup = {}
        for w in self.families:
            for k in range(lo, hi + 1):
                s = translate_sphere(self._base_spheres[w], k, self.bundle.A.matrix)
                label = (w, k)
                self.spheres[label] = s
                ck = self._center_key(s.center)
                if ck in self.center_lookup:
                    raise AssertionError(f"center collision {label} vs {self.center_lookup[ck]}")
                self.center_lookup[ck] = label
        self.max_radius = max(s.radius for s in self.spheres.values())

    @staticmethod
    def _center_key(c: HeisPoint):
        z, t = c.as_floats()
        return (round(z.real, 7), round(z.imag, 7), round(t, 7))

    def k_certificate(self) -> int:
        """Smallest K with |k| > K implying no intersection with the k=0 strip.

        Cygan distance dominates the horizontal gap |Re(z1 - z2)|, centers
        drift by exactly -2 per A-power, so 2|k| - spread > r1 + r2 suffices.
        """
        res = [complex(self._base_spheres[w].center.z).real for w in self.families]
        spread = max(res) - min(res)
        need = (2 * self.max_radius + spread) / 2
        K = math.ceil(need)
        lo, hi = self.k_range
        if hi < K or -lo < K:
            raise ValueError(f"k_range {self.k_range} below certificate bound {K}")
        return K

    # -- lookups -----------------------------------------------------------

    def sphere(self, label) -> IsometricSphere:
        if label in self.spheres:
            return self.spheres[label]
        raise DomainLookupError(f"sphere {label} outside domain window")

    def sphere_of_word(self, word, k=0):
        """Sphere of A^k I(word) A^-k with alias words resolved to families."""
        rep, j = self.alias.get(word, (None, None))
        if rep is None:
            s = isometric_sphere(eval_word(self.bundle, word))
            if k:
                s = translate_sphere(s, k, self.bundle.A.matrix)
            return s
        return self.sphere((rep, j + k))

    def element(self, label) -> GroupElement:
        w, k = label
        if k >= 0:
            word = "A" * k + w + "a" * k
        else:
            word = "a" * (-k) + w + "A" * (-k)
        return eval_word(self.bundle, word)

    def lookup_center(self, p: HeisPoint):
        key = self._center_key(p)
        if key in self.center_lookup:
            return self.center_lookup[key]
        raise DomainLookupError(f"no domain sphere centered at {p}")

    def rank(self, label):
        return (self._family_rank[label[0]], label[1])

    def canonical_pair(self, la, lb):
        """Canonical representative of the pair mod A; returns (pair, shift)."""
        pair = tuple(sorted((la, lb), key=self.rank))
        j = -pair[0][1]
        return (translate_label(pair[0], j), translate_label(pair[1], j)), j

    # -- intersection scan ---------------------------------------------------

    def neighbours(self, label):
        """Domain spheres whose Cygan balls overlap the labelled sphere."""
        s = self.sphere(label)
        out = []
        for lab, t in self.spheres.items():
            if lab == label:
                continue
            if cygan_distance(s.center, t.center) <= s.radius + t.radius + 1e-9:
                out.append(lab)
        return out

    def intersects(self, la, lb) -> bool:
        pair, _ = self.canonical_pair(la, lb)
        if pair not in self._intersect_cache:
            self._intersect_cache[pair] = spheres_intersect(self.sphere(pair[0]),
                                                            self.sphere(pair[1]))
        return self._intersect_cache[pair]


def build_partial_domain(bundle, words, k_range=(-6, 6)) -> PartialDomain:
    dom = PartialDomain(bundle, words, k_range)
    dom.k_certificate()
    return dom


# -- ridge region computation -------------------------------------------------

def _vertex_key(p: TorusPoint):
    return (round(math.cos(p.t1), 6), round(math.sin(p.t1), 6),
            round(math.cos(p.t2), 6), round(math.sin(p.t2), 6))


def _self_crossings(curve, comps):
    """Self-intersections of a degenerate trace: fiber x branch crossings.

    A trace containing a whole fiber meets its own graph branches where the
    branches reach the fiber angle (including branch ends that terminate on
    the fiber).  These points are genuine vertices of the arrangement, e.g.
    the common vertex of a pentagon-and-quadrangle ridge.
    """
    fibers = [c for c in comps if isinstance(c, FiberLoop)]
    if not fibers:
        return []
    others = [c for c in comps if not isinstance(c, FiberLoop)]
    pts = []

    def push(p):
        if not any(p.close_to(q, 1e-6) for q in pts):
            pts.append(p)

    for fib in fibers:
        th = fib.angle
        for eps in (1e-7, -1e-7):
            if fib.axis == 1:
                roots = curve.solve_t2(th + eps)
                cands = [(TorusPoint(th, r), TorusPoint(th + eps, r)) for r in roots]
            else:
                roots = curve.transposed().solve_t2(th + eps)
                cands = [(TorusPoint(r, th), TorusPoint(r, th + eps)) for r in roots]
            for cand, probe in cands:
                if any(g.contains(probe, 1e-5) for g in others):
                    push(cand)
        for fib2 in fibers:
            if fib.axis == 1 and fib2.axis == 2:
                push(TorusPoint(fib.angle, fib2.angle))
    return pts


def compute_ridge(domain: PartialDomain, la, lb) -> RidgeRegion:
    """Region of the Giraud disk of (la, lb) outside every other sphere."""
    pair, j = domain.canonical_pair(la, lb)
    if pair not in domain._ridge_cache:
        domain._ridge_cache[pair] = _compute_ridge_canonical(domain, pair)
    return domain._ridge_cache[pair].shifted(-j)


def _compute_ridge_canonical(domain, pair):
    s1, s2 = domain.sphere(pair[0]), domain.sphere(pair[1])
    if not domain.intersects(*pair):
        return RidgeRegion(pair, (), "spheres disjoint", 0)
    chart = chart_for_spheres(s1, s2)

    cands = []
    for lab in domain.spheres:
        if lab in pair:
            continue
        t = domain.sphere(lab)
        if (cygan_distance(s1.center, t.center) <= s1.radius + t.radius + 1e-9 and
                cygan_distance(s2.center, t.center) <= s2.radius + t.radius + 1e-9):
            cands.append(lab)

    # triage candidates on a torus grid: a sphere is relevant only where its
    # interior (trace form > 0) meets the open disk (norm < 0)
    from .bisectors import _torus_grid
    ts, Z1, Z2 = _torus_grid(256)
    disk_mask = chart.norm_curve.eval(Z1, Z2) < -ARC_KEEP_MARGIN
    live = {}
    covering = None
    for lab in cands:
        sph = domain.sphere(lab)
        curve = chart.trace_of_sphere(sph)
        fvals = curve.eval(Z1, Z2)
        inside_hits = disk_mask & (fvals > ARC_KEEP_MARGIN)
        if not inside_hits.any():
            continue                      # sphere interior misses the disk
        if not (disk_mask & (fvals < -ARC_KEEP_MARGIN)).any():
            covering = lab                # whole disk inside this sphere
            break
        comps = curve_components(curve)
        hits = boundary_intersections(chart, sph)
        live[lab] = {"curve": curve, "comps": comps, "hits": hits}
    if covering is not None:
        return RidgeRegion(pair, (), f"disk inside sphere {covering}", 0)

    labs = sorted(live, key=domain.rank)
    # cut points: curve x curve inside the disk, curve x ideal circle
    interior_pts = {}
    for i, a in enumerate(labs):
        for b in labs[i + 1:]:
            pts = curve_curve_points(chart, domain.sphere(a), domain.sphere(b))
            if pts:
                interior_pts[(a, b)] = pts

    # assemble elementary arcs for each live curve
    kept = []
    def classify_keep(mid: TorusPoint, own=None, on_circle=False):
        if not on_circle and chart.norm_at(mid) > -ARC_KEEP_MARGIN:
            return False
        for lab in labs:
            if lab == own:
                continue
            v = live[lab]["curve"].eval(mid.z1, mid.z2)
            if v > ARC_KEEP_MARGIN:
                return False
        return True

    for lab in labs:
        data = live[lab]
        pts = list(data["hits"])
        pts.extend(_self_crossings(data["curve"], data["comps"]))
        for (a, b), pl in interior_pts.items():
            if lab in (a, b):
                pts.extend(pl)
        placed = {id(p): 0 for p in pts}
        for comp in data["comps"]:
            on_comp = []
            for p in pts:
                if comp.contains(p):
                    on_comp.append((comp.param_of(p), p))
                    placed[id(p)] += 1
            if getattr(comp, "open", False):
                # the two free ends of an open branch always bound arcs
                on_comp.append((0.0, comp.point_at(0.0)))
                on_comp.append((1.0, comp.point_at(1.0)))
            on_comp.sort(key=lambda sp: sp[0])
            merged = []
            for s, p in on_comp:
                if merged and (abs(s - merged[-1][0]) < 1e-9
                               or p.close_to(merged[-1][1], 1e-6)):
                    continue
                merged.append((s, p))
            if not merged:
                mid = comp.point_at(0.0)
                if classify_keep(mid, own=lab):
                    kept.append(RidgeArc("sphere", lab, None, None, mid))
                continue
            m = len(merged)
            spans = range(m - 1) if getattr(comp, "open", False) else range(m)
            for i in spans:
                s0, p0 = merged[i]
                s1_, p1 = merged[(i + 1) % m]
                span = (s1_ - s0) % 1.0 if not getattr(comp, "open", False) else (s1_ - s0)
                if span < 1e-9:
                    continue
                if span < 1e-3 and p0.close_to(p1, 1e-6):
                    continue          # wrap-around duplicate of the same vertex
                smid = (s0 + span / 2) % 1.0
                mid = comp.point_at(smid)
                if classify_keep(mid, own=lab):
                    kept.append(RidgeArc("sphere", lab, p0, p1, mid))

    # ideal circle arcs
    circle_comps = curve_components(chart.norm_curve)
    shared = 0
    for comp in circle_comps:
        pts = [p for d in live.values() for p in d["hits"]]
        on_comp = []
        for p in pts:
            if comp.contains(p):
                on_comp.append((comp.param_of(p) % 1.0, p))
        on_comp.sort(key=lambda sp: sp[0])
        merged = []
        for s, p in on_comp:
            if merged and (abs(s - merged[-1][0]) < 1e-9
                           or p.close_to(merged[-1][1], 1e-6)):
                continue
            merged.append((s, p))
        if not merged:
            mid = comp.point_at(0.0)
            if classify_keep(mid, on_circle=True):
                kept.append(RidgeArc("ideal", None, None, None, mid))
            continue
        m = len(merged)
        for i in range(m):
            s0, p0 = merged[i]
            s1_, p1 = merged[(i + 1) % m]
            span = (s1_ - s0) % 1.0
            if span < 1e-9:
                continue
            if span < 1e-3 and p0.close_to(p1, 1e-6):
                continue
            mid = comp.point_at((s0 + span / 2) % 1.0)
            if classify_keep(mid, on_circle=True):
                kept.append(RidgeArc("ideal", None, p0, p1, mid))

    if not kept:
        # disk covered by a union of interiors (no single sphere contains it)
        tp = chart.interior_sample()
        return RidgeRegion(pair, (), "disk covered by sphere interiors", 0)

    components, shared = _chain_arcs(chart, live, kept)
    return RidgeRegion(pair, tuple(components), None, shared)


def _chain_arcs(chart, live, kept):
    """Chain kept arcs into closed boundary cycles by endpoint matching."""
    loops = [RidgeComponent((a,)) for a in kept if a.start is None]
    arcs = [a for a in kept if a.start is not None]
    ends = {}
    for i, a in enumerate(arcs):
        for which, p in (("start", a.start), ("end", a.end)):
            ends.setdefault(_vertex_key(p), []).append((i, which))

    # vertex resolution: at degree 2 simply pair; at degree 4 pair the ends
    # bounding the same negative sector (pentagon-and-quadrangle vertices)
    link = {}
    shared_vertices = 0
    for vk, incid in ends.items():
        if len(incid) == 2:
            link[vk] = {incid[0]: incid[1], incid[1]: incid[0]}
        elif len(incid) == 4:
            shared_vertices += 1
            link[vk] = _pair_by_sectors(chart, live, arcs, vk, incid)
        else:
            raise TangencyFlag(f"vertex of degree {len(incid)} in arc chain")

    seen = set()
    comps = []
    for i, a in enumerate(arcs):
        if i in seen:
            continue
        cyc = []
        cur, port = i, "start"
        while True:
            seen.add(cur)
            cyc.append(arcs[cur])
            out_port = "end" if port == "start" else "start"
            p = arcs[cur].end if out_port == "end" else arcs[cur].start
            nxt, nport = link[_vertex_key(p)][(cur, out_port)]
            cur, port = nxt, nport
            if cur == i and port == "start":
                break
            if len(cyc) > 4 * len(arcs):
                raise TangencyFlag("arc chaining failed to close")
        comps.append(RidgeComponent(tuple(cyc)))
    return comps + loops, shared_vertices


def _pair_by_sectors(chart, live, arcs, vk, incid):
    """Pair 4 arc-ends at a degree-4 vertex via negative-sector tests."""
    a0 = arcs[incid[0][0]]
    v = a0.start if incid[0][1] == "start" else a0.end
    dirs = []
    for idx, which in incid:
        arc = arcs[idx]
        p_end = arc.start if which == "start" else arc.end
        # direction from the vertex towards the arc interior
        mid = arc.mid
        dt1 = math.atan2(math.sin(mid.t1 - p_end.t1), math.cos(mid.t1 - p_end.t1))
        dt2 = math.atan2(math.sin(mid.t2 - p_end.t2), math.cos(mid.t2 - p_end.t2))
        n = math.hypot(dt1, dt2)
        # refine with a point close to the end for better tangents
        dirs.append(((idx, which), math.atan2(dt2, dt1), (dt1 / n, dt2 / n)))
    dirs.sort(key=lambda d: d[1])

    def sector_ok(ang):
        p = TorusPoint(v.t1 + SECTOR_EPS * math.cos(ang), v.t2 + SECTOR_EPS * math.sin(ang))
        if chart.norm_at(p) > -1e-12:
            return False
        return all(d["curve"].eval(p.z1, p.z2) < 1e-12 for d in live.values())

    pairing = {}
    m = len(dirs)
    used = set()
    for i in range(m):
        j = (i + 1) % m
        a1, a2 = dirs[i][1], dirs[j][1]
        gap = (a2 - a1) % (2 * math.pi)
        mid_ang = a1 + gap / 2
        if sector_ok(mid_ang):
            e1, e2 = dirs[i][0], dirs[j][0]
            if e1 in used or e2 in used:
                raise TangencyFlag("inconsistent sector pairing at shared vertex")
            pairing[e1] = e2
            pairing[e2] = e1
            used.add(e1)
            used.add(e2)
    if len(pairing) != 4:
        raise TangencyFlag(f"sector pairing resolved {len(pairing)}/4 ends")
    return pairing


# -- side reports --------------------------------------------------------------

SHAPE_NAMES = {3: "triangle", 4: "quadrangle", 5: "pentagon", 6: "hexagon",
               12: "dodecagon", 14: "tetradecagon", 20: "icosagon"}


def shape_name(n):
    return SHAPE_NAMES.get(n, f"{n}-gon")


def describe_region(region: RidgeRegion) -> str:
    if not region.nonempty:
        return "empty"
    parts = []
    for comp in region.components:
        s = shape_name(comp.n_arcs)
        if comp.n_ideal:
            s += f" with {comp.n_ideal} side at infinity"
        parts.append(s)
    out = " + ".join(parts)
    if region.shared_vertices:
        out += f" (sharing {region.shared_vertices} vertex)"
    return out


def side_report(domain: PartialDomain, word: str, k: int = 0):
    """Classify every ridge on the side I(word)^k.

    Returns dict with 'ridges': {other_label: RidgeRegion}, 'empty': [...],
    'infinite': count of ridges with an ideal arc.
    """
    rep, j = domain.alias.get(word, (word, 0))
    label = (rep, j + k)
    ridges = {}
    empty = []
    for other in domain.neighbours(label):
        if not domain.intersects(label, other):
            continue
        region = compute_ridge(domain, label, other)
        rel = translate_label(other, -label[1])  # express neighbour relative to k=0
        if region.nonempty:
            ridges[other] = region
        else:
            empty.append(other)
    infinite = sum(1 for r in ridges.values() if r.has_ideal)
    return {"label": label, "ridges": ridges, "empty": sorted(empty, key=domain.rank),
            "infinite": infinite}


# -- ridge cycles ---------------------------------------------------------------

@dataclass
class RidgeCycle:
    ridges: list              # canonical pair labels, in walk order
    maps: list                # word of each applied map (pairings and A-powers)
    cycle_word: str           # full relation word, matrix order (leftmost last)
    relation: str             # canonical primitive-power form, e.g. "(Ab)^4"
    bounded: bool
    deviation: float          # projective deviation of the word from identity

    @property
    def is_identity_relation(self):
        return self.relation == "id"


def _free_cyclic_reduce(word: str) -> str:
    w = list(word)
    changed = True
    while changed and w:
        changed = False
        i = 0
        while i < len(w) - 1:
            if INV_LETTER[w[i]] == w[i + 1]:
                del w[i:i + 2]
                changed = True
            else:
                i += 1
        if len(w) >= 2 and INV_LETTER[w[-1]] == w[0]:
            del w[-1]
            del w[0]
            changed = True
    return "".join(w)


def _b_cyclic_reduce(word: str) -> str:
    """Cyclic reduction with free cancellation plus BB->b, bb->B."""
    w = _free_cyclic_reduce(word)
    changed = True
    while changed and w:
        changed = False
        for pat, rep in (("BB", "b"), ("bb", "B")):
            if pat in w:
                w = _free_cyclic_reduce(w.replace(pat, rep, 1))
                changed = True
                break
            if len(w) >= 2 and w[-1] == pat[0] and w[0] == pat[1]:
                w = _free_cyclic_reduce(rep + w[1:-1])
                changed = True
                break
    return w


def _primitive_power(word: str):
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word == word[p:] + word[:p]:
            return word[:p], n // p
    return word, 1


def canonical_relation(word: str) -> str:
    base = _b_cyclic_reduce(word)
    if not base:
        base = _free_cyclic_reduce(word)
        if not base:
            return "id"
    cands = []
    for w in (base, invert_word(base)):
        cands.extend(w[i:] + w[:i] for i in range(len(w)))
    canon = min(cands)
    u, m = _primitive_power(canon)
    if m == 1:
        return u
    return f"({u})^{m}" if len(u) > 1 else f"{u}^{m}"


def ridge_cycles(domain: PartialDomain, max_steps: int = 64):
    """Poincare ridge cycles of all nonempty ridges, modulo A-translation."""
    # enumerate ridge classes from the family representatives
    classes = {}
    for w in domain.families:
        label = (w, 0)
        for other in domain.neighbours(label):
            if not domain.intersects(label, other):
                continue
            pair, _ = domain.canonical_pair(label, other)
            if pair in classes:
                continue
            region = compute_ridge(domain, *pair)
            if region.nonempty:
                classes[pair] = region

    p0 = Q_INF
    cycles = []
    covered = set()
    for start_pair in sorted(classes, key=lambda p: (domain.rank(p[0]), domain.rank(p[1]))):
        if start_pair in covered:
            continue
        state_pair, apply_idx = start_pair, 0
        units = []
        ridges = [start_pair]
        maps = []
        total = mat_identity(exact=domain.bundle.exact)
        for _ in range(max_steps):
            applied = domain.element(state_pair[apply_idx])
            other = state_pair[1 - apply_idx]
            m = applied.matrix
            total = mat_mul(m, total)
            units.append(applied.word)
            maps.append(applied.word)
            arrive_center = from_lift(mat_vec(m, p0))
            other_center = from_lift(mat_vec(m, domain.sphere(other).lift))
            lab_arrive = domain.lookup_center(HeisPoint(arrive_center.z, arrive_center.t))
            lab_other = domain.lookup_center(HeisPoint(other_center.z, other_center.t))
            new_pair, j = domain.canonical_pair(lab_arrive, lab_other)
            if j != 0:
                word_j = ("A" * j) if j > 0 else ("a" * (-j))
                aj = eval_word(domain.bundle, word_j)
                total = mat_mul(aj.matrix, total)
                units.append(word_j)
            arrived = translate_label(lab_arrive, j)
            next_apply = 1 - new_pair.index(arrived)
            if new_pair not in classes:
                raise OpenCycle(f"walk left the ridge set at {new_pair}")
            if (new_pair, next_apply) == (start_pair, 0):
                break
            state_pair, apply_idx = new_pair, next_apply
            ridges.append(new_pair)
        else:
            raise OpenCycle(f"cycle from {start_pair} did not close in {max_steps} steps")

        word = "".join(reversed(units))
        dev = projective_deviation(total, mat_identity(exact=domain.bundle.exact))
        if dev > 1e-9:
            # cycle transformation is a nontrivial rotation: raise to its order
            power, acc = None, total
            base_word = word
            for mpow in range(2, 13):
                acc = mat_mul(acc, total)
                word = word + base_word
                dev2 = projective_deviation(acc, mat_identity(exact=domain.bundle.exact))
                if dev2 <= 1e-9:
                    power, dev = mpow, dev2
                    break
            if power is None:
                raise OpenCycle(f"cycle transformation at {start_pair} has no small order")
        region = classes[ridges[0]]
        cycles.append(RidgeCycle(ridges=ridges, maps=maps, cycle_word=word,
                                 relation=canonical_relation(word),
                                 bounded=not region.has_ideal, deviation=dev))
        covered.update(ridges)
    return cycles


# -- global checks ----------------------------------------------------------------

def check_no_boundary_parabolics(domain: PartialDomain, cycles=None):
    """Classify cycle relation elements; flag any boundary fixed points.

    Elliptic cycle elements (and their proper powers) must have no null
    eigenvector; ideal vertices must have trivial stabilizer among the
    domain words and short products.
    """
    if cycles is None:
        cycles = ridge_cycles(domain)
    entries = []
    clean = True
    for cyc in cycles:
        if cyc.relation == "id":
            continue
        base = cyc.relation.split(")^")[0].strip("(") if ")^" in cyc.relation \
            else cyc.relation.split("^")[0]
        order = int(cyc.relation.rsplit("^", 1)[1]) if "^" in cyc.relation else 1
        g = eval_word(domain.bundle, base)
        cls = classify_isometry(g.matrix)
        null_fix = _has_null_eigenvector(g.matrix)
        ok = cls.kind == "elliptic" and not null_fix
        entries.append({"element": base, "order": order, "class": str(cls),
                        "boundary_fixed_point": null_fix, "ok": ok})
        clean &= ok
        for j in range(2, order):
            m = mat_identity(exact=domain.bundle.exact)
            for _ in range(j):
                m = mat_mul(m, g.matrix)
            if projective_deviation(m, mat_identity(exact=domain.bundle.exact)) < 1e-9:
                continue
            cls_j = classify_isometry(m)
            nf = _has_null_eigenvector(m)
            entries.append({"element": f"{base}^{j}", "order": order,
                            "class": str(cls_j), "boundary_fixed_point": nf,
                            "ok": not nf})
            clean &= not nf
    # A itself: unipotent parabolic fixing only q_inf
    cls_a = classify_isometry(domain.bundle.A.matrix)
    entries.append({"element": "A", "order": 0, "class": str(cls_a),
                    "boundary_fixed_point": False,
                    "ok": cls_a.kind == "parabolic" and cls_a.unipotent})
    clean &= entries[-1]["ok"]
    # ideal vertices: trivial stabilizer among tested words
    vertices = ideal_vertices(domain)
    words = list(domain.words) + [w1 + w2 for w1 in ("B", "b") for w2 in ("AB", "Ab", "aB", "ab")]
    stab_viol = []
    for v in vertices:
        for w in words:
            g = eval_word(domain.bundle, w)
            img = from_lift(mat_vec(g.matrix, to_lift(v)))
            if abs(complex(img.z) - complex(v.z)) < 1e-8 and abs(float(img.t) - float(v.t)) < 1e-8:
                stab_viol.append((w, v))
    clean &= not stab_viol
    return {"entries": entries, "vertex_stabilizer_violations": stab_viol,
            "ideal_vertex_count": len(vertices), "clean": clean}


def _has_null_eigenvector(m, tol=1e-8) -> bool:
    a = np.array(mat_to_complex(m))
    _, vecs = np.linalg.eig(a)
    for i in range(3):
        v = vecs[:, i]
        h = complex(hermitian_form(tuple(v), tuple(v)))
        if abs(h.real) < tol and abs(h.imag) < tol:
            return True
    return False


def ideal_vertices(domain: PartialDomain):
    """All ideal vertices (arc endpoints on the ideal circle) of the k=0 sides."""
    pts = []
    seen = set()
    for w in domain.families:
        rep = side_report(domain, w)
        for other, region in rep["ridges"].items():
            pair, j = domain.canonical_pair(rep["label"], other)
            chart = chart_for_spheres(domain.sphere(pair[0]), domain.sphere(pair[1]))
            for arc in region.shifted(j).ideal_arcs():
                for p in (arc.start, arc.end):
                    if p is None:
                        continue
                    h = chart.boundary_heis(p)
                    h = a_action(h, -j)
                    key = (round(complex(h.z).real, 6), round(complex(h.z).imag, 6),
                           round(float(h.t), 6))
                    if key not in seen:
                        seen.add(key)
                        pts.append(h)
    return pts


def x_axis_check(domain: PartialDomain, samples: int = 1000):
    """Prop 4.8: the x-axis segment is buried inside S_Aba and S_B (n=4)."""
    if domain.bundle.n != 4:
        raise ValueError("x-axis check is specific to n=4")
    s_aba = domain.sphere_of_word("b", k=1)     # I(Aba) = A I(b) A^-1
    s_b = domain.sphere_of_word("B", k=0)
    margin1 = min(s_aba.radius - cygan_distance(s_aba.center, HeisPoint(complex(x), 0.0))
                  for x in np.linspace(-1, 0, samples))
    margin2 = min(s_b.radius - cygan_distance(s_b.center, HeisPoint(complex(x), 0.0))
                  for x in np.linspace(0, 1, samples))
    return {"ok": margin1 > 0 and margin2 > 0,
            "margin_Aba": float(margin1), "margin_B": float(margin2)}
