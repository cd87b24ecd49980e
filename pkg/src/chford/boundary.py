"""Ideal boundary complex, its quotient under A and side-pairings, 2-spine.

The boundary surface C of the ideal boundary of the partial Ford domain is
tiled by the visible pieces of the spinal spheres.  Its edges are the ideal
arcs of the infinite ridges, its vertices the triple points at infinity.
Everything is computed modulo the A-translation: faces are pieces of the
k = 0 representative spheres, edges are ridge classes.

The quotient by the side-pairing maps glues the faces in pairs, yielding a
2-spine of the manifold at infinity whose fundamental group is read off a
spanning tree of the quotient graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bisectors import chart_for_spheres
from .domain import PartialDomain, compute_ridge, translate_label
from .geometry import HeisPoint, a_action, from_lift, to_lift
from .qi import mat_vec
from .triangle import eval_word, invert_word

POS_TOL = 1e-6


class NonSurface(RuntimeError):
    pass


class InconsistentOrientation(RuntimeError):
    pass


def _pos_key(p: HeisPoint):
    z, t = p.as_floats()
    return (round(z.real, 6), round(z.imag, 6), round(t, 6))


SEAM_OFFSET = 0.0131          # keeps the strip seam clear of all vertices


def _normalize_mod_a(p: HeisPoint):
    """Translate a boundary point into the strip Re z in [s-2, s) with
    s = 1 + SEAM_OFFSET; returns (representative point, applied power of A)."""
    z, t = p.as_floats()
    j = math.floor((z.real - (SEAM_OFFSET - 1.0)) / 2.0)
    return a_action(HeisPoint(z, t), j), j


@dataclass(frozen=True)
class EdgeInstance:
    """One ideal arc in the frame of a face: an edge class plus a shift."""
    cls: tuple                 # (pair_class, index)
    shift: int
    tail: HeisPoint
    head: HeisPoint
    neighbor: tuple            # other sphere's label in the face frame


@dataclass
class FacePiece:
    word: str
    index: int
    arcs: list                 # EdgeInstance in cyclic order
    flips: list                # True where traversal runs head->tail

    @property
    def degree(self):
        return len(self.arcs)

    def neighbor_cycle(self):
        return tuple(a.neighbor for a in self.arcs)

    def boundary_letters(self):
        """[(edge_class, +1/-1)] along the traversal."""
        return [(a.cls, -1 if f else 1) for a, f in zip(self.arcs, self.flips)]


class BoundaryComplex:
    """Faces, edges and vertices of C modulo the A-translation."""

    def __init__(self, domain: PartialDomain):
        self.domain = domain
        self._build_edges()
        self._build_faces()
        self._check_surface()

    # -- edges ---------------------------------------------------------------

    def _ridge_classes(self):
        classes = {}
        for w in self.domain.families:
            label = (w, 0)
            for other in self.domain.neighbours(label):
                if not self.domain.intersects(label, other):
                    continue
                pair, _ = self.domain.canonical_pair(label, other)
                if pair in classes:
                    continue
                classes[pair] = compute_ridge(self.domain, *pair)
        return classes

    def _build_edges(self):
        self.edges = {}            # (pair, idx) -> dict with rep geometry
        self.regions = self._ridge_classes()
        for pair, region in self.regions.items():
            if not region.nonempty or not region.has_ideal:
                continue
            chart = chart_for_spheres(self.domain.sphere(pair[0]),
                                      self.domain.sphere(pair[1]))
            arcs = region.ideal_arcs()
            arcs = sorted(arcs, key=lambda a: (round(a.mid.t1, 9), round(a.mid.t2, 9)))
            for idx, arc in enumerate(arcs):
                if arc.start is None:
                    raise NonSurface(f"closed ideal loop on ridge {pair}")
                p0 = chart.boundary_heis(arc.start)
                p1 = chart.boundary_heis(arc.end)
                tail, head = sorted((p0, p1), key=_pos_key)
                self.edges[(pair, idx)] = {
                    "pair": pair, "tail": tail, "head": head,
                    "mid": chart.boundary_heis(arc.mid)}

    def edge_instances_for_face(self, word):
        """All ideal arcs incident to the sphere (word, 0), in face frame."""
        label = (word, 0)
        out = []
        for other in self.domain.neighbours(label):
            if not self.domain.intersects(label, other):
                continue
            pair, j = self.domain.canonical_pair(label, other)
            for (p, idx), data in self.edges.items():
                if p != pair:
                    continue
                # the canonical edge lives at shift +j relative to this face
                tail = a_action(data["tail"], -j)
                head = a_action(data["head"], -j)
                out.append(EdgeInstance(cls=(pair, idx), shift=-j,
                                        tail=tail, head=head,
                                        neighbor=other))
        return out

    # -- faces -----------------------------------------------------------------

    def _build_faces(self):
        self.faces = []
        self.face_of_arc = {}      # (cls, shift normalized?) handled via counts
        self._edge_incidence = {cls: 0 for cls in self.edges}
        for w in self.domain.families:
            instances = self.edge_instances_for_face(w)
            pieces = self._chain_face(w, instances)
            for piece in pieces:
                self.faces.append(piece)
                for inst in piece.arcs:
                    self._edge_incidence[inst.cls] += 1

    def _chain_face(self, word, instances):
        ends = {}
        for i, inst in enumerate(instances):
            for which, p in (("tail", inst.tail), ("head", inst.head)):
                ends.setdefault(_pos_key(p), []).append((i, which))
        for key, incid in ends.items():
            if len(incid) != 2:
                raise NonSurface(
                    f"face {word}: vertex {key} has {len(incid)} incident arcs")
        used = set()
        pieces = []
        for i in range(len(instances)):
            if i in used:
                continue
            cyc, flips = [], []
            cur, enter = i, "tail"
            while True:
                used.add(cur)
                inst = instances[cur]
                cyc.append(inst)
                flips.append(enter == "head")
                out_p = inst.head if enter == "tail" else inst.tail
                a, b = ends[_pos_key(out_p)]
                nxt, which = a if a[0] != cur else b
                cur, enter = nxt, which
                if cur == i and enter == "tail":
                    break
                if len(cyc) > 4 * len(instances):
                    raise NonSurface(f"face {word}: chaining does not close")
            pieces.append(FacePiece(word=word, index=len(pieces), arcs=cyc, flips=flips))
        return pieces

    def _check_surface(self):
        bad = {cls: n for cls, n in self._edge_incidence.items() if n != 2}
        if bad:
            raise NonSurface(f"edges with face incidence != 2: {bad}")

    # -- global counts -----------------------------------------------------------

    def counts(self):
        verts = set()
        for data in self.edges.values():
            for p in (data["tail"], data["head"]):
                verts.add(_pos_key(_normalize_mod_a(p)[0]))
        return {"faces": len(self.faces), "edges": len(self.edges),
                "vertices": len(verts)}

    def face_inventory(self):
        out = {}
        for f in self.faces:
            out.setdefault(f.word, []).append(f.degree)
        return {w: sorted(v) for w, v in out.items()}


# -- quotient by side-pairings ---------------------------------------------------

class _SignedUnionFind:
    def __init__(self):
        self.parent = {}
        self.sign = {}

    def find(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.sign[x] = 1
            return x, 1
        if self.parent[x] == x:
            return x, 1
        root, s = self.find(self.parent[x])
        self.parent[x] = root
        self.sign[x] *= s
        return root, self.sign[x]

    def union(self, x, y, rel_sign):
        """Declare sign(x) = rel_sign * sign(y); returns False on conflict."""
        rx, sx = self.find(x)
        ry, sy = self.find(y)
        if rx == ry:
            return sx == rel_sign * sy
        self.parent[rx] = ry
        self.sign[rx] = rel_sign * sy * sx  # so that sx_new = rel*sy
        # recompute: we want total sign of x to equal rel*sy
        self.sign[rx] = (rel_sign * sy) * sx
        return True


class QuotientComplex:
    """Edge and vertex classes of C under the A-action and side-pairings."""

    def __init__(self, bc: BoundaryComplex):
        self.bc = bc
        self.domain = bc.domain
        self._build_identifications()

    def _arc_lookup(self):
        """Position index: sorted endpoint keys -> (edge class, shift)."""
        look = {}
        for cls, data in self.bc.edges.items():
            for shift in range(self.domain.k_range[0] + 2, self.domain.k_range[1] - 1):
                t = a_action(data["tail"], shift)
                h = a_action(data["head"], shift)
                key = tuple(sorted((_pos_key(t), _pos_key(h))))
                look[key] = (cls, shift)
        return look

    def _build_identifications(self):
        dom = self.domain
        uf = _SignedUnionFind()
        vf = _SignedUnionFind()
        look = self._arc_lookup()

        def vkey(p):
            return _pos_key(_normalize_mod_a(p)[0])

        for cls, data in self.bc.edges.items():
            uf.find(cls)
            vf.find(vkey(data["tail"]))
            vf.find(vkey(data["head"]))

        self.pairings = []
        for w in dom.families:
            m = eval_word(dom.bundle, w).matrix
            for cls, data in self.bc.edges.items():
                pair = cls[0]
                if pair[0][0] != w and pair[1][0] != w:
                    continue
                # the edge touches the family sphere at shift: pick the side
                for side in (0, 1):
                    lab = pair[side]
                    if lab[0] != w:
                        continue
                    # move the arc into the frame where this sphere is (w, 0),
                    # apply the side pairing, and look the image up
                    j = -lab[1]
                    t = a_action(data["tail"], j)
                    h = a_action(data["head"], j)
                    ti = from_lift(mat_vec(m, to_lift(t)))
                    hi = from_lift(mat_vec(m, to_lift(h)))
                    ti = HeisPoint(ti.z, ti.t)
                    hi = HeisPoint(hi.z, hi.t)
                    key = tuple(sorted((_pos_key(ti), _pos_key(hi))))
                    if key not in look:
                        raise NonSurface(f"pairing image of {cls} not found")
                    icls, ishift = look[key]
                    idata = self.bc.edges[icls]
                    itail = a_action(idata["tail"], ishift)
                    if _pos_key(itail) == _pos_key(ti):
                        rel = 1
                    elif _pos_key(itail) == _pos_key(hi):
                        rel = -1
                    else:
                        raise NonSurface("endpoint mismatch in pairing image")
                    if not uf.union(cls, icls, rel):
                        raise InconsistentOrientation(f"edge class orientation at {cls}")
                    if not vf.union(vkey(t), vkey(ti), 1) or not vf.union(vkey(h), vkey(hi), 1):
                        raise InconsistentOrientation("vertex identification conflict")

        # canonical class labels in deterministic order
        roots = {}
        for cls in self.bc.edges:
            r, s = uf.find(cls)
            roots.setdefault(r, []).append((cls, s))
        self.edge_classes = []
        for r in sorted(roots, key=lambda c: (str(c))):
            members = sorted(roots[r], key=lambda cs: str(cs[0]))
            self.edge_classes.append(members)
        self.edge_class_of = {}
        for i, members in enumerate(self.edge_classes):
            for cls, s in members:
                self.edge_class_of[cls] = (i, s)

        vroots = {}
        self._vf = vf
        for cls, data in self.bc.edges.items():
            for p in (data["tail"], data["head"]):
                k = vkey(p)
                r, _ = vf.find(k)
                vroots.setdefault(r, set()).add(k)
        self.vertex_classes = []
        for r in sorted(vroots, key=str):
            self.vertex_classes.append(sorted(vroots[r]))
        self.vertex_class_of = {}
        for i, mem in enumerate(self.vertex_classes):
            for k in mem:
                self.vertex_class_of[k] = i

    def vertex_class(self, p: HeisPoint):
        k = _pos_key(_normalize_mod_a(p)[0])
        r, _ = self._vf.find(k)
        return self.vertex_class_of[next(iter(
            [m for mem in self.vertex_classes for m in mem if m == k]))] \
            if k in self.vertex_class_of else None

    # -- quotient graph ------------------------------------------------------

    def graph(self):
        """Oriented quotient graph: per edge class (tail_class, head_class)."""
        out = []
        for i, members in enumerate(self.edge_classes):
            # orientation of class i is carried by the member with sign +1
            cls, s = members[0]
            data = self.bc.edges[cls]
            t, h = data["tail"], data["head"]
            if s < 0:
                t, h = h, t
            tc = self.vertex_class_of[_pos_key(_normalize_mod_a(t)[0])]
            hc = self.vertex_class_of[_pos_key(_normalize_mod_a(h)[0])]
            out.append((tc, hc))
        return out

    def class_sizes(self):
        return [len(m) for m in self.edge_classes]


# -- spine ------------------------------------------------------------------------

@dataclass
class SpineDisk:
    faces: tuple               # (FacePiece, FacePiece)
    word: list                 # [(edge_class_index, sign)] boundary word


@dataclass
class SpineComplex:
    qc: QuotientComplex
    graph: list                # (tail_class, head_class) per edge class
    disks: list                # SpineDisk
    n_vertices: int

    @property
    def n_edges(self):
        return len(self.graph)

    @property
    def rank(self):
        return self.n_edges - self.n_vertices + 1

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + len(self.disks)


def _face_boundary_word(qc: QuotientComplex, piece: FacePiece):
    word = []
    for inst, flip in zip(piece.arcs, piece.flips):
        ci, s = qc.edge_class_of[inst.cls]
        sign = s * (-1 if flip else 1)
        word.append((ci, sign))
    return word


def build_spine(qc: QuotientComplex) -> SpineComplex:
    bc = qc.bc
    dom = qc.domain
    # pair faces by side-pairing images of a sample boundary point
    by_key = {}
    for f in bc.faces:
        inst = f.arcs[0]
        key = tuple(sorted((_pos_key(inst.tail), _pos_key(inst.head))))
        by_key.setdefault(f.word, []).append(f)

    look = {}
    for f in bc.faces:
        for inst in f.arcs:
            key = tuple(sorted((_pos_key(_normalize_mod_a(inst.tail)[0]),
                                _pos_key(_normalize_mod_a(inst.head)[0]))))
            # note: normalization can differ per endpoint; use raw arc lookup
        look[id(f)] = f

    arcs_of_face = {}
    for f in bc.faces:
        arcs_of_face[id(f)] = {tuple(sorted((_pos_key(i.tail), _pos_key(i.head))))
                               for i in f.arcs}

    disks = []
    used = set()
    for f in bc.faces:
        if id(f) in used:
            continue
        w = f.word
        m = eval_word(dom.bundle, w).matrix
        image_keys = set()
        for inst in f.arcs:
            ti = from_lift(mat_vec(m, to_lift(inst.tail)))
            hi = from_lift(mat_vec(m, to_lift(inst.head)))
            image_keys.add(tuple(sorted((_pos_key(HeisPoint(ti.z, ti.t)),
                                         _pos_key(HeisPoint(hi.z, hi.t))))))
        partner = None
        for g in bc.faces:
            if id(g) in used or g is f:
                continue
            for shift in range(dom.k_range[0] + 2, dom.k_range[1] - 1):
                gkeys = {tuple(sorted((_pos_key(a_action(i.tail, shift)),
                                       _pos_key(a_action(i.head, shift)))))
                         for i in g.arcs}
                if gkeys == image_keys:
                    partner = g
                    break
            if partner is not None:
                break
        if partner is None:
            raise NonSurface(f"face ({f.word}, {f.index}) has no pairing partner")
        used.add(id(f))
        used.add(id(partner))
        disks.append(SpineDisk(faces=(f, partner),
                               word=_face_boundary_word(qc, f)))
    graph = qc.graph()
    return SpineComplex(qc=qc, graph=graph, disks=disks,
                        n_vertices=len(qc.vertex_classes))


# -- presentations ------------------------------------------------------------------

@dataclass(frozen=True)
class Presentation:
    ngens: int
    relators: tuple            # tuples of signed generator indices (1-based)

    def relator_lengths(self):
        return sorted(len(r) for r in self.relators)


def _spanning_tree(graph, n_vertices):
    """Deterministic BFS tree (lowest edge index first) from vertex 0."""
    adj = {}
    for i, (t, h) in enumerate(graph):
        adj.setdefault(t, []).append((i, h))
        adj.setdefault(h, []).append((i, t))
    for v in adj:
        adj[v].sort()
    tree = set()
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for v in frontier:
            for i, u in adj.get(v, []):
                if u not in seen:
                    seen.add(u)
                    tree.add(i)
                    nxt.append(u)
        frontier = nxt
    if len(seen) != n_vertices:
        raise ValueError("quotient graph is not connected")
    return tree


def presentation_from_spine(sc: SpineComplex, tree=None) -> Presentation:
    """Generators: non-tree edge classes; relators: disk boundary words."""
    graph = sc.graph
    if tree is None:
        tree = _spanning_tree(graph, sc.n_vertices)
    non_tree = [i for i in range(len(graph)) if i not in tree]
    gen_index = {e: g + 1 for g, e in enumerate(non_tree)}
    relators = []
    for disk in sc.disks:
        rel = []
        for (ci, sign) in disk.word:
            if ci in gen_index:
                rel.append(sign * gen_index[ci])
        relators.append(tuple(rel))
    return Presentation(ngens=len(non_tree), relators=tuple(relators))
