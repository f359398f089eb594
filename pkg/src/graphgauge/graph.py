"""Labeled graphs of graph-manifolds.

A labeled graph carries a rational charge k_v on every vertex and a positive
integer index b_w on every oriented edge.  Oriented edges come in pairs
(w, -w) exchanged by a fixed-point free involution; the flags at a vertex v
are the oriented edges starting at v.  Loops are allowed and contribute two
flags to their vertex.

Edges read from JSON are named "e"; the reversed orientation is named "-e".
Within every pair the first orientation in ``LabeledGraph.oriented`` is the
canonical one and occupies slot 0 of all per-pair arrays used downstream.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from .errors import InvalidGluing, ValidationError


def reverse_id(eid: str) -> str:
    """Name of the opposite orientation of an edge id."""
    return eid[1:] if eid.startswith("-") else "-" + eid


def as_fraction(value) -> Fraction:
    """Parse an int, Fraction or "p/q" string into an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # floats are accepted only when they are exactly representable rationals
        return Fraction(value)
    return Fraction(str(value).strip())


@dataclass(frozen=True)
class GluingMatrix:
    """Integer matrix [[a, b], [c, d]] of a torus gluing, det = -1, b != 0."""

    a: int
    b: int
    c: int
    d: int

    @classmethod
    def from_rows(cls, rows) -> "GluingMatrix":
        (a, b), (c, d) = rows
        return cls(int(a), int(b), int(c), int(d))

    def rows(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def check(self, where: str = "") -> None:
        suffix = f" at flag {where}" if where else ""
        if self.det != -1:
            raise InvalidGluing(f"gluing matrix {self.rows()} has determinant {self.det}, expected -1{suffix}")
        if self.b == 0:
            raise InvalidGluing(f"gluing matrix {self.rows()} has zero b-entry{suffix}")

    def inverse(self) -> "GluingMatrix":
        # for det = -1 the inverse is [[-d, b], [c, -a]]
        return GluingMatrix(-self.d, self.b, self.c, -self.a)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Vertices with rational charges and oriented edges with indices.

    ``origin`` and ``target`` are the boundary maps, ``reverse`` the involution
    w -> -w.  ``gluing`` optionally stores a gluing matrix per oriented edge.
    The constructor does not validate; use ``validate_graph``.
    """

    vertices: tuple[str, ...]
    charge: Mapping[str, Fraction]
    oriented: tuple[str, ...]
    origin: Mapping[str, str]
    target: Mapping[str, str]
    reverse: Mapping[str, str]
    index: Mapping[str, int]
    gluing: Mapping[str, GluingMatrix] = field(default_factory=dict)

    @classmethod
    def from_edges(cls, vertices, edges) -> "LabeledGraph":
        """Build from ``[(vid, charge), ...]`` and ``[(eid, from, to, b[, gluing]), ...]``.

        Each edge tuple yields the pair ("eid", "-eid").  The gluing matrix, if
        present, belongs to "eid"; "-eid" receives its inverse.
        """
        vids, charge = [], {}
        for vid, k in vertices:
            vids.append(str(vid))
            charge[str(vid)] = as_fraction(k)
        oriented, origin, target, reverse, index, gluing = [], {}, {}, {}, {}, {}
        for item in edges:
            eid, tail, head, b = (str(item[0]), str(item[1]), str(item[2]), int(item[3]))
            if eid.startswith("-"):
                raise ValidationError(f"edge id {eid!r} must not start with '-'")
            if eid in origin:
                raise ValidationError(f"duplicate edge id {eid!r}")
            rid = reverse_id(eid)
            oriented += [eid, rid]
            origin[eid], target[eid] = tail, head
            origin[rid], target[rid] = head, tail
            reverse[eid], reverse[rid] = rid, eid
            index[eid] = index[rid] = b
            g = item[4] if len(item) > 4 else None
            if g is not None:
                m = g if isinstance(g, GluingMatrix) else GluingMatrix.from_rows(g)
                gluing[eid] = m
                gluing[rid] = m.inverse()
        return cls(tuple(vids), charge, tuple(oriented), origin, target, reverse, index, gluing)

    # ---- derived structure -------------------------------------------------

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def pairs(self) -> tuple[tuple[str, str], ...]:
        """Edge pairs (w, -w), canonical orientation first, in order of appearance."""
        seen, out = set(), []
        for w in self.oriented:
            if w in seen:
                continue
            mw = self.reverse[w]
            seen.update((w, mw))
            out.append((w, mw))
        return tuple(out)

    @cached_property
    def slot(self) -> dict[str, tuple[int, int]]:
        """Oriented edge -> (pair index, 0 for canonical / 1 for reversed)."""
        out = {}
        for p, (w, mw) in enumerate(self.pairs):
            out[w] = (p, 0)
            out[mw] = (p, 1)
        return out

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @cached_property
    def pair_ends(self) -> np.ndarray:
        """Integer array (P, 2): vertex index of the origin of slot 0 and slot 1."""
        vi = self.vertex_index
        return np.array([[vi[self.origin[w]], vi[self.origin[mw]]] for w, mw in self.pairs],
                        dtype=int).reshape(-1, 2)

    @cached_property
    def pair_index(self) -> np.ndarray:
        return np.array([self.index[w] for w, _ in self.pairs], dtype=float)

    def flags(self, v: str) -> list[str]:
        """Oriented edges w with origin v (a loop contributes both orientations)."""
        return [w for w in self.oriented if self.origin[w] == v]

    @cached_property
    def valence(self) -> np.ndarray:
        out = np.zeros(len(self.vertices), dtype=int)
        for w in self.oriented:
            out[self.vertex_index[self.origin[w]]] += 1
        return out

    def charge_vector(self) -> np.ndarray:
        return np.array([float(self.charge[v]) for v in self.vertices])

    def to_networkx(self) -> nx.MultiGraph:
        """Undirected multigraph, one edge per pair keyed by its canonical id."""
        G = nx.MultiGraph()
        G.add_nodes_from(self.vertices)
        for w, _ in self.pairs:
            G.add_edge(self.origin[w], self.target[w], key=w)
        return G

    def components(self) -> list[list[str]]:
        """Connected components, each sorted by vertex order, ordered by first vertex."""
        vi = self.vertex_index
        comps = [sorted(c, key=vi.__getitem__) for c in nx.connected_components(self.to_networkx())]
        return sorted(comps, key=lambda c: vi[c[0]])

    def without_pairs(self, drop: Iterable[str]) -> "LabeledGraph":
        """Subgraph on all vertices with the given pairs (any orientation) removed."""
        gone = set()
        for w in drop:
            gone.update((w, self.reverse[w]))
        keep = tuple(w for w in self.oriented if w not in gone)
        sub = lambda m: {w: m[w] for w in keep if w in m}
        return LabeledGraph(self.vertices, dict(self.charge), keep, sub(self.origin), sub(self.target),
                            sub(self.reverse), sub(self.index), sub(self.gluing))

    # ---- JSON ----------------------------------------------------------------

    @classmethod
    def from_json(cls, data: Mapping) -> "LabeledGraph":
        try:
            vertices = [(v["id"], v["charge"]) for v in data["vertices"]]
            edges = [(e["id"], e["from"], e["to"], e["b"], e.get("gluing")) for e in data["edges"]]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed graph JSON: missing or bad field {exc}") from exc
        except ValueError as exc:
            raise ValidationError(f"malformed graph JSON: {exc}") from exc
        try:
            return cls.from_edges(vertices, edges)
        except (ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed graph JSON: {exc}") from exc

    def to_json(self) -> dict:
        edges = []
        for w, _ in self.pairs:
            item = {"id": w, "from": self.origin[w], "to": self.target[w], "b": self.index[w]}
            if w in self.gluing:
                item["gluing"] = self.gluing[w].rows()
            edges.append(item)
        return {"vertices": [{"id": v, "charge": str(self.charge[v])} for v in self.vertices],
                "edges": edges}


def validate_graph(g: LabeledGraph) -> ValidationReport:
    """List every violated invariant of ``g``; an empty report means valid."""
    rep = ValidationReport()
    bad = rep.violations.append
    vset = set(g.vertices)
    if len(vset) != len(g.vertices):
        bad("vertex ids must be unique")
    for v in g.vertices:
        if v not in g.charge:
            bad(f"vertex {v}: missing charge")
    if len(set(g.oriented)) != len(g.oriented):
        bad("oriented edge ids must be unique")
    for w in g.oriented:
        mw = g.reverse.get(w)
        if mw is None or mw not in g.reverse:
            bad(f"edge {w}: involution undefined")
            continue
        if mw == w:
            bad(f"edge {w}: involution has a fixed point (-w = w)")
        if g.reverse[mw] != w:
            bad(f"edge {w}: reverse is not an involution")
        for name, m in (("origin", g.origin), ("target", g.target)):
            if m.get(w) not in vset:
                bad(f"edge {w}: {name} {m.get(w)!r} is not a vertex")
        if g.origin.get(mw) != g.target.get(w) or g.target.get(mw) != g.origin.get(w):
            bad(f"edge {w}: boundary maps must satisfy d-(-w) = d+(w) and d+(-w) = d-(w)")
        b = g.index.get(w)
        if b is None or b <= 0:
            bad(f"edge {w}: index must be positive (got {b})")
        if g.index.get(mw) != b:
            bad(f"edge {w}: b_{{-w}}=b_w violated ({g.index.get(mw)} != {b})")
        m = g.gluing.get(w)
        if m is not None:
            try:
                m.check(w)
            except InvalidGluing as exc:
                bad(str(exc))
            else:
                if abs(m.b) != b:
                    bad(f"edge {w}: |b-entry| of gluing matrix {abs(m.b)} differs from index {b}")
                mm = g.gluing.get(mw)
                if mm is not None and mm != m.inverse():
                    bad(f"edge {w}: gluing of -w must be the inverse of the gluing of w")
    return rep


def dipole_charges(m: GluingMatrix) -> tuple[Fraction, Fraction]:
    """Charges (k0, k1) = (d/b, -a/b) of the dipole with gluing ``m``."""
    m.check()
    return Fraction(m.d, m.b), Fraction(-m.a, m.b)


def charges_from_gluings(g: LabeledGraph) -> tuple[dict[str, Fraction], dict[str, int]]:
    """k_v = sum over flags w at v of d_w / b_w, and b_w = |b-entry of g_w|."""
    charges = {v: Fraction(0) for v in g.vertices}
    index = {}
    for w in g.oriented:
        m = g.gluing.get(w)
        if m is None:
            raise InvalidGluing(f"flag {w} carries no gluing matrix")
        m.check(w)
        charges[g.origin[w]] += Fraction(m.d, m.b)
        index[w] = abs(m.b)
    return charges, index


def toral_sum_charge(k_left, k_right) -> Fraction:
    """Charge of the vertex obtained by toral sum of two blocks."""
    return as_fraction(k_left) + as_fraction(k_right)


def cycle_basis(g: LabeledGraph) -> list[list[str]]:
    """Fundamental circuits with respect to a breadth-first spanning forest.

    Each circuit is a list of oriented edges traversed head to tail; it starts
    with the non-tree edge and closes through the tree.
    """
    parent: dict[str, str | None] = {}  # vertex -> flag leading to it from the root
    depth: dict[str, int] = {}
    tree_pairs = set()
    for root in g.vertices:
        if root in parent:
            continue
        parent[root], depth[root] = None, 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in g.flags(v):
                u = g.target[w]
                if u not in parent:
                    parent[u], depth[u] = w, depth[v] + 1
                    tree_pairs.add(g.slot[w][0])
                    queue.append(u)

    def path_up(v: str, stop_depth: int) -> list[str]:
        # flags from the ancestor at stop_depth down to v
        out = []
        while depth[v] > stop_depth:
            w = parent[v]
            out.append(w)
            v = g.origin[w]
        return out[::-1]

    circuits = []
    for p, (w, _) in enumerate(g.pairs):
        if p in tree_pairs:
            continue
        head, tail = g.target[w], g.origin[w]
        a, b = head, tail
        while a != b:  # lowest common ancestor
            if depth[a] >= depth[b]:
                a = g.origin[parent[a]]
            else:
                b = g.origin[parent[b]]
        down_to_head = path_up(head, depth[a])
        down_to_tail = path_up(tail, depth[a])
        back = [g.reverse[x] for x in reversed(down_to_head)]
        circuits.append([w] + back + down_to_tail)
    return circuits


# ---- small builders used by tests, examples and the CLI ------------------------

def dipole(k0, k1, b: int = 1, gluing=None) -> LabeledGraph:
    return LabeledGraph.from_edges([("v0", k0), ("v1", k1)], [("e", "v0", "v1", b, gluing)])


def monopole(k, b: int = 1) -> LabeledGraph:
    return LabeledGraph.from_edges([("v0", k)], [("e", "v0", "v0", b)])


def path_graph(charges, indices=None) -> LabeledGraph:
    n = len(charges)
    indices = indices or [1] * (n - 1)
    verts = [(f"v{i}", k) for i, k in enumerate(charges)]
    edges = [(f"e{i}", f"v{i}", f"v{i + 1}", indices[i]) for i in range(n - 1)]
    return LabeledGraph.from_edges(verts, edges)


def circle_graph(charges, indices=None) -> LabeledGraph:
    n = len(charges)
    indices = indices or [1] * n
    verts = [(f"v{i}", k) for i, k in enumerate(charges)]
    edges = [(f"e{i}", f"v{i}", f"v{(i + 1) % n}", indices[i]) for i in range(n)]
    return LabeledGraph.from_edges(verts, edges)
