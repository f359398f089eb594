"""Finite spectral triple of a labeled graph and its form calculus.

The algebra is the algebra of functions on flags, acting diagonally on the
Hilbert space of flag functions.  The unit length operator pairs the two
orientations of every edge, so all operators are block diagonal with one
2x2 block per edge pair.  Slot 0 of a block is the canonical orientation w,
slot 1 is -w, and

    ds = [[0, -i Ds(w)], [i Ds(w), 0]],     D = ds^{-1} = [[0, -i/Ds], [i/Ds, 0]].

Forms of degree k are stored as arrays of shape (P, 2, 2).  Odd forms are
off-diagonal, even forms diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import networkx as nx
import numpy as np

from .errors import ValidationError
from .graph import LabeledGraph


@dataclass
class DsFunction:
    """Odd nonvanishing function Ds on oriented edges."""

    values: dict[str, float]

    @classmethod
    def from_pairs(cls, g: LabeledGraph, per_edge: Mapping[str, float]) -> "DsFunction":
        """Fill in -w by oddness; keys may use either orientation."""
        vals = {}
        for w, v in per_edge.items():
            if w not in g.reverse:
                raise ValidationError(f"unknown edge {w!r} in Ds function")
            mw = g.reverse[w]
            if mw in vals and vals[mw] != -float(v):
                raise ValidationError(f"Ds must be odd: Ds({mw}) != -Ds({w})")
            vals[w], vals[mw] = float(v), -float(v)
        return cls(vals)

    def pair_values(self, g: LabeledGraph) -> np.ndarray:
        return np.array([self.values[w] for w, _ in g.pairs], dtype=float)

    @classmethod
    def from_json(cls, g: LabeledGraph, data: Mapping) -> "DsFunction":
        try:
            return cls.from_pairs(g, {str(k): float(v) for k, v in data["delta_s"].items()})
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed Ds JSON: {exc}") from exc

    def to_json(self, g: LabeledGraph) -> dict:
        return {"delta_s": {w: self.values[w] for w, _ in g.pairs}}


@dataclass(eq=False)
class SpectralTriple:
    graph: LabeledGraph
    ds: DsFunction
    delta: np.ndarray  # Ds of the canonical orientation, one per pair
    ds_blocks: np.ndarray
    dirac: np.ndarray

    @property
    def n_pairs(self) -> int:
        return self.delta.shape[0]


@dataclass(eq=False)
class Form:
    """Element of Omega^degree, one 2x2 complex block per edge pair."""

    degree: int
    blocks: np.ndarray

    def __post_init__(self):
        self.blocks = np.asarray(self.blocks, dtype=complex)

    def __add__(self, other: "Form") -> "Form":
        _same_degree(self, other)
        return Form(self.degree, self.blocks + other.blocks)

    def __sub__(self, other: "Form") -> "Form":
        _same_degree(self, other)
        return Form(self.degree, self.blocks - other.blocks)

    def __neg__(self) -> "Form":
        return Form(self.degree, -self.blocks)

    def scale(self, c) -> "Form":
        return Form(self.degree, c * self.blocks)

    def adjoint(self) -> "Form":
        return Form(self.degree, np.conj(np.swapaxes(self.blocks, -1, -2)))

    def norm(self) -> float:
        """Hilbert-Schmidt norm sqrt(<w, w>)."""
        return float(np.sqrt(np.sum(np.abs(self.blocks) ** 2)))

    def grading_defect(self) -> float:
        """Largest entry in the wrong place for the degree (0 for a graded form)."""
        b = self.blocks
        wrong = b[:, [0, 1], [0, 1]] if self.degree % 2 else b[:, [0, 1], [1, 0]]
        return float(np.max(np.abs(wrong), initial=0.0))


@dataclass(eq=False)
class AlgebraElement:
    """Function on flags; ``values[p, s]`` is the value on slot s of pair p."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)

    @classmethod
    def from_flags(cls, g: LabeledGraph, mapping: Mapping[str, complex]) -> "AlgebraElement":
        vals = np.zeros((g.n_pairs, 2), dtype=complex)
        for w, x in mapping.items():
            p, s = g.slot[w]
            vals[p, s] = x
        return cls(vals)

    @classmethod
    def from_vertex_function(cls, g: LabeledGraph, f) -> "AlgebraElement":
        """a(w) = f(tail w); ``f`` is a mapping or an array in vertex order."""
        if isinstance(f, Mapping):
            f = np.array([f[v] for v in g.vertices])
        f = np.asarray(f)
        return cls(f[g.pair_ends] if g.n_pairs else np.zeros((0, 2)))

    def conj(self) -> "AlgebraElement":
        return AlgebraElement(np.conj(self.values))

    def as_form(self) -> Form:
        """pi(a) as a degree-0 form."""
        b = np.zeros((self.values.shape[0], 2, 2), dtype=complex)
        b[:, 0, 0], b[:, 1, 1] = self.values[:, 0], self.values[:, 1]
        return Form(0, b)


def _same_degree(a: Form, b: Form) -> None:
    if a.degree != b.degree:
        raise ValidationError(f"degree mismatch: {a.degree} vs {b.degree}")


def _as_form(x) -> Form:
    return x.as_form() if isinstance(x, AlgebraElement) else x


def build_triple(g: LabeledGraph, ds: DsFunction) -> SpectralTriple:
    """Block-diagonal triple; Ds must be odd and nonvanishing on every oriented edge."""
    for w in g.oriented:
        if w not in ds.values:
            raise ValidationError(f"Ds undefined on edge {w}")
        x = ds.values[w]
        if x == 0 or not math.isfinite(x):
            raise ValidationError(f"Ds({w}) must be finite and nonzero")
        if ds.values.get(g.reverse[w]) != -x:
            raise ValidationError(f"Ds must be odd: Ds({g.reverse[w]}) != -Ds({w})")
    delta = ds.pair_values(g)
    P = delta.shape[0]
    blocks = np.zeros((P, 2, 2), dtype=complex)
    blocks[:, 0, 1], blocks[:, 1, 0] = -1j * delta, 1j * delta
    dirac = np.zeros((P, 2, 2), dtype=complex)
    dirac[:, 0, 1], dirac[:, 1, 0] = -1j / delta, 1j / delta
    return SpectralTriple(g, ds, delta, blocks, dirac)


def form_mul(a, b) -> Form:
    """Blockwise product; degrees add.  Algebra elements count as degree 0."""
    a, b = _as_form(a), _as_form(b)
    return Form(a.degree + b.degree, a.blocks @ b.blocks)


def commutator(a, b) -> Form:
    a, b = _as_form(a), _as_form(b)
    return Form(a.degree + b.degree, a.blocks @ b.blocks - b.blocks @ a.blocks)


def spectral_differential(t: SpectralTriple, a: AlgebraElement) -> Form:
    """da = i [D, pi(a)]."""
    pa = a.as_form().blocks
    return Form(1, 1j * (t.dirac @ pa - pa @ t.dirac))


def form_d(t: SpectralTriple, w) -> Form:
    """d w = i (D w - (-1)^k w D) for w of degree k.

    Degree 0 is the commutator of the spectral differential, degree 1 the
    anticommutator; higher degrees alternate.
    """
    w = _as_form(w)
    sign = -1.0 if w.degree % 2 == 0 else 1.0
    return Form(w.degree + 1, 1j * (t.dirac @ w.blocks + sign * w.blocks @ t.dirac))


def form_dstar(t: SpectralTriple, w: Form) -> Form:
    """Adjoint of d under the trace pairing: -i [D, w] on degree 1, -i {D, w} on degree 2."""
    if w.degree not in (1, 2):
        raise ValidationError(f"d* is implemented on degrees 1 and 2, got {w.degree}")
    sign = -1.0 if w.degree == 1 else 1.0
    return Form(w.degree - 1, -1j * (t.dirac @ w.blocks + sign * w.blocks @ t.dirac))


def form_inner(a: Form, b: Form) -> complex:
    """<a, b> = Tr(b* a), summed over blocks."""
    _same_degree(a, b)
    return complex(np.sum(np.conj(b.blocks) * a.blocks))


@dataclass
class ConnesDistance:
    distance: float
    maximizer: AlgebraElement | None = None
    path: list[str] = field(default_factory=list)


def connes_distance(t: SpectralTriple, v0: str, v1: str) -> ConnesDistance:
    """sup |a(v0) - a(v1)| over vertex functions a with ||da|| <= 1.

    Because da is block diagonal, ||da|| <= 1 means |a(head w) - a(tail w)| <=
    |Ds(w)| on every edge, so the supremum is the shortest-path distance for
    edge weights |Ds|.  The maximizer a = min(dist(v0, .), d) is returned,
    evaluated on flags through their tails.  Disconnected points are at
    infinite distance.
    """
    g = t.graph
    for v in (v0, v1):
        if v not in g.vertex_index:
            raise ValidationError(f"unknown vertex {v!r}")
    if v0 == v1:
        return ConnesDistance(0.0, AlgebraElement(np.zeros((g.n_pairs, 2))), [])
    G = nx.MultiGraph()
    G.add_nodes_from(g.vertices)
    for p, (w, _) in enumerate(g.pairs):
        G.add_edge(g.origin[w], g.target[w], key=w, weight=abs(float(t.delta[p])))
    dist, paths = nx.single_source_dijkstra(G, v0, weight="weight")
    if v1 not in dist:
        return ConnesDistance(math.inf)
    d = dist[v1]
    f = np.array([min(dist.get(v, math.inf), d) for v in g.vertices])
    route = []
    nodes = paths[v1]
    for x, y in zip(nodes, nodes[1:]):
        best = min(((abs(float(t.delta[g.slot[w][0]])), w) for w in g.flags(x) if g.target[w] == y))
        route.append(best[1])
    return ConnesDistance(d, AlgebraElement.from_vertex_function(g, f), route)


def operator_norm(f: Form) -> float:
    """Largest singular value over all blocks."""
    if f.blocks.shape[0] == 0:
        return 0.0
    return float(np.max(np.linalg.norm(f.blocks, ord=2, axis=(1, 2))))
