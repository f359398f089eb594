"""Compatibility equation, geometrizability criterion and charge splittings.

An isometric state of a labeled graph is a choice of fiber lengths l_v > 0 and
angles w_e in (0, pi) (one per edge pair) solving, at every vertex v,

    k_v l_v = sum_{w at v} (cos w_w / b_w) l_{head(w)}.

Splitting the vertex charges along the flags, k_v = sum k_w, reduces the
system to independent dipoles sharing their lengths; ``decompose_state`` and
``compose_states`` convert between the two descriptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import CompositionError, StateNotIsometric, ValidationError
from .graph import LabeledGraph, cycle_basis

CLOSED_FORM_TOL = 1e-12
SOLVER_TOL = 1e-8
PSD_TOL = 1e-10
BALANCE_TOL = 1e-10
# |cos| below this is treated as an exact right angle when splitting charges
RIGHT_ANGLE_SNAP = 1e-12


@dataclass
class IsometricState:
    """Lengths per vertex and one angle per edge pair (keyed by canonical id)."""

    lengths: dict[str, float]
    angles: dict[str, float]

    def angle(self, g: LabeledGraph, w: str) -> float:
        p, _ = g.slot[w]
        return self.angles[g.pairs[p][0]]

    def length_vector(self, g: LabeledGraph) -> np.ndarray:
        return np.array([self.lengths[v] for v in g.vertices], dtype=float)

    def angle_vector(self, g: LabeledGraph) -> np.ndarray:
        return np.array([self.angles[w] for w, _ in g.pairs], dtype=float)

    def check(self, g: LabeledGraph) -> None:
        for v in g.vertices:
            if v not in self.lengths:
                raise ValidationError(f"state has no length for vertex {v}")
            if not self.lengths[v] > 0:
                raise ValidationError(f"length of vertex {v} must be positive")
        for w, mw in g.pairs:
            key = w if w in self.angles else mw
            if key not in self.angles:
                raise ValidationError(f"state has no angle for edge {w}")
            if not 0 < self.angles[key] < math.pi:
                raise ValidationError(f"angle of edge {w} must lie strictly inside (0, pi)")

    def normalized(self, g: LabeledGraph) -> "IsometricState":
        """Accept angles keyed by either orientation; return canonical keys."""
        ang = {}
        for w, mw in g.pairs:
            ang[w] = float(self.angles[w] if w in self.angles else self.angles[mw])
        return IsometricState({v: float(self.lengths[v]) for v in g.vertices}, ang)

    @classmethod
    def from_json(cls, data: Mapping) -> "IsometricState":
        try:
            return cls({str(k): float(v) for k, v in data["lengths"].items()},
                       {str(k): float(v) for k, v in data["angles"].items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed state JSON: {exc}") from exc

    def to_json(self) -> dict:
        return {"lengths": dict(self.lengths), "angles": dict(self.angles)}


@dataclass
class ChargeSplitting:
    """Per-flag charges k_w whose sums over flags reproduce the vertex charges."""

    k: dict[str, float]

    def vertex_sums(self, g: LabeledGraph) -> dict[str, float]:
        out = {v: 0.0 for v in g.vertices}
        for w in g.oriented:
            out[g.origin[w]] += self.k[w]
        return out

    def max_charge_defect(self, g: LabeledGraph) -> float:
        sums = self.vertex_sums(g)
        return max((abs(sums[v] - float(g.charge[v])) for v in g.vertices), default=0.0)

    @classmethod
    def from_json(cls, data: Mapping) -> "ChargeSplitting":
        try:
            return cls({str(k): float(v) for k, v in data["k"].items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed splitting JSON: {exc}") from exc

    def to_json(self) -> dict:
        return {"k": dict(self.k)}


@dataclass
class DipoleState:
    """One edge pair viewed as a dipole: charges, index, angle, end lengths.

    ``k0``/``l0`` belong to the origin of the canonical orientation ``edge``.
    """

    edge: str
    k0: float
    k1: float
    b: int
    omega: float
    l0: float
    l1: float

    def residual(self) -> tuple[float, float]:
        c = math.cos(self.omega) / self.b
        return self.k0 * self.l0 - c * self.l1, self.k1 * self.l1 - c * self.l0


@dataclass
class GeomForm:
    """H_M = diag K - J_B with J_B the symmetric adjacency weighted by 1/b."""

    H: np.ndarray
    K: np.ndarray
    J: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        if self.H.size == 0:
            return 0.0
        return float(np.linalg.eigvalsh(self.H)[0])


class Verdict(str, Enum):
    GEOMETRIZABLE = "geometrizable"
    NOT_GEOMETRIZABLE = "not geometrizable"
    NOT_APPLICABLE = "criterion not applicable"


@dataclass
class DipoleSolution:
    """Closed-form dipole state.  ``case`` is "free-ratio", "solution" or "none"."""

    case: str
    omega: float | None = None
    l0: float | None = None
    l1: float | None = None

    @property
    def exists(self) -> bool:
        return self.case != "none"


@dataclass
class MonopoleSolution:
    exists: bool
    omega: float | None = None
    length: float | None = None


# ---- the equation and the combinatorial Laplacian ---------------------------------

def compat_residual(g: LabeledGraph, s: IsometricState) -> np.ndarray:
    """Residual k_v l_v - sum_w (cos w_w / b_w) l_{head w}, one entry per vertex."""
    s = s.normalized(g)
    vi = g.vertex_index
    res = np.array([float(g.charge[v]) * s.lengths[v] for v in g.vertices])
    for w in g.oriented:
        c = math.cos(s.angle(g, w)) / g.index[w]
        res[vi[g.origin[w]]] -= c * s.lengths[g.target[w]]
    return res


def _vertex_array(g: LabeledGraph, f) -> np.ndarray:
    if isinstance(f, Mapping):
        return np.array([f[v] for v in g.vertices])
    return np.asarray(f)


def graph_d(g: LabeledGraph, f) -> np.ndarray:
    """df(w) = f(head w) - f(tail w), one entry per oriented edge (order of g.oriented)."""
    f = _vertex_array(g, f)
    vi = g.vertex_index
    return np.array([f[vi[g.target[w]]] - f[vi[g.origin[w]]] for w in g.oriented])


def graph_dstar(g: LabeledGraph, phi) -> np.ndarray:
    """Adjoint of d for odd edge functions: d*phi(v) = -(1/|dv|) sum_{w at v} phi(w).

    Vertices without flags get 0.
    """
    phi = np.asarray(phi)
    vi = g.vertex_index
    out = np.zeros(len(g.vertices), dtype=np.result_type(phi, float))
    for i, w in enumerate(g.oriented):
        out[vi[g.origin[w]]] -= phi[i]
    val = g.valence
    return np.where(val > 0, out / np.maximum(val, 1), 0.0)


def graph_laplacian(g: LabeledGraph, f) -> np.ndarray:
    """Delta f(v) = f(v) - mean of f over the heads of the flags at v."""
    f = _vertex_array(g, f)
    vi = g.vertex_index
    acc = np.zeros(len(g.vertices), dtype=np.result_type(f, float))
    for w in g.oriented:
        acc[vi[g.origin[w]]] += f[vi[g.target[w]]]
    val = g.valence
    return np.where(val > 0, f - acc / np.maximum(val, 1), 0.0)


def vertex_inner(g: LabeledGraph, f, h) -> complex:
    """<f, h>_V = sum_v |dv| f(v) conj(h(v))."""
    return complex(np.sum(g.valence * _vertex_array(g, f) * np.conj(_vertex_array(g, h))))


def edge_inner(g: LabeledGraph, phi, psi) -> complex:
    """<phi, psi>_W = 1/2 sum_w phi(w) conj(psi(w)) over oriented edges."""
    return complex(0.5 * np.sum(np.asarray(phi) * np.conj(np.asarray(psi))))


# ---- closed forms ----------------------------------------------------------------

def _exact(x):
    # rationals and strings stay exact; floats are used as given
    return x if isinstance(x, float) else Fraction(x)


def solve_dipole(k0, k1, b: int) -> DipoleSolution:
    """States of the two-vertex graph with one edge pair of index b.

    k0 = k1 = 0 forces a right angle with a free length ratio (canonical
    l0 = l1 = 1).  Otherwise a state exists iff 0 < k0 k1 b^2 < 1, with
    cos^2 w = k0 k1 b^2, sign(cos w) = sign(k0) and l0^2 / l1^2 = k1 / k0 (l1 = 1).
    """
    k0, k1 = _exact(k0), _exact(k1)
    if k0 == 0 and k1 == 0:
        return DipoleSolution("free-ratio", math.pi / 2, 1.0, 1.0)
    prod = k0 * k1 * b * b
    if not 0 < prod < 1:
        return DipoleSolution("none")
    c = math.copysign(math.sqrt(float(prod)), float(k0))
    return DipoleSolution("solution", math.acos(c), math.sqrt(float(k1 / k0)), 1.0)


def solve_monopole(k, b: int) -> MonopoleSolution:
    """One vertex with a loop: a state exists iff |k| b < 2, with cos w = k b / 2."""
    k = _exact(k)
    if not abs(k) * b < 2:
        return MonopoleSolution(False)
    return MonopoleSolution(True, math.acos(float(k * b) / 2), 1.0)


def h_form(g: LabeledGraph) -> GeomForm:
    """Quadratic form L^T H L = sum k_v l_v^2 - sum_{w oriented} l_{tail w} l_{head w} / b_w."""
    n = len(g.vertices)
    vi = g.vertex_index
    K = np.diag(g.charge_vector())
    J = np.zeros((n, n))
    for w in g.oriented:
        u, v = vi[g.origin[w]], vi[g.target[w]]
        # each oriented edge contributes once to the symmetric form, split over (u,v) and (v,u)
        J[u, v] += 0.5 / g.index[w]
        J[v, u] += 0.5 / g.index[w]
    return GeomForm(K - J, K, J)


def is_geometrizable(g: LabeledGraph, tol: float = PSD_TOL) -> Verdict:
    """Criterion for positive charge vectors: geometrizable iff H_M is not PSD."""
    if any(g.charge[v] <= 0 for v in g.vertices):
        return Verdict.NOT_APPLICABLE
    lam = h_form(g).min_eigenvalue
    return Verdict.GEOMETRIZABLE if lam < -tol else Verdict.NOT_GEOMETRIZABLE


# ---- decomposition ---------------------------------------------------------------

def _scale(g: LabeledGraph, s: IsometricState) -> float:
    kmax = max([abs(float(g.charge[v])) for v in g.vertices] + [1.0])
    lmax = max(list(s.lengths.values()) + [1.0])
    return kmax * lmax


def decompose_state(g: LabeledGraph, s: IsometricState, tol: float = SOLVER_TOL) -> ChargeSplitting:
    """Per-flag charges k_w = (cos w_w / b_w) l_{head w} / l_{tail w} of a state."""
    s = s.normalized(g)
    s.check(g)
    res = compat_residual(g, s)
    if res.size and np.max(np.abs(res)) > tol * _scale(g, s):
        raise StateNotIsometric(f"compatibility residual {np.max(np.abs(res)):.3e} exceeds tolerance {tol:.1e}")
    k = {}
    for w in g.oriented:
        c = math.cos(s.angle(g, w))
        if abs(c) < RIGHT_ANGLE_SNAP:
            c = 0.0
        k[w] = c / g.index[w] * s.lengths[g.target[w]] / s.lengths[g.origin[w]]
    return ChargeSplitting(k)


def dipole_states(g: LabeledGraph, s: IsometricState, split: ChargeSplitting) -> list[DipoleState]:
    """Cut a state along its splitting into one dipole state per edge pair."""
    s = s.normalized(g)
    out = []
    for w, mw in g.pairs:
        out.append(DipoleState(w, split.k[w], split.k[mw], g.index[w], s.angles[w],
                               s.lengths[g.origin[w]], s.lengths[g.target[w]]))
    return out


def compose_states(g: LabeledGraph, dipoles: Sequence[DipoleState], tol: float = 1e-10) -> IsometricState:
    """Glue dipole states into a state of ``g``.

    Every pair must appear exactly once; lengths must agree at shared
    vertices and the per-flag charges must sum to the vertex charges.
    """
    by_edge = {}
    for d in dipoles:
        if d.edge not in g.slot:
            raise CompositionError(f"dipole edge {d.edge!r} is not an edge of the graph")
        p, sl = g.slot[d.edge]
        if p in by_edge:
            raise CompositionError(f"edge pair {g.pairs[p][0]} given twice")
        if sl == 1:  # stored with the reversed orientation
            d = DipoleState(g.pairs[p][0], d.k1, d.k0, d.b, d.omega, d.l1, d.l0)
        by_edge[p] = d
    missing = [g.pairs[p][0] for p in range(g.n_pairs) if p not in by_edge]
    if missing:
        raise CompositionError(f"no dipole state for edges {missing}")

    lengths: dict[str, float] = {}
    sums = {v: 0.0 for v in g.vertices}
    angles = {}
    for p, (w, mw) in enumerate(g.pairs):
        d = by_edge[p]
        if d.b != g.index[w]:
            raise CompositionError(f"edge {w}: dipole index {d.b} differs from graph index {g.index[w]}")
        r0, r1 = d.residual()
        if max(abs(r0), abs(r1)) > tol * max(1.0, abs(d.l0), abs(d.l1)):
            raise CompositionError(f"edge {w}: dipole state does not solve its own equation")
        for v, l in ((g.origin[w], d.l0), (g.target[w], d.l1)):
            if v in lengths and abs(lengths[v] - l) > tol * max(1.0, abs(l)):
                raise CompositionError(f"length mismatch at vertex {v}: {lengths[v]!r} vs {l!r}")
            lengths.setdefault(v, l)
        sums[g.origin[w]] += d.k0
        sums[g.origin[mw]] += d.k1
        angles[w] = d.omega
    for v in g.vertices:
        if v not in lengths:
            raise CompositionError(f"vertex {v} lies on no edge; its length is undetermined")
        if abs(sums[v] - float(g.charge[v])) > tol * max(1.0, abs(float(g.charge[v]))):
            raise CompositionError(f"charge splits at vertex {v} sum to {sums[v]!r}, expected {g.charge[v]}")
    return IsometricState(lengths, angles)


def circuit_products(g: LabeledGraph, split: ChargeSplitting, circuits=None) -> list[tuple[list[str], float]]:
    """Products prod_{w in Z} k_w / k_{-w} for each circuit Z."""
    circuits = cycle_basis(g) if circuits is None else circuits
    out = []
    for z in circuits:
        prod = 1.0
        for w in z:
            kw, kmw = split.k[w], split.k[g.reverse[w]]
            if kw == 0 or kmw == 0:
                raise ValidationError(f"balance check not applicable: zero charge on circuit edge {w}")
            prod *= kw / kmw
        out.append((list(z), prod))
    return out


def balance_check(g: LabeledGraph, split: ChargeSplitting, circuits=None, tol: float = BALANCE_TOL) -> bool:
    """True iff every circuit product equals 1 within ``tol``."""
    return all(abs(p - 1.0) <= tol for _, p in circuit_products(g, split, circuits))


# ---- numerical search --------------------------------------------------------------

@dataclass
class SolveStats:
    starts_tried: int = 0
    best_residual: float = math.inf
    history: list[float] = field(default_factory=list)


def solve_state(g: LabeledGraph, seed: int = 0, starts: int = 24, tol: float = SOLVER_TOL,
                angle_margin: float = 1e-3, stats: SolveStats | None = None) -> IsometricState | None:
    """Least-squares feasibility search for an isometric state.

    Unknowns are log-lengths (the first vertex of every component fixed at
    length 1) and c_e = cos w_e, bounded by cos(angle_margin) in modulus so
    that returned angles stay away from 0 and pi.  The first start is the
    right-angle configuration with unit lengths; further starts are drawn from
    ``seed``.  Returns None when no start reaches residual ``tol``.
    """
    n, P = len(g.vertices), g.n_pairs
    if n == 0:
        return IsometricState({}, {})
    vi = g.vertex_index
    fixed = {vi[c[0]] for c in g.components()}
    free = [i for i in range(n) if i not in fixed]
    nf = len(free)
    kvec = g.charge_vector()
    tail = np.array([vi[g.origin[w]] for w in g.oriented], dtype=int)
    head = np.array([vi[g.target[w]] for w in g.oriented], dtype=int)
    pair_of = np.array([g.slot[w][0] for w in g.oriented], dtype=int)
    binv = np.array([1.0 / g.index[w] for w in g.oriented])
    cmax = math.cos(angle_margin)

    def unpack(x):
        logl = np.zeros(n)
        logl[free] = x[:nf]
        return np.exp(logl), x[nf:]

    def resid(x):
        l, c = unpack(x)
        r = kvec * l
        np.subtract.at(r, tail, c[pair_of] * binv * l[head])
        return r

    def jac(x):
        l, c = unpack(x)
        Jl = np.diag(kvec * l)
        Jc = np.zeros((n, P))
        np.subtract.at(Jl, (tail, head), c[pair_of] * binv * l[head])
        np.subtract.at(Jc, (tail, pair_of), binv * l[head])
        return np.hstack([Jl[:, free], Jc])

    lo = np.concatenate([np.full(nf, -30.0), np.full(P, -cmax)])
    hi = np.concatenate([np.full(nf, 30.0), np.full(P, cmax)])
    rng = np.random.default_rng(seed)
    stats = stats if stats is not None else SolveStats()
    for attempt in range(max(1, starts)):
        if attempt == 0:
            x0 = np.zeros(nf + P)
        else:
            x0 = np.concatenate([rng.normal(0.0, 1.0, nf), rng.uniform(-0.95, 0.95, P) * cmax])
        sol = least_squares(resid, x0, jac=jac, bounds=(lo, hi), method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=500)
        stats.starts_tried += 1
        err = float(np.max(np.abs(resid(sol.x)))) if n else 0.0
        stats.history.append(err)
        stats.best_residual = min(stats.best_residual, err)
        if err < tol:
            l, c = unpack(sol.x)
            c = np.clip(c, -cmax, cmax)
            state = IsometricState({v: float(l[vi[v]]) for v in g.vertices},
                                   {w: float(math.acos(c[p])) for p, (w, _) in enumerate(g.pairs)})
            if np.max(np.abs(compat_residual(g, state))) < tol:
                return state
    return None
