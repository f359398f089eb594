"""Line bundle data over the flag algebra: sections, hermitian structures,
connections, gauge transformations and curvature.

A connection is determined by its potential

    Phi = i [[0, phi01 Ds], [phi10 Ds, 0]]

on every pair block.  It is stored through the variables

    psi01 = 1 + i phi01 Ds^2,    psi10 = 1 - i phi10 Ds^2,

in which the field equations are polynomial.  Sections, hermitian
structures and gauge elements are flag functions of shape (P, 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .graph import LabeledGraph
from .spectral import (AlgebraElement, Form, SpectralTriple, commutator, form_d, form_mul,
                       spectral_differential)


def _flag_array(g: LabeledGraph, values, dtype=complex) -> np.ndarray:
    if isinstance(values, Mapping):
        out = np.zeros((g.n_pairs, 2), dtype=dtype)
        for w, x in values.items():
            p, s = g.slot[w]
            out[p, s] = x
        return out
    return np.asarray(values, dtype=dtype).reshape(-1, 2)


@dataclass(eq=False)
class Section:
    """Coordinates xi_w of a section with respect to a fixed basis."""

    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=complex).reshape(-1, 2)

    def as_algebra(self) -> AlgebraElement:
        return AlgebraElement(self.coords)

    def u0_defect(self, g: LabeledGraph) -> float:
        """Largest phase spread among nonzero coordinates at one vertex (0 under U0)."""
        worst = 0.0
        by_vertex: dict[int, list[complex]] = {}
        for p in range(g.n_pairs):
            for s in range(2):
                z = self.coords[p, s]
                if abs(z) > 0:
                    by_vertex.setdefault(int(g.pair_ends[p, s]), []).append(z)
        for zs in by_vertex.values():
            ref = zs[0] / abs(zs[0])
            for z in zs[1:]:
                worst = max(worst, abs(np.angle(z / abs(z) / ref)))
        return worst

    def check_u0(self, g: LabeledGraph, tol: float = 1e-12) -> bool:
        return self.u0_defect(g) <= tol


@dataclass(eq=False)
class HermitianStructure:
    """Positive weight lambda_w per flag."""

    lam: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float).reshape(-1, 2)
        if not np.all(self.lam > 0):
            raise ValidationError("hermitian structure must be strictly positive on every flag")

    def as_algebra(self) -> AlgebraElement:
        return AlgebraElement(self.lam)


@dataclass(eq=False)
class Connection:
    psi01: np.ndarray
    psi10: np.ndarray

    def __post_init__(self):
        self.psi01 = np.asarray(self.psi01, dtype=complex).reshape(-1)
        self.psi10 = np.asarray(self.psi10, dtype=complex).reshape(-1)

    @classmethod
    def from_phi(cls, t: SpectralTriple, phi01, phi10) -> "Connection":
        d2 = t.delta ** 2
        return cls(1 + 1j * np.asarray(phi01) * d2, 1 - 1j * np.asarray(phi10) * d2)

    @classmethod
    def trivial(cls, n_pairs: int) -> "Connection":
        return cls(np.ones(n_pairs), np.ones(n_pairs))

    def phi(self, t: SpectralTriple) -> tuple[np.ndarray, np.ndarray]:
        d2 = t.delta ** 2
        return (self.psi01 - 1) / (1j * d2), (1 - self.psi10) / (1j * d2)

    def potential(self, t: SpectralTriple) -> Form:
        phi01, phi10 = self.phi(t)
        b = np.zeros((t.n_pairs, 2, 2), dtype=complex)
        b[:, 0, 1], b[:, 1, 0] = 1j * phi01 * t.delta, 1j * phi10 * t.delta
        return Form(1, b)

    @classmethod
    def from_potential(cls, t: SpectralTriple, Phi: Form) -> "Connection":
        phi01 = Phi.blocks[:, 0, 1] / (1j * t.delta)
        phi10 = Phi.blocks[:, 1, 0] / (1j * t.delta)
        return cls.from_phi(t, phi01, phi10)


@dataclass(eq=False)
class GaugeElement:
    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex).reshape(-1, 2)
        if not np.allclose(np.abs(self.u), 1.0, rtol=0, atol=1e-12):
            raise ValidationError("gauge element must have unit modulus everywhere")

    @classmethod
    def from_vertex_phases(cls, g: LabeledGraph, theta) -> "GaugeElement":
        """Element of the reduced group U0: one phase per vertex."""
        if isinstance(theta, Mapping):
            theta = np.array([theta[v] for v in g.vertices])
        return cls(np.exp(1j * np.asarray(theta, dtype=float)[g.pair_ends]))

    def is_u0(self, g: LabeledGraph, tol: float = 1e-12) -> bool:
        return Section(self.u).check_u0(g, tol)


@dataclass(eq=False)
class GaugeConfiguration:
    """Hermitian structure, connection, section and mass on a spectral triple."""

    triple: SpectralTriple
    lam: HermitianStructure
    conn: Connection
    xi: Section
    mass: float = 0.0

    @property
    def graph(self) -> LabeledGraph:
        return self.triple.graph

    @property
    def rho(self) -> np.ndarray:
        """rho_w = m Ds(w) for the canonical orientations."""
        return self.mass * self.triple.delta

    def with_(self, **changes) -> "GaugeConfiguration":
        return replace(self, **changes)

    @classmethod
    def from_json(cls, t: SpectralTriple, data: Mapping) -> "GaugeConfiguration":
        g = t.graph
        try:
            lam = _flag_array(g, {str(k): float(v) for k, v in data["lambda"].items()}, float)
            xi = _flag_array(g, {str(k): complex(v[0], v[1]) for k, v in data["xi"].items()})
            psi01 = np.zeros(g.n_pairs, dtype=complex)
            psi10 = np.zeros(g.n_pairs, dtype=complex)
            for eid, entry in data["psi"].items():
                p, s = g.slot[str(eid)]
                a, b = complex(*entry["psi01"]), complex(*entry["psi10"])
                # keys name the orientation whose tail is slot 0; reversed keys swap roles
                psi01[p], psi10[p] = (a, b) if s == 0 else (b, a)
            mass = float(data.get("mass", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed configuration JSON: {exc}") from exc
        missing = [w for w in g.oriented if w not in data["lambda"]]
        if missing:
            raise ValidationError(f"configuration lacks lambda on flags {missing}")
        return cls(t, HermitianStructure(lam), Connection(psi01, psi10), Section(xi), mass)

    def to_json(self) -> dict:
        g = self.graph
        lam, xi = {}, {}
        for p, (w, mw) in enumerate(g.pairs):
            for s, f in enumerate((w, mw)):
                lam[f] = float(self.lam.lam[p, s])
                z = complex(self.xi.coords[p, s])
                xi[f] = [z.real, z.imag]
        psi = {w: {"psi01": [self.conn.psi01[p].real, self.conn.psi01[p].imag],
                   "psi10": [self.conn.psi10[p].real, self.conn.psi10[p].imag]}
               for p, (w, _) in enumerate(g.pairs)}
        return {"lambda": lam, "psi": psi, "xi": xi, "mass": float(self.mass)}


# ---- covariant derivative and curvature ----------------------------------------

def covariant_diff(conn: Connection, xi: Section, t: SpectralTriple) -> Form:
    """sigma = da + Phi a, the coordinates of the covariant derivative of xi."""
    a = xi.as_algebra()
    return spectral_differential(t, a) + form_mul(conn.potential(t), a)


def curvature_scalar(conn: Connection, t: SpectralTriple) -> np.ndarray:
    """Per-pair scalar theta with curvature theta * 1: -(psi01 psi10 - 1) / Ds^2."""
    return -(conn.psi01 * conn.psi10 - 1) / t.delta ** 2


def curvature_op(conn: Connection, t: SpectralTriple) -> Form:
    """Curvature from the closed form; a multiple of the identity on every block."""
    th = curvature_scalar(conn, t)
    b = np.zeros((t.n_pairs, 2, 2), dtype=complex)
    b[:, 0, 0] = b[:, 1, 1] = th
    return Form(2, b)


def curvature_blockwise(conn: Connection, t: SpectralTriple) -> Form:
    """Curvature as d Phi + Phi^2 with the form calculus (independent of the closed form)."""
    Phi = conn.potential(t)
    return form_d(t, Phi) + form_mul(Phi, Phi)


def bianchi_residual(conn: Connection, t: SpectralTriple) -> Form:
    """d theta - [theta, Phi]."""
    theta = curvature_blockwise(conn, t)
    return form_d(t, theta) - commutator(theta, conn.potential(t))


def hermitian_compat_residual(conn: Connection, lam: HermitianStructure, t: SpectralTriple) -> Form:
    """d lambda - lambda Phi - Phi* lambda (zero iff lambda_w psi01 = lambda_{-w} conj(psi10))."""
    L = lam.as_algebra()
    Phi = conn.potential(t)
    return spectral_differential(t, L) - form_mul(L, Phi) - form_mul(Phi.adjoint(), L)


def hermitian_defect(conn: Connection, lam: HermitianStructure) -> np.ndarray:
    """lambda_0 psi01 - lambda_1 conj(psi10) per pair."""
    return lam.lam[:, 0] * conn.psi01 - lam.lam[:, 1] * np.conj(conn.psi10)


def gauge_transform(u: GaugeElement, cfg: GaugeConfiguration) -> GaugeConfiguration:
    """Apply a' = u a, lambda' = u lambda u*, Phi' = u du* + u Phi u*."""
    t = cfg.triple
    U = AlgebraElement(u.u)
    Ustar = U.conj()
    Phi = cfg.conn.potential(t)
    Phi_new = form_mul(U, spectral_differential(t, Ustar)) + form_mul(form_mul(U, Phi), Ustar)
    lam_new = form_mul(form_mul(U, cfg.lam.as_algebra()), Ustar).blocks
    lam_new = HermitianStructure(np.real(np.stack([lam_new[:, 0, 0], lam_new[:, 1, 1]], axis=1)))
    return cfg.with_(lam=lam_new, conn=Connection.from_potential(t, Phi_new),
                     xi=Section(u.u * cfg.xi.coords))


def conjugate_section(xi: Section, lam: HermitianStructure) -> np.ndarray:
    """Coordinates conj(a) / lambda of the conjugate section."""
    return np.conj(xi.coords) / lam.lam


@dataclass
class Circle:
    center: complex
    radius: float


def curvature_min_locus(ds: float) -> Circle:
    """Circle of phi01 = conj(phi10) values with flat unitary connection: center i/Ds^2, radius 1/Ds^2."""
    if ds == 0 or not math.isfinite(ds):
        raise ValidationError("Ds must be finite and nonzero")
    return Circle(1j / ds ** 2, 1.0 / ds ** 2)


# ---- builders -------------------------------------------------------------------

def hermitian_connection(lam: HermitianStructure, modulus, gamma) -> Connection:
    """Connection with lambda_0 |psi01| = lambda_1 |psi10| = modulus and arg psi01 = -arg psi10 = gamma."""
    modulus, gamma = np.asarray(modulus, dtype=float), np.asarray(gamma, dtype=float)
    return Connection(modulus / lam.lam[:, 0] * np.exp(1j * gamma),
                      modulus / lam.lam[:, 1] * np.exp(-1j * gamma))


def random_hermitian_configuration(t: SpectralTriple, rng: np.random.Generator,
                                   mass: float | None = None) -> GaugeConfiguration:
    """Random configuration satisfying the hermitian compatibility exactly."""
    P = t.n_pairs
    lam = HermitianStructure(rng.uniform(0.5, 2.0, (P, 2)))
    conn = hermitian_connection(lam, rng.uniform(0.2, 2.0, P), rng.uniform(-math.pi, math.pi, P))
    xi = Section(rng.normal(size=(P, 2)) + 1j * rng.normal(size=(P, 2)))
    m = rng.uniform(0.0, 2.0) if mass is None else mass
    return GaugeConfiguration(t, lam, conn, xi, m)
