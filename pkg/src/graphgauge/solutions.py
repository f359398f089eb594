"""Critical configurations and the dictionary between isometric states and
spectral gauge configurations.

Dipole solutions are parametrized by lambda_0, lambda_1 > 0 and rho = m Ds.
Nondegenerate critical points (|xi_0||xi_1| != 0) exist only for rho = 0
(massless, flat connection, parallel field) and 1 < |rho| < 2 (massive).

For a general graph, ``geometric_to_spectral`` turns an isometric state with
its charge splitting into a configuration that is critical pair by pair:
each nonzero pair gets rho from the coupling of neighbouring pairs through
shared vertex lengths, each zero pair is degenerate with rho = 1.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import bisect, least_squares

from .action import ActionValue, action_S, el_residual, gauge_spot_check
from .compat import (ChargeSplitting, IsometricState, circuit_products, decompose_state, solve_dipole,
                     solve_monopole)
from .errors import BalanceError, DomainError, NoSolution, NotHermitian, OrientationError, ValidationError
from .gauge import (Connection, GaugeConfiguration, HermitianStructure, Section, hermitian_compat_residual)
from .graph import LabeledGraph, as_fraction, cycle_basis, dipole
from .spectral import DsFunction, build_triple

DEFAULT_DELTA0 = 4.0 / 9.0  # delta(1.5): the seed pair sits mid-band
ZERO_CHARGE = 1e-12
CRITICAL_TOL = 1e-9


class PhaseClass(str, Enum):
    NONDEGENERATE_MASSLESS = "nondegenerate-massless"
    NONDEGENERATE_MASSIVE = "nondegenerate-massive"
    DEGENERATE = "degenerate"
    NONE = "none"

    @property
    def nondegenerate(self) -> bool:
        return self in (PhaseClass.NONDEGENERATE_MASSLESS, PhaseClass.NONDEGENERATE_MASSIVE)


def massgap_classify(rho: float, tol: float = 1e-12) -> PhaseClass:
    """Which kind of critical dipole configuration exists for rho = m Ds."""
    r = abs(rho)
    if r <= tol:
        return PhaseClass.NONDEGENERATE_MASSLESS
    if abs(r - 1) <= tol or abs(r - 2) <= tol:
        return PhaseClass.DEGENERATE
    if 1 < r < 2:
        return PhaseClass.NONDEGENERATE_MASSIVE
    return PhaseClass.NONE


# ---- dipole solutions -------------------------------------------------------------

def dipole_configuration(lam0, lam1, modulus, gamma, xi0, xi1, ds=1.0, mass=0.0) -> GaugeConfiguration:
    """Single-pair configuration with lambda_0 |psi01| = lambda_1 |psi10| = modulus."""
    g = dipole(1, 1)
    t = build_triple(g, DsFunction.from_pairs(g, {"e": ds}))
    lam = HermitianStructure([[lam0, lam1]])
    conn = Connection([modulus / lam0 * np.exp(1j * gamma)], [modulus / lam1 * np.exp(-1j * gamma)])
    return GaugeConfiguration(t, lam, conn, Section([[xi0, xi1]]), float(mass))


def solve_massless_dipole(lam0: float, lam1: float, gamma: float = 0.0, ds: float = 1.0) -> GaugeConfiguration:
    """Flat connection psi01 psi10 = 1 with a parallel field, |xi_1| = 1."""
    if not (lam0 > 0 and lam1 > 0):
        raise DomainError("lambda_0 and lambda_1 must be positive")
    psi = math.sqrt(lam0 * lam1)
    # arg xi_1 - arg xi_0 + gamma = 0
    return dipole_configuration(lam0, lam1, psi, gamma, math.sqrt(lam1 / lam0), np.exp(-1j * gamma), ds, 0.0)


def massive_moduli(lam0: float, lam1: float, rho: float, ds: float) -> tuple[float, float, float]:
    """(psi, |xi_0|, |xi_1|) of the massive solution, 1 <= |rho| <= 2."""
    r = abs(rho)
    psi = math.sqrt(lam0 * lam1) * (r - 1)
    c = (lam0 ** 2 + lam1 ** 2) * (r - 1) * (2 - r) / ds ** 2
    c = max(c, 0.0)
    return psi, math.sqrt(c / lam0), math.sqrt(c / lam1)


def solve_massive_dipole(lam0: float, lam1: float, rho: float, ds: float = 1.0,
                         gamma: float = 0.0) -> GaugeConfiguration:
    """Massive critical configuration, mass m = rho / Ds.

    psi = sqrt(lambda_0 lambda_1)(rho - 1), lambda_0 |xi_0|^2 = lambda_1 |xi_1|^2 =
    (lambda_0^2 + lambda_1^2)(rho - 1)(2 - rho) / Ds^2, and
    arg xi_1 - arg xi_0 + gamma = pi.  At |rho| = 1 and |rho| = 2 the
    degenerate configuration (xi = 0) is returned.
    """
    if not (lam0 > 0 and lam1 > 0):
        raise DomainError("lambda_0 and lambda_1 must be positive")
    if ds == 0:
        raise DomainError("Ds must be nonzero")
    phase = massgap_classify(rho)
    if phase not in (PhaseClass.NONDEGENERATE_MASSIVE, PhaseClass.DEGENERATE):
        raise DomainError(f"rho = {rho} lies outside 1 <= |rho| <= 2 (massgap class: {phase.value})")
    r = abs(rho)
    if phase is PhaseClass.DEGENERATE:
        r = 1.0 if abs(r - 1) < 0.5 else 2.0
    psi, a0, a1 = massive_moduli(lam0, lam1, r, ds)
    if phase is PhaseClass.DEGENERATE:
        a0 = a1 = 0.0
    xi1 = a1 * np.exp(1j * (math.pi - gamma))
    return dipole_configuration(lam0, lam1, psi, gamma, a0, xi1, ds, math.copysign(r, rho) / ds)


def massless_from_state(k0, k1, b: int, ds: float = 1.0, gamma: float = 0.0) -> GaugeConfiguration:
    """Massless dictionary: lambda = |k|, psi = |cos omega| / b, |xi| = l."""
    sol = solve_dipole(k0, k1, b)
    if sol.case != "solution":
        raise NoSolution(f"dipole ({k0}, {k1}, {b}) has no nondegenerate isometric state")
    lam0, lam1 = abs(float(as_fraction(k0))), abs(float(as_fraction(k1)))
    psi = abs(math.cos(sol.omega)) / b
    return dipole_configuration(lam0, lam1, psi, gamma, sol.l0, sol.l1 * np.exp(-1j * gamma), ds, 0.0)


@dataclass
class MonopoleRealization:
    config: GaugeConfiguration
    lam: float
    psi: float
    xi_abs: float
    length: float
    omega: float
    rho: float
    mass: float


def solve_monopole_spectral(k: float, b: int, rho: float = 1.5, ds: float = 1.0,
                            linear_length_law: bool = False) -> MonopoleRealization:
    """Loop model: the dipole model with lambda_0 = lambda_1 and a symmetric field.

    lambda (|rho| - 1) = |k|/2, psi = |cos omega| / b = |k|/2.  The field is
    symmetric (xi_0 = xi_1) and so is the connection in psi-variables
    (psi01 = psi10); see the notes on identifying the two loop orientations.
    The length is l^2 = 2 lambda |xi|^2 / |k| (each flag carries k/2), or
    l = lambda |xi| / |k| with ``linear_length_law``.
    """
    geo = solve_monopole(k, b)
    k = float(as_fraction(k))
    if not geo.exists:
        raise DomainError(f"|k| b = {abs(k) * b} >= 2: no isometric state for the monopole")
    if abs(k) < ZERO_CHARGE:
        cfg = dipole_configuration(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, ds, 1.0 / ds)
        return MonopoleRealization(cfg, 1.0, 0.0, 0.0, math.nan, math.pi / 2, 1.0, 1.0 / ds)
    if massgap_classify(rho) is not PhaseClass.NONDEGENERATE_MASSIVE:
        raise DomainError(f"rho = {rho} must satisfy 1 < |rho| < 2")
    r = abs(rho)
    lam = abs(k) / (2 * (r - 1))
    psi = abs(k) / 2
    x2 = abs(k) * (2 - r) / ds ** 2
    x = math.sqrt(x2)
    length = lam * x / abs(k) if linear_length_law else math.sqrt(2 * lam * x2 / abs(k))
    cfg = dipole_configuration(lam, lam, psi, math.pi, x, x, ds, math.copysign(r, rho) / ds)
    return MonopoleRealization(cfg, lam, psi, x, length, geo.omega, math.copysign(r, rho), cfg.mass)


# ---- the Ds construction -----------------------------------------------------------

def delta_of_rho(rho: float) -> float:
    """(2 - rho) / ((rho - 1) rho^2), strictly decreasing from +inf to 0 on (1, 2)."""
    if not 1 < rho < 2:
        raise DomainError(f"delta(rho) is defined for 1 < rho < 2, got {rho}")
    return (2 - rho) / ((rho - 1) * rho ** 2)


def rho_of_delta(delta: float) -> float:
    """Inverse of ``delta_of_rho`` by bisection.

    Solved in t = rho - 1 as delta t (1 + t)^2 = 1 - t, which keeps full
    relative precision for t near 0 (large delta).
    """
    if not delta > 0 or not math.isfinite(delta):
        raise DomainError(f"rho(delta) needs finite delta > 0, got {delta}")
    f = lambda t: delta * t * (1 + t) ** 2 - (1 - t)
    # f(0) = -1 < 0, f(1) = 4 delta > 0
    t = bisect(f, 0.0, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)
    return 1.0 + t


def coupling_K(k_w: float, k_mw: float, k_wp: float, k_mwp: float) -> float:
    """((k_w^2 + k_-w^2) / (k_w'^2 + k_-w'^2)) (k_w' / k_w)."""
    if k_w == 0 or k_wp == 0:
        raise DomainError("coupling K needs nonzero k_w and k_w'")
    return (k_w ** 2 + k_mw ** 2) / (k_wp ** 2 + k_mwp ** 2) * (k_wp / k_w)


@dataclass(eq=False)
class SpectralRealization:
    config: GaugeConfiguration
    ds: DsFunction
    W_s: list[str]
    state: IsometricState | None = None
    splitting: ChargeSplitting | None = None
    delta: dict[str, float] = field(default_factory=dict)
    lengths: dict[str, float] = field(default_factory=dict)
    scale: dict[str, float] = field(default_factory=dict)

    @property
    def graph(self) -> LabeledGraph:
        return self.config.graph

    def to_json(self) -> dict:
        out = self.config.to_json()
        out["delta_s"] = self.ds.to_json(self.graph)["delta_s"]
        out["W_s"] = list(self.W_s)
        prov = {}
        if self.state is not None:
            prov["state"] = self.state.to_json()
        if self.splitting is not None:
            prov["splitting"] = self.splitting.to_json()
        out["provenance"] = prov
        return out

    @classmethod
    def from_json(cls, g: LabeledGraph, data) -> "SpectralRealization":
        try:
            ds = DsFunction.from_json(g, data)
            t = build_triple(g, ds)
            cfg = GaugeConfiguration.from_json(t, data)
            prov = data.get("provenance", {}) or {}
            state = IsometricState.from_json(prov["state"]) if "state" in prov else None
            split = ChargeSplitting.from_json(prov["splitting"]) if "splitting" in prov else None
            W_s = [str(w) for w in data.get("W_s", [])]
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed realization JSON: {exc}") from exc
        return cls(cfg, ds, W_s, state, split)


def _pair_kind(g: LabeledGraph, split: ChargeSplitting, tol: float) -> list[int]:
    """+1 / -1 for pairs with positive / negative charges, 0 for zero pairs."""
    kinds = []
    for w, mw in g.pairs:
        a, b = split.k[w], split.k[mw]
        za, zb = abs(a) <= ZERO_CHARGE, abs(b) <= ZERO_CHARGE
        if za and zb:
            kinds.append(0)
        elif za or zb:
            raise ValidationError(f"edge {w}: exactly one of k_w, k_-w vanishes ({a!r}, {b!r})")
        elif (a > 0) != (b > 0):
            raise OrientationError(f"edge {w}: charges of opposite sign ({a!r}, {b!r})")
        else:
            kinds.append(1 if a > 0 else -1)
    return kinds


def geometric_to_spectral(g: LabeledGraph, state: IsometricState, splitting: ChargeSplitting | None = None,
                          mass: float = 1.0, delta0: float = DEFAULT_DELTA0, seed_edge: str | None = None,
                          tol: float = 1e-9) -> SpectralRealization:
    """Critical spectral configuration realizing an isometric state.

    Zero pairs become degenerate (rho = 1, psi = 0, xi = 0, lambda = 1) and
    cut the graph into pieces.  On each piece the seed pair gets delta0 and
    delta spreads to neighbouring pairs by the coupling K; then
    rho = rho(delta), Ds = sign(k) rho / m, lambda_w = |k_w| / (rho - 1),
    psi = |cos omega| / b, |xi_w|^2 = (rho - 1) L_v^2 with fiber lengths L_v
    fixed by the mass, and arg xi_1 - arg xi_0 + gamma = pi.
    """
    if not mass > 0:
        raise DomainError("mass must be positive")
    if not delta0 > 0:
        raise DomainError("delta0 must be positive")
    state = state.normalized(g)
    state.check(g)
    split = decompose_state(g, state) if splitting is None else splitting
    missing = [w for w in g.oriented if w not in split.k]
    if missing:
        raise ValidationError(f"splitting lacks charges on {missing}")
    defect = split.max_charge_defect(g)
    if defect > 1e-8:
        raise ValidationError(f"splitting does not reproduce the vertex charges (defect {defect:.3e})")
    kinds = _pair_kind(g, split, tol)
    zero_pairs = [g.pairs[p][0] for p, kd in enumerate(kinds) if kd == 0]
    reduced = g.without_pairs(zero_pairs)
    for z, prod in circuit_products(reduced, split, cycle_basis(reduced)):
        if abs(prod - 1.0) > 1e-10:
            raise BalanceError(f"Ds not well defined: circuit {' '.join(z)} has prod k_w/k_-w = {prod!r}",
                               circuit=z, product=prod)
    for p, (w, mw) in enumerate(g.pairs):
        if kinds[p] == 0:
            continue
        c2 = math.cos(state.angles[w]) ** 2
        target = split.k[w] * split.k[mw] * g.index[w] ** 2
        if abs(c2 - target) > 1e-8 or not 0 < target < 1:
            raise ValidationError(f"edge {w}: cos^2 omega = {c2!r} but k_w k_-w b^2 = {target!r}")

    # breadth-first propagation of delta over each piece
    P = g.n_pairs
    delta = [math.nan] * P
    pieces = []
    order = list(range(P))
    if seed_edge is not None:
        if seed_edge not in g.slot:
            raise ValidationError(f"unknown seed edge {seed_edge!r}")
        order.insert(0, order.pop(g.slot[seed_edge][0]))
    for start in order:
        if kinds[start] == 0 or not math.isnan(delta[start]):
            continue
        delta[start] = delta0
        piece = [start]
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for f in g.pairs[p]:
                kf, kmf = abs(split.k[f]), abs(split.k[g.reverse[f]])
                for f2 in g.flags(g.origin[f]):
                    q = g.slot[f2][0]
                    if kinds[q] == 0 or f2 == f:
                        continue
                    K = coupling_K(kf, kmf, abs(split.k[f2]), abs(split.k[g.reverse[f2]]))
                    val = K * delta[p]
                    if math.isnan(delta[q]):
                        delta[q] = val
                        piece.append(q)
                        queue.append(q)
                    elif abs(delta[q] - val) > 1e-9 * max(1.0, abs(val)):
                        raise BalanceError(f"Ds not well defined: inconsistent delta on edge {g.pairs[q][0]}")
        pieces.append(piece)

    lam = np.ones((P, 2))
    psi01 = np.zeros(P, dtype=complex)
    psi10 = np.zeros(P, dtype=complex)
    xi = np.zeros((P, 2), dtype=complex)
    dsv = {}
    W_s = []
    for p, (w, mw) in enumerate(g.pairs):
        if kinds[p] == 0:
            rho = 1.0
            dsv[w] = 1.0 / mass
        else:
            rho = rho_of_delta(delta[p])
            dsv[w] = kinds[p] * rho / mass
            l0, l1 = abs(split.k[w]) / (rho - 1), abs(split.k[mw]) / (rho - 1)
            lam[p] = (l0, l1)
            r = abs(math.cos(state.angles[w])) / g.index[w]
            psi01[p] = -r / l0  # gamma = pi
            psi10[p] = -r / l1
            _, a0, a1 = massive_moduli(l0, l1, rho, dsv[w])
            xi[p] = (a0, a1)
        W_s.append(w if dsv[w] > 0 else mw)
    ds = DsFunction.from_pairs(g, dsv)
    t = build_triple(g, ds)
    cfg = GaugeConfiguration(t, HermitianStructure(lam), Connection(psi01, psi10), Section(xi), float(mass))

    lengths, scale = {}, {}
    for p, (w, mw) in enumerate(g.pairs):
        if kinds[p] == 0:
            continue
        rho = abs(dsv[w]) * mass
        for s, f in enumerate((w, mw)):
            v = g.origin[f]
            lengths.setdefault(v, abs(xi[p, s]) / math.sqrt(rho - 1))
            scale.setdefault(v, lengths[v] / state.lengths[v])
    return SpectralRealization(cfg, ds, W_s, state, split,
                               {g.pairs[p][0]: delta[p] for p in range(P) if kinds[p] != 0}, lengths, scale)


# ---- verification --------------------------------------------------------------------

@dataclass
class CriticalityReport:
    S: ActionValue
    maxwell: float
    wave: float
    hermitian: float
    lengthdef: float
    length_consistency: float
    gauge_invariance: float
    phase_n: dict[str, int | None]
    tolerance: float
    passed: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"S": self.S.to_json(),
                "residuals": {"maxwell": self.maxwell, "wave": self.wave, "hermitian": self.hermitian,
                              "lengthdef": self.lengthdef, "length_consistency": self.length_consistency,
                              "gauge_invariance": self.gauge_invariance},
                "phase_n": dict(self.phase_n), "tolerance": self.tolerance, "passed": self.passed,
                "notes": list(self.notes)}


def verify_critical(r: SpectralRealization, tol: float = CRITICAL_TOL, seed: int = 0) -> CriticalityReport:
    """Aggregate field-equation, length-law, hermitian and gauge checks."""
    cfg = r.config
    g = cfg.graph
    t = cfg.triple
    notes = []
    S = action_S(cfg)
    herm = hermitian_compat_residual(cfg.conn, cfg.lam, t).norm()
    try:
        el = el_residual(cfg)
        maxwell, wave = el.maxwell_norm, el.wave_norm
        phase = {w: (int(el.phase_n[p]) if el.phase_n[p] >= 0 else None) for p, (w, _) in enumerate(g.pairs)}
    except NotHermitian as exc:
        notes.append(str(exc))
        maxwell = wave = math.inf
        phase = {w: None for w, _ in g.pairs}

    # lambda_w |xi_w|^2 = (lambda_w^2 + lambda_-w^2)(|rho|-1)(2-|rho|)/Ds^2 on massive pairs
    lengthdef = 0.0
    rho = np.abs(cfg.rho)
    for p in range(g.n_pairs):
        if massgap_classify(rho[p]) is not PhaseClass.NONDEGENERATE_MASSIVE:
            continue
        l0, l1 = cfg.lam.lam[p]
        rhs = (l0 ** 2 + l1 ** 2) * (rho[p] - 1) * (2 - rho[p]) / t.delta[p] ** 2
        for s, lw in enumerate((l0, l1)):
            lhs = lw * abs(cfg.xi.coords[p, s]) ** 2
            lengthdef = max(lengthdef, abs(lhs - rhs) / max(1.0, abs(rhs)))

    # every flag at v must imply the same fiber length, proportional to the state's
    consistency = 0.0
    if r.splitting is not None:
        implied: dict[str, list[float]] = {}
        for p, pair in enumerate(g.pairs):
            for s, f in enumerate(pair):
                k = abs(r.splitting.k.get(f, 0.0))
                if k > ZERO_CHARGE and abs(cfg.xi.coords[p, s]) > 0:
                    implied.setdefault(g.origin[f], []).append(cfg.lam.lam[p, s] * abs(cfg.xi.coords[p, s]) ** 2 / k)
        for v, vals in implied.items():
            consistency = max(consistency, (max(vals) - min(vals)) / max(vals))
        if r.state is not None:
            for comp in _pieces(g, r.splitting):
                ratios = [math.sqrt(implied[v][0]) / r.state.lengths[v] for v in comp if v in implied]
                if ratios:
                    consistency = max(consistency, (max(ratios) - min(ratios)) / max(ratios))
    gauge = gauge_spot_check(cfg, np.random.default_rng(seed)) / max(1.0, abs(S.total))
    worst = max(maxwell, wave, herm, lengthdef, consistency, gauge)
    return CriticalityReport(S, maxwell, wave, herm, lengthdef, consistency, gauge, phase, tol,
                             bool(worst <= tol), notes)


def _pieces(g: LabeledGraph, split: ChargeSplitting) -> list[list[str]]:
    zero = [w for w, mw in g.pairs if abs(split.k.get(w, 0.0)) <= ZERO_CHARGE
            and abs(split.k.get(mw, 0.0)) <= ZERO_CHARGE]
    return g.without_pairs(zero).components()


# ---- numerical scan of the dipole equations -------------------------------------------

def real_reduced_residual(x, lam0: float, lam1: float, rho: float, ds: float, odd: bool) -> np.ndarray:
    """Real field equations of a dipole in (psi, |xi_0|, |xi_1|) for n of given parity."""
    psi, r0, r1 = x
    sgn = -1.0 if odd else 1.0
    rho2 = rho ** 2
    return np.array([
        (psi ** 2 / (lam0 * lam1) - 1) * (lam0 / lam1 + lam1 / lam0) * psi / ds ** 2
        - (sgn * r0 * r1 - 0.5 * (r0 ** 2 / lam1 + r1 ** 2 / lam0) * psi),
        0.5 * (psi ** 2 / lam1 + lam0 * (1 - rho2)) * r0 - sgn * psi * r1,
        -sgn * psi * r0 + 0.5 * (psi ** 2 / lam0 + lam1 * (1 - rho2)) * r1,
    ])


@dataclass
class ScanRow:
    rho: float
    phase: PhaseClass
    found_numeric: bool
    residual: float

    @property
    def agrees(self) -> bool:
        return self.phase.nondegenerate == self.found_numeric


def search_nondegenerate(rho: float, lam0: float = 1.0, lam1: float = 1.5, ds: float = 1.0,
                         starts: int = 16, seed: int = 0, floor: float = 1e-3,
                         found_tol: float = 1e-10) -> tuple[bool, float]:
    """Multistart bounded least squares for a solution with |xi_0|, |xi_1| >= floor."""
    rng = np.random.default_rng(seed)
    best = math.inf
    lo, hi = [0.0, floor, floor], [10.0, 10.0, 10.0]
    for odd in (False, True):
        for _ in range(starts):
            x0 = [rng.uniform(0, 3), rng.uniform(floor, 3), rng.uniform(floor, 3)]
            sol = least_squares(real_reduced_residual, x0, bounds=(lo, hi), method="trf",
                                args=(lam0, lam1, rho, ds, odd), xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                max_nfev=400)
            err = float(np.linalg.norm(real_reduced_residual(sol.x, lam0, lam1, rho, ds, odd)))
            best = min(best, err)
            if err < found_tol:
                return True, best
    return False, best


def _scan_point(args):
    rho, kw = args
    found, res = search_nondegenerate(rho, **kw)
    return ScanRow(float(rho), massgap_classify(rho), found, res)


def massgap_scan(rho_min: float = -3.0, rho_max: float = 3.0, steps: int = 121, lam0: float = 1.0,
                 lam1: float = 1.5, ds: float = 1.0, starts: int = 16, seed: int = 0,
                 workers: int = 1) -> list[ScanRow]:
    """Classifier vs numerical search on an evenly spaced rho grid.

    Grid points are rounded to 12 decimals so that 0, +-1, +-2 are hit exactly.
    """
    grid = np.round(np.linspace(rho_min, rho_max, steps), 12)
    kw = dict(lam0=lam0, lam1=lam1, ds=ds, starts=starts, seed=seed)
    jobs = [(float(r), kw) for r in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_point, jobs))
    return [_scan_point(j) for j in jobs]
