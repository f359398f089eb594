"""Energy, Yang-Mills functional, total action and Euler-Lagrange residuals.

With a the coordinates of xi, lambda the hermitian structure, sigma = da + Phi a
and theta the curvature:

    E  = Tr(sigma* lambda sigma)          (energy of the field)
    YM = Tr((lambda theta)* theta lambda)  (Yang-Mills functional)
    S  = YM + E - m^2 sum_w lambda_w |xi_w|^2.

The field equations are evaluated twice: as operator identities assembled
from the form calculus, and as the explicit per-pair polynomial equations in
the psi-variables.  On hermitian-compatible configurations the two differ by
the fixed factors recorded in ``MAXWELL_SCALE`` and ``WAVE_SCALE``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian, ValidationError
from .gauge import (Connection, GaugeConfiguration, GaugeElement, Section, curvature_blockwise,
                    gauge_transform, hermitian_defect)
from .spectral import (AlgebraElement, Form, SpectralTriple, form_dstar, form_inner, form_mul,
                       spectral_differential)

HERMITIAN_TOL = 1e-9


@dataclass
class ActionValue:
    ym: float
    energy: float
    mass_term: float
    total: float

    def to_json(self) -> dict:
        return {"ym": self.ym, "energy": self.energy, "mass": self.mass_term, "total": self.total}


@dataclass
class ElResidual:
    """Field-equation residuals of one configuration.

    maxwell[p]      (1,0) entry of the operator residual  omega - omega* + J
    maxwell_psi[p]  explicit psi-variable Maxwell equation, LHS - RHS
    wave[p, s]      diagonal of d*(lambda sigma) + Phi* lambda sigma - m^2 lambda a
    wave_psi[p, s]  explicit psi-variable wave equations
    real_*          the same equations after separating moduli and phases
    phase_n[p]      integer n with arg xi_1 - arg xi_0 + gamma = n pi (-1 if undefined)
    phase_defect[p] distance of (arg xi_1 - arg xi_0 + gamma)/pi from n
    """

    maxwell: np.ndarray
    maxwell_psi: np.ndarray
    wave: np.ndarray
    wave_psi: np.ndarray
    conjugate: np.ndarray
    real_maxwell: np.ndarray
    real_wave: np.ndarray
    phase_n: np.ndarray
    phase_defect: np.ndarray
    delta: np.ndarray

    @property
    def maxwell_norm(self) -> float:
        return float(np.linalg.norm(self.maxwell))

    @property
    def wave_norm(self) -> float:
        return float(np.linalg.norm(self.wave))

    @property
    def conjugate_norm(self) -> float:
        return float(np.linalg.norm(self.conjugate))

    @property
    def real_norm(self) -> float:
        return float(np.linalg.norm(np.concatenate([self.real_maxwell, self.real_wave.ravel()])))

    def form_disagreement(self) -> float:
        """Max relative gap between operator residuals and rescaled psi residuals."""
        d = self.delta
        gm = np.abs(self.maxwell - MAXWELL_SCALE(d) * self.maxwell_psi) / np.maximum(1.0, np.abs(self.maxwell))
        gw = np.abs(self.wave - WAVE_SCALE(d)[:, None] * self.wave_psi) / np.maximum(1.0, np.abs(self.wave))
        return float(max(np.max(gm, initial=0.0), np.max(gw, initial=0.0)))


def MAXWELL_SCALE(delta):
    """Operator Maxwell entry (1,0) = -(2/Ds) * explicit psi-form residual."""
    return -2.0 / np.asarray(delta)


def WAVE_SCALE(delta):
    """Operator wave residual = (2/Ds^2) * explicit psi-form residual."""
    return 2.0 / np.asarray(delta) ** 2


def _parts(cfg: GaugeConfiguration):
    t = cfg.triple
    a = cfg.xi.as_algebra()
    L = cfg.lam.as_algebra()
    Phi = cfg.conn.potential(t)
    sigma = spectral_differential(t, a) + form_mul(Phi, a)
    return t, a, L, Phi, sigma


def energy(cfg: GaugeConfiguration) -> float:
    """<nabla xi, nabla xi> = Tr(sigma* lambda sigma)."""
    _, _, L, _, sigma = _parts(cfg)
    return float(form_inner(sigma, form_mul(L, sigma)).real)


def yang_mills(cfg: GaugeConfiguration) -> float:
    """<theta lambda, lambda theta> with theta = d Phi + Phi^2."""
    t = cfg.triple
    L = cfg.lam.as_algebra()
    theta = curvature_blockwise(cfg.conn, t)
    return float(form_inner(form_mul(theta, L), form_mul(L, theta)).real)


def mass_term(cfg: GaugeConfiguration) -> float:
    return float(cfg.mass ** 2 * np.sum(cfg.lam.lam * np.abs(cfg.xi.coords) ** 2))


def action_S(cfg: GaugeConfiguration) -> ActionValue:
    ym, e, mt = yang_mills(cfg), energy(cfg), mass_term(cfg)
    return ActionValue(ym, e, mt, ym + e - mt)


def action_closed_form(cfg: GaugeConfiguration) -> ActionValue:
    """Per-pair explicit formula in psi-variables (independent of the form calculus)."""
    d = cfg.triple.delta
    l0, l1 = cfg.lam.lam[:, 0], cfg.lam.lam[:, 1]
    x0, x1 = cfg.xi.coords[:, 0], cfg.xi.coords[:, 1]
    p01, p10 = cfg.conn.psi01, cfg.conn.psi10
    ym = float(np.sum((l0 ** 2 + l1 ** 2) * np.abs(p01 * p10 - 1) ** 2 / d ** 4))
    e = float(np.sum((l0 * np.abs(p01 * x1 - x0) ** 2 + l1 * np.abs(x1 - p10 * x0) ** 2) / d ** 2))
    mt = mass_term(cfg)
    return ActionValue(ym, e, mt, ym + e - mt)


def current(cfg: GaugeConfiguration) -> Form:
    """J = sigma a* - a sigma* (anti-selfadjoint, degree 1)."""
    _, a, _, _, sigma = _parts(cfg)
    A = a.as_form()
    return form_mul(sigma, A.adjoint()) - form_mul(A, sigma.adjoint())


def _product(degree: int, *factors) -> Form:
    """Blockwise product with an explicit result degree.

    Adjoint factors such as Phi* act as degree-lowering operators in the
    formal adjoints, so degrees do not simply add there.
    """
    out = factors[0].as_form() if isinstance(factors[0], AlgebraElement) else factors[0]
    blocks = out.blocks
    for f in factors[1:]:
        f = f.as_form() if isinstance(f, AlgebraElement) else f
        blocks = blocks @ f.blocks
    return Form(degree, blocks)


def _nabla_star_coords(t: SpectralTriple, L: AlgebraElement, Phi: Form, omega: Form) -> Form:
    # d*(lambda omega) + Phi* lambda omega
    lw = form_mul(L, omega)
    return form_dstar(t, lw) + _product(0, Phi.adjoint(), lw)


def nabla_star(cfg: GaugeConfiguration, omega: Form) -> Section:
    """Adjoint of nabla: coordinates lambda^{-1} (d*(lambda w) + Phi* lambda w)."""
    t = cfg.triple
    out = _nabla_star_coords(t, cfg.lam.as_algebra(), cfg.conn.potential(t), omega)
    return Section(np.stack([out.blocks[:, 0, 0], out.blocks[:, 1, 1]], axis=1) / cfg.lam.lam)


def gen_laplacian(cfg: GaugeConfiguration) -> Section:
    """nabla* nabla xi."""
    _, _, _, _, sigma = _parts(cfg)
    return nabla_star(cfg, sigma)


def section_inner(cfg: GaugeConfiguration, a: Section, b: Section) -> complex:
    """<e a, e b> = sum lambda a conj(b)."""
    return complex(np.sum(cfg.lam.lam * a.coords * np.conj(b.coords)))


def one_form_inner(cfg: GaugeConfiguration, w: Form, v: Form) -> complex:
    """<e (x) w, e (x) v> = Tr(v* lambda w)."""
    return form_inner(form_mul(cfg.lam.as_algebra(), w), v)


def _operator_residuals(cfg: GaugeConfiguration):
    t, a, L, Phi, sigma = _parts(cfg)
    A = a.as_form()
    theta = curvature_blockwise(cfg.conn, t)
    tl = form_mul(theta, L)
    omega = form_dstar(t, tl) + _product(1, tl, Phi.adjoint()) - _product(1, Phi, tl)
    J = form_mul(sigma, A.adjoint()) - form_mul(A, sigma.adjoint())
    maxwell = omega - omega.adjoint() + J
    W = _nabla_star_coords(t, L, Phi, sigma) - form_mul(L, A).scale(cfg.mass ** 2)
    sig_adj = sigma.adjoint()
    C = (form_dstar(t, form_mul(sig_adj, L)) + _product(0, sig_adj, L, Phi)
         - form_mul(A.adjoint(), L).scale(cfg.mass ** 2))
    diag = lambda f: np.stack([f.blocks[:, 0, 0], f.blocks[:, 1, 1]], axis=1)
    return maxwell, diag(W), diag(C), omega, J


def _psi_residuals(cfg: GaugeConfiguration):
    d = cfg.triple.delta
    l0, l1 = cfg.lam.lam[:, 0], cfg.lam.lam[:, 1]
    x0, x1 = cfg.xi.coords[:, 0], cfg.xi.coords[:, 1]
    p01, p10 = cfg.conn.psi01, cfg.conn.psi10
    rho2 = (cfg.mass * d) ** 2
    maxwell = ((p01 * p10 - 1) * (l0 * p10 + l1 * np.conj(p01)) / d ** 2
               - (np.conj(x0) * x1 - 0.5 * (p10 * np.abs(x0) ** 2 + np.conj(p01) * np.abs(x1) ** 2)))
    w0 = 0.5 * (l0 * (np.conj(p01) * np.conj(p10) + 1) - l0 * rho2) * x0 - l0 * p01 * x1
    w1 = -l1 * p10 * x0 + 0.5 * (l1 * (p01 * p10 + 1) - l1 * rho2) * x1
    return maxwell, np.stack([w0, w1], axis=1)


def _real_residuals(cfg: GaugeConfiguration):
    d = cfg.triple.delta
    l0, l1 = cfg.lam.lam[:, 0], cfg.lam.lam[:, 1]
    x0, x1 = cfg.xi.coords[:, 0], cfg.xi.coords[:, 1]
    r0, r1 = np.abs(x0), np.abs(x1)
    psi = l0 * np.abs(cfg.conn.psi01)
    gamma = np.angle(cfg.conn.psi01)
    rho2 = (cfg.mass * d) ** 2
    defined = (r0 > 0) & (r1 > 0) & (psi > 0)
    turn = (np.angle(x1) - np.angle(x0) + gamma) / math.pi
    n = np.where(defined, np.rint(turn), -1).astype(int)
    defect = np.where(defined, np.abs(turn - np.rint(turn)), 0.0)
    sgn = np.where(n % 2 == 0, 1.0, -1.0)
    real_maxwell = (psi ** 2 / (l0 * l1) - 1) * (l0 / l1 + l1 / l0) * psi / d ** 2 \
        - (sgn * r0 * r1 - 0.5 * (r0 ** 2 / l1 + r1 ** 2 / l0) * psi)
    real_w0 = 0.5 * (psi ** 2 / l1 + l0 * (1 - rho2)) * r0 - sgn * psi * r1
    real_w1 = -sgn * psi * r0 + 0.5 * (psi ** 2 / l0 + l1 * (1 - rho2)) * r1
    return real_maxwell, np.stack([real_w0, real_w1], axis=1), n, defect


def el_residual(cfg: GaugeConfiguration, tol: float = HERMITIAN_TOL) -> ElResidual:
    """Field-equation residuals; requires a hermitian-compatible connection."""
    defect = hermitian_defect(cfg.conn, cfg.lam)
    scale = np.maximum(1.0, np.abs(cfg.lam.lam[:, 0] * cfg.conn.psi01))
    if defect.size and np.max(np.abs(defect) / scale) > tol:
        raise NotHermitian(f"connection violates lambda_w psi01 = lambda_-w conj(psi10) "
                           f"by {np.max(np.abs(defect)):.3e}")
    maxwell, wave, conj, _, _ = _operator_residuals(cfg)
    m_psi, w_psi = _psi_residuals(cfg)
    real_m, real_w, n, pdef = _real_residuals(cfg)
    return ElResidual(maxwell.blocks[:, 1, 0], m_psi, wave, w_psi, conj, real_m, real_w, n, pdef,
                      cfg.triple.delta.copy())


# ---- first variation -------------------------------------------------------------

@dataclass
class VariationResult:
    analytic: float
    numeric: float
    rel_err: float


def _shifted(cfg: GaugeConfiguration, eps: float, dphi01, dphi10, dxi) -> GaugeConfiguration:
    t = cfg.triple
    phi01, phi10 = cfg.conn.phi(t)
    conn = Connection.from_phi(t, phi01 + eps * dphi01, phi10 + eps * dphi10)
    return cfg.with_(conn=conn, xi=Section(cfg.xi.coords + eps * dxi))


def analytic_variation(cfg: GaugeConfiguration, dphi01, dphi10, dxi) -> float:
    """First variation of S from the field-equation operators.

    dS = <omega - omega* + J, lambda dPhi> + 2 Re <d a, W>, where W is the
    wave operator; the first pairing is real on tangent directions.
    """
    t = cfg.triple
    maxwell, wave, _, _, _ = _operator_residuals(cfg)
    dPhi = np.zeros((t.n_pairs, 2, 2), dtype=complex)
    dPhi[:, 0, 1], dPhi[:, 1, 0] = 1j * dphi01 * t.delta, 1j * dphi10 * t.delta
    ldphi = form_mul(cfg.lam.as_algebra(), Form(1, dPhi))
    conn_part = form_inner(maxwell, ldphi).real
    field_part = 2.0 * np.sum(np.conj(dxi) * wave).real
    return float(conn_part + field_part)


def variation_check(cfg: GaugeConfiguration, dphi01=None, dphi10=None, dxi=None,
                    eps: float = 1e-5, tangency_tol: float = 1e-12) -> VariationResult:
    """Analytic first variation vs central finite difference along (dphi, dxi).

    The connection direction must keep hermitian compatibility:
    lambda_0 dphi01 = lambda_1 conj(dphi10).
    """
    P = cfg.triple.n_pairs
    dphi01 = np.zeros(P, complex) if dphi01 is None else np.asarray(dphi01, complex)
    dphi10 = np.zeros(P, complex) if dphi10 is None else np.asarray(dphi10, complex)
    dxi = np.zeros((P, 2), complex) if dxi is None else np.asarray(dxi, complex).reshape(P, 2)
    l0, l1 = cfg.lam.lam[:, 0], cfg.lam.lam[:, 1]
    gap = np.abs(l0 * dphi01 - l1 * np.conj(dphi10))
    if gap.size and np.max(gap) > tangency_tol * max(1.0, float(np.max(np.abs(l0 * dphi01), initial=0))):
        raise ValidationError("connection variation leaves the hermitian-compatible set")
    analytic = analytic_variation(cfg, dphi01, dphi10, dxi)
    plus = action_S(_shifted(cfg, eps, dphi01, dphi10, dxi)).total
    minus = action_S(_shifted(cfg, -eps, dphi01, dphi10, dxi)).total
    numeric = (plus - minus) / (2 * eps)
    rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1.0)
    return VariationResult(analytic, numeric, rel)


def tangent_direction(cfg: GaugeConfiguration, rng: np.random.Generator):
    """Random connection direction satisfying the tangency condition."""
    P = cfg.triple.n_pairs
    d01 = rng.normal(size=P) + 1j * rng.normal(size=P)
    d10 = np.conj(cfg.lam.lam[:, 0] * d01 / cfg.lam.lam[:, 1])
    return d01, d10


def gauge_spot_check(cfg: GaugeConfiguration, rng: np.random.Generator) -> float:
    """|S(u.cfg) - S(cfg)| for a random gauge element u."""
    u = GaugeElement(np.exp(1j * rng.uniform(-math.pi, math.pi, (cfg.triple.n_pairs, 2))))
    return abs(action_S(gauge_transform(u, cfg)).total - action_S(cfg).total)
