import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from graphgauge.action import el_residual, yang_mills
from graphgauge.compat import ChargeSplitting, IsometricState, decompose_state, solve_monopole, solve_state
from graphgauge.errors import BalanceError, DomainError, OrientationError
from graphgauge.gauge import Connection, GaugeConfiguration, HermitianStructure, Section
from graphgauge.graph import LabeledGraph, circle_graph, dipole
from graphgauge.solutions import (PhaseClass, SpectralRealization, coupling_K, delta_of_rho, geometric_to_spectral,
                                  massgap_classify, massgap_scan, massless_from_state, real_reduced_residual,
                                  rho_of_delta, solve_massive_dipole, solve_massless_dipole,
                                  solve_monopole_spectral, verify_critical)
from graphgauge.spectral import DsFunction, build_triple

seeds = st.integers(0, 2 ** 32 - 1)


def load(data_dir, name):
    g = LabeledGraph.from_json(json.loads((data_dir / f"{name}.json").read_text()))
    s = IsometricState.from_json(json.loads((data_dir / f"{name}_state.json").read_text()))
    return g, s


# ---- massgap classes --------------------------------------------------------------------

@pytest.mark.parametrize("rho, phase", [
    (0.0, PhaseClass.NONDEGENERATE_MASSLESS), (1.5, PhaseClass.NONDEGENERATE_MASSIVE),
    (0.5, PhaseClass.NONE), (2.0, PhaseClass.DEGENERATE), (2.5, PhaseClass.NONE),
    (1.0, PhaseClass.DEGENERATE), (-1.5, PhaseClass.NONDEGENERATE_MASSIVE), (-2.0, PhaseClass.DEGENERATE)])
def test_classify(rho, phase):
    assert massgap_classify(rho) is phase


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10))
def test_classify_symmetric(rho):
    assert massgap_classify(rho) is massgap_classify(-rho)


# ---- massless ------------------------------------------------------------------------------

def test_massless_examples():
    cfg = solve_massless_dipole(1.0, 4.0, gamma=0.0)
    assert_allclose(cfg.lam.lam[0, 0] * abs(cfg.conn.psi01[0]), 2.0)
    assert_allclose(np.abs(cfg.xi.coords[0]), [2.0, 1.0])
    assert_allclose(np.angle(cfg.xi.coords[0]), [0.0, 0.0], atol=1e-15)
    cfg = solve_massless_dipole(1.0, 1.0)
    assert_allclose(abs(cfg.conn.psi01[0]), 1.0)
    assert_allclose(abs(cfg.xi.coords[0, 0]), abs(cfg.xi.coords[0, 1]))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 20), st.floats(0.05, 20), st.floats(-3, 3), st.floats(0.1, 5))
def test_massless_flat_and_critical(lam0, lam1, gamma, ds):
    cfg = solve_massless_dipole(lam0, lam1, gamma, ds)
    assert abs(cfg.conn.psi01[0] * cfg.conn.psi10[0] - 1) < 1e-14
    r = el_residual(cfg)
    # operator residuals carry powers of 1/Ds and of the psi imbalance sqrt(lam0 / lam1)
    scale = max(1.0, lam0, lam1) ** 2 * max(lam0 / lam1, lam1 / lam0) * max(1.0, 1 / ds) ** 3
    assert max(r.maxwell_norm, r.wave_norm) < 1e-11 * scale
    assert max(np.max(np.abs(r.maxwell_psi)), np.max(np.abs(r.wave_psi))) < 1e-11 * max(lam0 / lam1, lam1 / lam0)
    assert r.phase_n[0] % 2 == 0


def test_massless_from_state_matches_dictionary():
    cfg = massless_from_state("1/4", 1, 1)
    assert yang_mills(cfg) < 1e-28
    assert_allclose(cfg.lam.lam[0], [0.25, 1.0])
    # |xi| = l with l = (2, 1), so lambda |xi|^2 = k l^2
    assert_allclose(np.abs(cfg.xi.coords[0]), [2.0, 1.0])
    assert_allclose(np.abs(cfg.xi.coords[0]) ** 2 * cfg.lam.lam[0], [0.25 * 4.0, 1.0 * 1.0])


# ---- massive -----------------------------------------------------------------------------------

def test_massive_example():
    cfg = solve_massive_dipole(1.0, 1.0, 1.5, ds=1.0)
    assert_allclose(abs(cfg.conn.psi01[0]), 0.5)
    assert_allclose(np.abs(cfg.xi.coords[0]) ** 2, [0.5, 0.5])
    r = el_residual(cfg)
    assert max(r.maxwell_norm, r.wave_norm) < 1e-11


def test_massive_limits():
    near2 = [np.abs(solve_massive_dipole(1.0, 2.0, r).xi.coords[0, 0]) for r in (1.9, 1.99, 1.999, 1.9999)]
    assert all(a > b for a, b in zip(near2, near2[1:])) and near2[-1] < 0.03
    near1 = [abs(solve_massive_dipole(1.0, 2.0, r).conn.psi01[0]) for r in (1.1, 1.01, 1.001)]
    assert all(a > b for a, b in zip(near1, near1[1:])) and near1[-1] < 1e-2


def test_massive_outside_band():
    for rho in (0.5, 2.5, 0.0, -3.0):
        with pytest.raises(DomainError, match="massgap"):
            solve_massive_dipole(1.0, 1.0, rho)


@pytest.mark.parametrize("rho", [1.0, 2.0, -1.0, -2.0])
def test_massive_degenerate_boundary(rho):
    cfg = solve_massive_dipole(1.0, 3.0, rho)
    r = el_residual(cfg)
    assert max(r.maxwell_norm, r.wave_norm) < 1e-12
    assert np.all(cfg.xi.coords == 0)
    if abs(rho) == 1:
        assert cfg.conn.psi01[0] == 0
    else:
        assert_allclose(abs(cfg.conn.psi01[0] * cfg.lam.lam[0, 0]) ** 2, 3.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(1.001, 1.999), st.floats(0.1, 5), st.booleans())
def test_massive_length_law(lam0, lam1, rho, ds, negative):
    rho = -rho if negative else rho
    cfg = solve_massive_dipole(lam0, lam1, rho, ds)
    r = abs(rho)
    rhs = (lam0 ** 2 + lam1 ** 2) * (r - 1) * (2 - r) / ds ** 2
    for s, lam in enumerate((lam0, lam1)):
        assert abs(lam * abs(cfg.xi.coords[0, s]) ** 2 - rhs) <= 1e-12 * max(1.0, rhs)
    # lengths from lambda |xi|^2 = k l^2 with k = lambda (|rho| - 1)
    for s, lam in enumerate((lam0, lam1)):
        l2 = abs(cfg.xi.coords[0, s]) ** 2 / (r - 1)
        assert_allclose(lam * l2, (lam0 ** 2 + lam1 ** 2) * (2 - r) / ds ** 2, rtol=1e-12)
    res = el_residual(cfg)
    assert res.phase_n[0] % 2 == 1
    assert max(res.maxwell_norm, res.wave_norm) < 1e-9 * max(1.0, lam0, lam1) ** 3 / min(1.0, ds) ** 4


# ---- monopole ------------------------------------------------------------------------------------

def test_monopole_spectral_example():
    m = solve_monopole_spectral(1, 1, rho=1.5)
    assert_allclose([m.lam, m.psi], [1.0, 0.5])
    assert_allclose(m.psi, math.cos(solve_monopole(1, 1).omega) / 1)
    c = m.config
    assert c.xi.coords[0, 0] == c.xi.coords[0, 1]
    assert c.lam.lam[0, 0] == c.lam.lam[0, 1]
    assert abs(c.conn.psi01[0] - c.conn.psi10[0]) < 1e-15
    r = el_residual(c)
    assert max(r.maxwell_norm, r.wave_norm) < 1e-12


def test_monopole_zero_charge_degenerate():
    m = solve_monopole_spectral(0, 1)
    assert m.psi == 0 and abs(m.rho) == 1 and m.omega == math.pi / 2
    r = el_residual(m.config)
    assert max(r.maxwell_norm, r.wave_norm) == 0


def test_monopole_out_of_range():
    with pytest.raises(DomainError):
        solve_monopole_spectral(2, 1)


@pytest.mark.parametrize("linear", [False, True])
def test_monopole_length_laws(linear):
    m = solve_monopole_spectral("1/2", 2, rho=1.3, linear_length_law=linear)
    k = 0.5
    if linear:
        assert_allclose(m.lam * m.xi_abs, k * m.length)
    else:
        assert_allclose(m.lam * m.xi_abs ** 2, (k / 2) * m.length ** 2)


# ---- delta and coupling ---------------------------------------------------------------------------

def test_delta_examples():
    assert_allclose(delta_of_rho(1.5), 4 / 9, rtol=1e-15)
    assert_allclose(rho_of_delta(4 / 9), 1.5, rtol=1e-15)
    assert delta_of_rho(2 - 1e-9) < 1e-8
    assert delta_of_rho(1 + 1e-9) > 1e8
    assert rho_of_delta(1e9) < 1 + 1e-8
    assert rho_of_delta(1e-9) > 2 - 1e-8
    for bad in (1.0, 2.0, 0.5):
        with pytest.raises(DomainError):
            delta_of_rho(bad)
    for bad in (0.0, -1.0, math.inf):
        with pytest.raises(DomainError):
            rho_of_delta(bad)


def test_delta_strictly_decreasing():
    grid = np.arange(1.001, 2.0, 1e-3)
    vals = [delta_of_rho(r) for r in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e8))
def test_rho_delta_round_trip(delta):
    back = delta_of_rho(rho_of_delta(delta))
    # near rho = 1 we have rho - 1 ~ 1/delta, so the round trip loses about eps * delta relatively
    assert abs(back - delta) <= 1e-14 * max(1.0, delta) ** 2
    if delta <= 100:
        assert abs(back - delta) < 1e-10


def test_coupling_examples():
    assert coupling_K(0.7, 0.7, 0.7, 0.7) == 1
    assert_allclose(coupling_K(1, 1, 2, 2), 0.5)
    with pytest.raises(DomainError):
        coupling_K(0, 1, 1, 1)


def test_coupling_product_around_circuit():
    g = circle_graph([1, 1, 1])
    s = IsometricState({"v0": 1.0, "v1": 1.3, "v2": 0.8}, {"e0": 1.0, "e1": 1.2, "e2": 1.4})
    g = circle_graph([_k(g, s, v) for v in g.vertices])
    split = decompose_state(g, s)
    # walk e0 -> e1 -> e2 through the shared vertices
    prod = 1.0
    for w, w2 in (("e0", "e1"), ("e1", "e2"), ("e2", "e0")):
        mw = g.reverse[w]
        prod *= coupling_K(split.k[mw], split.k[w], split.k[w2], split.k[g.reverse[w2]])
    assert_allclose(prod, 1.0, rtol=1e-12)


def _k(g, s, v):
    from fractions import Fraction
    tot = sum(math.cos(s.angles[w if w in s.angles else g.reverse[w]]) / g.index[w] * s.lengths[g.target[w]]
              for w in g.flags(v))
    return Fraction(tot / s.lengths[v])


# ---- realization ------------------------------------------------------------------------------------

def test_dipole_realization():
    g = dipole("1/4", 1)
    s = solve_state(g)
    r = geometric_to_spectral(g, s, mass=1.0, delta0=4 / 9)
    assert_allclose(r.config.rho, [1.5])
    rep = verify_critical(r)
    assert rep.passed, rep.to_json()


def test_negative_dipole_realization():
    g = dipole("-1/4", -1)
    s = IsometricState({"v0": 2.0, "v1": 1.0}, {"e": 2 * math.pi / 3})
    r = geometric_to_spectral(g, s)
    assert r.config.rho[0] < 0
    assert verify_critical(r).passed


def test_zero_circle_is_degenerate(data_dir):
    g, s = load(data_dir, "zero_circle4")
    r = geometric_to_spectral(g, s)
    assert_allclose(np.abs(r.config.rho), 1.0)
    assert np.all(r.config.xi.coords == 0)
    rep = verify_critical(r)
    assert rep.passed and rep.maxwell == 0


@pytest.mark.parametrize("name", ["triplet", "circle3", "zero_path"])
def test_graph_realizations(data_dir, name):
    g, s = load(data_dir, name)
    r = geometric_to_spectral(g, s)
    rep = verify_critical(r)
    assert rep.passed, rep.to_json()
    assert max(rep.maxwell, rep.wave, rep.hermitian, rep.lengthdef, rep.length_consistency) < 1e-9


def test_triplet_delta_unique_up_to_seed(data_dir):
    g, s = load(data_dir, "triplet")
    a = geometric_to_spectral(g, s, delta0=4 / 9)
    b = geometric_to_spectral(g, s, delta0=1.0)
    ratio = [b.delta[w] / a.delta[w] for w, _ in g.pairs]
    assert_allclose(ratio, ratio[0], rtol=1e-12)
    assert_allclose(ratio[0], 9 / 4, rtol=1e-12)


def test_unbalanced_splitting_names_circuit(data_dir):
    g, s = load(data_dir, "circle3")
    split = ChargeSplitting.from_json(json.loads((data_dir / "circle3_unbalanced.json").read_text()))
    with pytest.raises(BalanceError, match="circuit") as info:
        geometric_to_spectral(g, s, split)
    assert info.value.circuit and abs(info.value.product - 3.0) < 1e-12


def test_orientation_error():
    g = dipole("1/4", "-1/4")
    s = IsometricState({"v0": 1.0, "v1": 1.0}, {"e": math.pi / 2})
    with pytest.raises(OrientationError):
        geometric_to_spectral(g, s, ChargeSplitting({"e": 0.25, "-e": -0.25}))


def test_perturbed_ds_fails_verification(data_dir):
    g, s = load(data_dir, "triplet")
    r = geometric_to_spectral(g, s)
    vals = dict(r.ds.values)
    w = g.pairs[0][0]
    vals[w] *= 1.1
    vals[g.reverse[w]] *= 1.1
    ds = DsFunction(vals)
    cfg = r.config.with_(triple=build_triple(g, ds))
    rep = verify_critical(SpectralRealization(cfg, ds, r.W_s, r.state, r.splitting))
    assert not rep.passed and rep.maxwell > 1e-6


def test_trivial_configuration_passes():
    g = dipole(0, 0)
    t = build_triple(g, DsFunction.from_pairs(g, {"e": 1.0}))
    cfg = GaugeConfiguration(t, HermitianStructure([[1.0, 1.0]]), Connection.trivial(1), Section([[0, 0]]), 0.0)
    assert verify_critical(SpectralRealization(cfg, t.ds, ["e"])).passed


def test_realization_json_round_trip(data_dir):
    g, s = load(data_dir, "triplet")
    r = geometric_to_spectral(g, s)
    back = SpectralRealization.from_json(g, json.loads(json.dumps(r.to_json())))
    assert back.to_json() == r.to_json()
    assert verify_critical(back).passed


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 5.0))
def test_length_scale_bijection(c):
    # for fixed lambda the map l -> |xi| is a bijection: scaling the state does not change the realization
    g = dipole("1/4", 1)
    s = solve_state(g)
    scaled = IsometricState({v: c * l for v, l in s.lengths.items()}, s.angles)
    a, b = geometric_to_spectral(g, s), geometric_to_spectral(g, scaled)
    assert_allclose(a.config.xi.coords, b.config.xi.coords, rtol=1e-12)
    assert_allclose([b.scale[v] * c for v in g.vertices], [a.scale[v] for v in g.vertices], rtol=1e-12)


# ---- scan ----------------------------------------------------------------------------------------

def test_reduced_residual_zero_at_solutions():
    cfg = solve_massive_dipole(1.0, 1.5, 1.5)
    psi = abs(cfg.conn.psi01[0]) * 1.0
    x = [psi, abs(cfg.xi.coords[0, 0]), abs(cfg.xi.coords[0, 1])]
    assert np.max(np.abs(real_reduced_residual(x, 1.0, 1.5, 1.5, 1.0, True))) < 1e-14


def test_small_scan():
    rows = massgap_scan(-3, 3, 13, starts=6)
    by_rho = {r.rho: r for r in rows}
    assert by_rho[1.0].phase is PhaseClass.DEGENERATE
    assert by_rho[0.0].phase is PhaseClass.NONDEGENERATE_MASSLESS and by_rho[0.0].found_numeric
    assert by_rho[1.5].found_numeric and not by_rho[2.5].found_numeric
    assert all(r.agrees for r in rows if r.phase is not PhaseClass.DEGENERATE)
