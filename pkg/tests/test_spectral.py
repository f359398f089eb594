import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from graphgauge.errors import ValidationError
from graphgauge.graph import LabeledGraph, circle_graph, dipole, path_graph
from graphgauge.spectral import (AlgebraElement, DsFunction, Form, build_triple, commutator, connes_distance,
                                 form_d, form_dstar, form_inner, form_mul, operator_norm,
                                 spectral_differential)

from conftest import random_graph, random_triple

seeds = st.integers(0, 2 ** 32 - 1)


def triple_of(g, **ds):
    return build_triple(g, DsFunction.from_pairs(g, ds))


def random_algebra(rng, P):
    return AlgebraElement(rng.normal(size=(P, 2)) + 1j * rng.normal(size=(P, 2)))


def random_form(rng, P, k):
    b = rng.normal(size=(P, 2, 2)) + 1j * rng.normal(size=(P, 2, 2))
    if k % 2:
        b[:, 0, 0] = b[:, 1, 1] = 0
    else:
        b[:, 0, 1] = b[:, 1, 0] = 0
    return Form(k, b)


def dense(g, blocks):
    """Materialize a block-diagonal operator on all flags, in the order of g.oriented."""
    n = len(g.oriented)
    pos = {w: i for i, w in enumerate(g.oriented)}
    M = np.zeros((n, n), dtype=complex)
    for p, pair in enumerate(g.pairs):
        for s, w in enumerate(pair):
            for r, x in enumerate(pair):
                M[pos[w], pos[x]] = blocks[p, s, r]
    return M


def dense_dirac(g, ds):
    n = len(g.oriented)
    pos = {w: i for i, w in enumerate(g.oriented)}
    D = np.zeros((n, n), dtype=complex)
    for w, mw in g.pairs:
        d = ds.values[w]
        D[pos[w], pos[mw]] = -1j / d
        D[pos[mw], pos[w]] = 1j / d
    return D


# ---- triple construction --------------------------------------------------------

def test_dipole_blocks():
    t = triple_of(dipole(0, 0), e=2.0)
    assert_allclose(t.ds_blocks[0], [[0, -2j], [2j, 0]])
    assert_allclose(t.dirac[0], [[0, -0.5j], [0.5j, 0]])
    assert_allclose(t.ds_blocks[0] @ t.dirac[0], np.eye(2), atol=1e-15)


def test_non_odd_rejected():
    g = dipole(0, 0)
    with pytest.raises(ValidationError, match="odd"):
        build_triple(g, DsFunction({"e": 1.0, "-e": 1.0}))
    with pytest.raises(ValidationError, match="odd"):
        DsFunction.from_pairs(g, {"e": 1.0, "-e": 2.0})
    with pytest.raises(ValidationError):
        build_triple(g, DsFunction({"e": 0.0, "-e": 0.0}))


def test_three_edges_three_blocks():
    t = triple_of(path_graph([0, 0, 0, 0]), e0=1.0, e1=2.0, e2=-3.0)
    assert t.ds_blocks.shape == (3, 2, 2)
    assert_allclose(t.ds_blocks[:, 0, 1], [-1j, -2j, 3j])


def test_ds_json_round_trip():
    g = path_graph([0, 0, 0])
    ds = DsFunction.from_pairs(g, {"e0": 0.1, "-e1": 2.5})
    back = DsFunction.from_json(g, ds.to_json(g))
    assert back.values == ds.values


# ---- differential -----------------------------------------------------------------

def test_constant_has_zero_differential():
    g = circle_graph([0, 0, 0])
    t = triple_of(g, e0=1.0, e1=2.0, e2=0.5)
    a = AlgebraElement(np.full((3, 2), 2.5 - 1j))
    assert spectral_differential(t, a).norm() == 0


def test_dipole_differential_example():
    t = triple_of(dipole(0, 0), e=1.0)
    da = spectral_differential(t, AlgebraElement([[0, 1]]))
    assert_allclose(da.blocks[0], [[0, 1], [1, 0]], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(1, 7))
def test_differential_matches_dense_commutator(seed, n, m):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, m)
    t = random_triple(g, rng)
    a = random_algebra(rng, g.n_pairs)
    D = dense_dirac(g, t.ds)
    A = dense(g, a.as_form().blocks)
    expected = 1j * (D @ A - A @ D)
    assert_allclose(dense(g, spectral_differential(t, a).blocks), expected, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(1, 7))
def test_leibniz_and_ds_squared_commutes(seed, n, m):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, m)
    t = random_triple(g, rng)
    a, b = random_algebra(rng, g.n_pairs), random_algebra(rng, g.n_pairs)
    ab = AlgebraElement(a.values * b.values)
    lhs = spectral_differential(t, ab)
    rhs = form_mul(spectral_differential(t, a), b) + form_mul(a, spectral_differential(t, b))
    assert np.max(np.abs(lhs.blocks - rhs.blocks)) <= 1e-13 * max(1.0, lhs.norm())
    ds2 = Form(0, t.ds_blocks @ t.ds_blocks)
    assert commutator(ds2, a).norm() == 0
    assert spectral_differential(t, a).grading_defect() == 0


# ---- products ----------------------------------------------------------------------

def test_product_with_identity():
    rng = np.random.default_rng(0)
    w = random_form(rng, 3, 1)
    one = AlgebraElement(np.ones((3, 2)))
    assert_allclose(form_mul(w, one).blocks, w.blocks)
    assert form_mul(w, one).degree == 1


@pytest.mark.parametrize("delta", [1.0, 2.0, -0.3])
def test_dp_squared(delta):
    t = triple_of(dipole(0, 0), e=delta)
    dp = spectral_differential(t, AlgebraElement([[1, 0]]))
    assert_allclose(form_mul(dp, dp).blocks[0], np.eye(2) / delta ** 2, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_associativity(seed):
    rng = np.random.default_rng(seed)
    x, y, z = (random_form(rng, 4, k) for k in (1, 2, 1))
    lhs = form_mul(form_mul(x, y), z)
    rhs = form_mul(x, form_mul(y, z))
    assert np.max(np.abs(lhs.blocks - rhs.blocks)) <= 1e-13 * max(1.0, lhs.norm())


# ---- d and d* -----------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(1, 6))
def test_d_squared_zero(seed, n, m):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, m)
    t = random_triple(g, rng)
    a = random_algebra(rng, g.n_pairs)
    da = spectral_differential(t, a)
    assert form_d(t, da).norm() <= 1e-12 * max(1.0, da.norm())
    assert_allclose(form_d(t, a).blocks, da.blocks, atol=1e-14)
    w2 = random_form(rng, g.n_pairs, 1)
    assert form_d(t, form_d(t, w2)).norm() <= 1e-12 * max(1.0, form_d(t, w2).norm())


def test_d_of_a_db():
    rng = np.random.default_rng(1)
    g = circle_graph([0, 0, 0])
    t = random_triple(g, rng)
    a, b = random_algebra(rng, 3), random_algebra(rng, 3)
    w = form_mul(a, spectral_differential(t, b))
    expected = form_mul(spectral_differential(t, a), spectral_differential(t, b))
    assert_allclose(form_d(t, w).blocks, expected.blocks, atol=1e-12)


def test_d_of_zero():
    t = triple_of(dipole(0, 0), e=1.0)
    assert form_d(t, Form(1, np.zeros((1, 2, 2)))).norm() == 0


def test_dstar_of_exact_constant():
    t = triple_of(dipole(0, 0), e=0.7)
    da = spectral_differential(t, AlgebraElement([[3.0, 3.0]]))
    assert form_dstar(t, da).norm() == 0


def test_dstar_degree_check():
    t = triple_of(dipole(0, 0), e=1.0)
    with pytest.raises(ValidationError):
        form_dstar(t, Form(0, np.zeros((1, 2, 2))))
    with pytest.raises(ValidationError):
        form_dstar(t, Form(3, np.zeros((1, 2, 2))))


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(1, 6))
def test_d_dstar_adjoint(seed, n, m):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, m)
    t = random_triple(g, rng)
    P = g.n_pairs
    for k in (0, 1):
        w, s = random_form(rng, P, k), random_form(rng, P, k + 1)
        lhs = form_inner(form_d(t, w), s)
        rhs = form_inner(w, form_dstar(t, s))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([1, 2]))
def test_dstar_product_rule(seed, k):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 4, 5)
    t = random_triple(g, rng)
    a, s = random_algebra(rng, g.n_pairs), random_form(rng, g.n_pairs, k)
    lhs = form_dstar(t, form_mul(a, s))
    rhs = Form(k - 1, -(spectral_differential(t, a).blocks @ s.blocks)) + form_mul(a, form_dstar(t, s))
    assert np.max(np.abs(lhs.blocks - rhs.blocks)) <= 1e-12 * max(1.0, lhs.norm())


# ---- inner product ---------------------------------------------------------------

def test_inner_examples():
    t = triple_of(dipole(0, 0), e=1.0)
    da = spectral_differential(t, AlgebraElement([[0, 1]]))
    assert_allclose(form_inner(da, da), 2.0)
    z = Form(2, np.zeros((1, 2, 2)))
    assert form_inner(z, z) == 0
    with pytest.raises(ValidationError, match="degree"):
        form_inner(da, z)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_inner_conjugate_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = random_form(rng, 5, 1), random_form(rng, 5, 1)
    assert abs(form_inner(a, b) - np.conj(form_inner(b, a))) < 1e-14 * max(1.0, abs(form_inner(a, b)))
    assert_allclose(form_inner(a, a).real, a.norm() ** 2)


# ---- Connes distance -------------------------------------------------------------

@pytest.mark.parametrize("delta", [2.0, 0.5, -1.25])
def test_dipole_distance(delta):
    t = triple_of(dipole(0, 0), e=delta)
    res = connes_distance(t, "v0", "v1")
    assert res.distance == abs(delta)
    a = res.maximizer
    assert abs(a.values[0, 1] - a.values[0, 0]) == abs(delta)
    assert operator_norm(spectral_differential(t, a)) <= 1 + 1e-12


def test_path_distance_and_disconnected():
    g = path_graph([0, 0, 0])
    assert connes_distance(triple_of(g, e0=1.0, e1=1.0), "v0", "v2").distance == 2.0
    g2 = LabeledGraph.from_edges([("a", 0), ("b", 0), ("c", 0)], [("e", "a", "b", 1)])
    assert math.isinf(connes_distance(triple_of(g2, e=1.0), "a", "c").distance)
    assert connes_distance(triple_of(g2, e=1.0), "c", "c").distance == 0


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_distance_is_abs_ds_on_every_edge(seed):
    # on a tree every edge is the only route between its ends
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    g = LabeledGraph.from_edges([(f"v{i}", 0) for i in range(n)],
                                [(f"e{i}", f"v{rng.integers(0, i + 1)}", f"v{i + 1}", 1) for i in range(n - 1)])
    t = random_triple(g, rng)
    for p, (w, _) in enumerate(g.pairs):
        assert connes_distance(t, g.origin[w], g.target[w]).distance == abs(t.delta[p])
        assert connes_distance(t, g.target[w], g.origin[w]).distance == abs(t.delta[p])


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_distance_never_exceeds_edge(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 4, 6, loops=False)
    t = random_triple(g, rng)
    for p, (w, _) in enumerate(g.pairs):
        assert connes_distance(t, g.origin[w], g.target[w]).distance <= abs(t.delta[p])


def sup_oracle(g, t, v0, v1):
    """Maximize a(v0) - a(v1) over real vertex functions with sigma_max(da) <= 1 on the dense operator."""
    import cvxpy as cp

    n = len(g.oriented)
    pos = {w: i for i, w in enumerate(g.oriented)}
    iD = np.real(1j * dense_dirac(g, t.ds))  # real for this block structure
    f = cp.Variable(len(g.vertices))
    S = np.zeros((n, len(g.vertices)))
    for w in g.oriented:
        S[pos[w], g.vertex_index[g.origin[w]]] = 1.0
    A = cp.diag(S @ f)
    da = iD @ A - A @ iD
    vi = g.vertex_index
    prob = cp.Problem(cp.Maximize(f[vi[v0]] - f[vi[v1]]), [cp.sigma_max(da) <= 1])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return prob.value


@pytest.mark.parametrize("seed", range(6))
def test_shortest_path_matches_sup_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))  # paths of length 1..3
    g = path_graph([0] * n)
    t = random_triple(g, rng)
    expected = sup_oracle(g, t, "v0", f"v{n - 1}")
    assert abs(connes_distance(t, "v0", f"v{n - 1}").distance - expected) < 1e-6


def test_sup_oracle_on_triangle_with_shortcut():
    g = circle_graph([0, 0, 0])
    t = triple_of(g, e0=1.0, e1=1.0, e2=3.0)
    res = connes_distance(t, "v0", "v2")
    assert res.distance == 2.0 and len(res.path) == 2
    assert abs(sup_oracle(g, t, "v0", "v2") - 2.0) < 1e-6
