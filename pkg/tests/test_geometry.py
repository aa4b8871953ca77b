import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chernkit.expr import FiniteDifference, eval_expr
from chernkit.geometry import (Geometry, christoffel, curvature, is_balanced, lee_form,
                               tensor_H, torsion_quadratic)
from chernkit.identities import active_dims
from chernkit.manifold import (build_manifold, conformal_torus, flat_torus, iwasawa,
                               quadrature_grid, random_points)


def sup(x):
    return float(np.max(np.abs(x)))


def herm_defect(X):
    return sup(X - np.conj(np.swapaxes(X, -1, -2)))


def test_flat_connection_and_curvature_vanish():
    M = flat_torus(2)
    c = christoffel(M, np.array([0.3 + 0.7j, 0.1 + 0.9j]))
    assert sup(c.Gamma) == 0 and sup(c.T_up) == 0
    cv = curvature(M, np.array([0.3 + 0.7j, 0.1 + 0.9j]))
    for X in (cv.R, cv.k, cv.kstar, cv.s, cv.t, cv.H):
        assert sup(X) == 0


def test_iwasawa_tensors(iw):
    pts = random_points(iw, 20, seed=1)
    g = Geometry(iw, pts)
    for X in (g.k, g.kstar, g.s, g.R):
        assert sup(X) <= 1e-12
    assert np.allclose(g.eigen(g.t), [0, 0, 2], atol=1e-12)
    assert np.allclose(g.eigen(g.H), [-1, 0, 0], atol=1e-12)
    assert sup(g.theta) <= 1e-12


def test_iwasawa_torsion_in_unitary_frame(iw):
    # invariant frame E_a from the model; columns are coordinate components
    p = random_points(iw, 1, seed=7)[0]
    T = christoffel(iw, p).T_up
    F = np.array([[complex(eval_expr(iw.frame[a][c], p)) for a in range(3)] for c in range(3)])
    Tf = np.einsum("lc,cab,aA,bB->lAB", np.linalg.inv(F), T, F, F)
    nz = np.argwhere(np.abs(Tf) > 1e-12)
    assert sorted(map(tuple, nz)) == [(2, 0, 1), (2, 1, 0)]
    assert abs(abs(Tf[2, 0, 1]) - 1) <= 1e-12
    assert abs(Tf[2, 0, 1] + Tf[2, 1, 0]) <= 1e-12


def test_conformal_christoffel_and_ricci(conf):
    pts = random_points(conf, 10, seed=2)
    x = pts[:, 0].real
    g = Geometry(conf, pts)
    du = -0.1 * np.pi * np.sin(2 * np.pi * x)  # d u / d z1 with u = 0.1 cos(2 pi x)
    for lam in range(2):
        assert np.allclose(g.Gamma[:, lam, 0, lam], 2 * du, atol=1e-13)
    assert sup(g.Gamma[:, :, 1, :]) <= 1e-14
    # k = -d dbar log det g = -4 d dbar u; only the 11 entry survives
    k11 = 0.1 * (2 * np.pi) ** 2 * np.cos(2 * np.pi * x)
    assert np.allclose(g.k[:, 0, 0], k11, atol=1e-12)
    assert sup(g.k[:, 1, :]) <= 1e-13 and sup(g.k[:, :, 1]) <= 1e-13
    assert np.allclose(g.k, g.k_logdet, atol=1e-12)
    assert np.allclose(g.H, g.k - g.kstar - 0.5 * g.t, atol=1e-14)
    assert np.allclose(tensor_H(conf, pts[0]), g.H[0])
    assert np.allclose(torsion_quadratic(conf, pts[0]), g.t[0])


def test_conformal_lee_form_is_large_where_du_is():
    M = conformal_torus(0.1)
    p = np.array([0.25 + 0.3j, 0.5 + 0.5j])  # sin(2 pi x) = 1
    th = lee_form(M, p).theta
    assert np.max(np.abs(th)) >= 0.1
    grid = quadrature_grid(M, 8, active=active_dims(M))
    rep = is_balanced(M, grid)
    assert not rep.balanced and rep.theta_max >= 0.1


@pytest.mark.parametrize("make", [lambda: flat_torus(3), iwasawa])
def test_balanced_builtins(make):
    M = make()
    rep = is_balanced(M, quadrature_grid(M, 4, active=active_dims(M)))
    assert rep.balanced
    assert max(rep.theta_max, rep.delta_Omega_max, rep.dOmega_trace_max, rep.laplacian_max) <= 1e-10


def test_flat_kahler_form_closed():
    M = flat_torus(2)
    d = lee_form(M, random_points(M, 3, seed=0))
    assert sup(d.dOmega) == 0 and sup(d.theta) == 0


def test_full_trace_routes_agree():
    # the frame-sum (real orthonormal basis) definitions against the index formulas
    for M in (iwasawa(), conformal_torus(0.1)):
        g = Geometry(M, random_points(M, 8, seed=4))
        n = M.n
        for name, full in zip(("k", "kstar", "s"), g.full_traces):
            assert np.allclose(full[:, :n, n:], getattr(g, name), atol=1e-11), (M.name, name)
        assert np.allclose(g.t_full[:, :n, n:], g.t, atol=1e-11)


# property tests on random Hermitian metrics -----------------------------------

COEF = st.floats(-0.6, 0.6, allow_nan=False)


@st.composite
def custom_metrics(draw):
    n = 2
    A = [[f"({draw(COEF)} + {draw(COEF)}*z1 + {draw(COEF)}*conj(z2) + {draw(COEF)}*z1*z2)"
          for _ in range(n)] for _ in range(n)]
    rows = []
    for a in range(n):
        rows.append([("1 + " if a == b else "")
                     + " + ".join(f"conj({A[i][a]})*{A[i][b]}" for i in range(n))
                     for b in range(n)])
    return build_manifold({"custom": {"n": n, "entries": rows}})


@settings(max_examples=20, deadline=None)
@given(custom_metrics(), st.integers(0, 1000))
def test_tensor_invariants(M, seed):
    pts = random_points(M, 4, seed=seed)
    g = Geometry(M, pts)
    scale = max(1.0, sup(g.R))
    # torsion antisymmetry, curvature reality
    assert sup(g.T + np.swapaxes(g.T, 2, 3)) <= 1e-14 * max(1.0, sup(g.T))
    Rc = np.conj(np.transpose(g.R, (0, 2, 1, 4, 3)))
    assert sup(g.R - Rc) <= 1e-10 * scale
    for name in ("k", "kstar", "t", "H"):
        assert herm_defect(getattr(g, name)) <= 1e-12 * max(1.0, sup(getattr(g, name)))
    assert np.min(g.eigen(g.t)) >= -1e-10
    F = g.frame.F
    gram = np.einsum("nai,nab,nbj->nij", F, g.h, np.conj(F))
    assert np.allclose(gram, np.eye(2), atol=1e-12)
    n = M.n
    assert np.array_equal(g.theta_full[:, n:], np.conj(g.theta_full[:, :n]))
    assert np.allclose(g.k, g.k_logdet, atol=1e-10 * scale)


@settings(max_examples=20, deadline=None)
@given(custom_metrics(), st.integers(0, 1000))
def test_levi_civita_relation(M, seed):
    # nabla = D + S with S from dOmega, and nabla is torsion free
    g = Geometry(M, random_points(M, 4, seed=seed))
    nab = g.GF + g.S
    assert np.allclose(nab, g.GLC, atol=1e-11)
    assert np.allclose(nab, np.swapaxes(nab, 2, 3), atol=1e-11)


@settings(max_examples=20, deadline=None)
@given(custom_metrics(), st.integers(0, 1000))
def test_torsion_j_property(M, seed):
    # T(JX, Y) = J T(X, Y) for real X, Y, on the full complexified basis
    g = Geometry(M, random_points(M, 1, seed=seed))
    n = M.n
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n))
    X, Y = np.concatenate([u, np.conj(u)]), np.concatenate([v, np.conj(v)])
    TF, j = g.TF[0], g.j
    lhs = np.einsum("cab,a,b->c", TF, j * X, Y)
    rhs = j * np.einsum("cab,a,b->c", TF, X, Y)
    assert np.allclose(lhs, rhs, atol=1e-13)


@settings(max_examples=15, deadline=None)
@given(custom_metrics(), st.integers(0, 1000))
def test_symbolic_and_fd_engines_agree(M, seed):
    pts = random_points(M, 5, seed=seed)
    gs = Geometry(M, pts)
    gf = Geometry(M.with_mode("fd", FiniteDifference()), pts)
    for name in ("Gamma", "R", "k", "kstar", "s", "t", "theta"):
        a, b = getattr(gs, name), getattr(gf, name)
        assert sup(a - b) <= 1e-6 * max(1.0, sup(a)), name
