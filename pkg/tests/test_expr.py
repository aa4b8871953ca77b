import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chernkit.expr import (Const, ExprDomainError, ExprSyntaxError, FiniteDifference,
                           UnboundParameterError, conj, eval_expr, free_coords, parse_expr,
                           to_text, wirtinger_diff)
from chernkit.manifold import BUILTINS, random_points


def ev(text, point, n=None, params=None):
    pt = np.atleast_1d(np.asarray(point, dtype=complex))
    return eval_expr(parse_expr(text, n or len(pt)), pt, params)


def test_basic_values():
    assert ev("z1*conj(z1) + 1", [1 + 1j]) == 3 + 0j
    assert ev("exp(z1)", [0]) == 1
    assert ev("2", [0.3 - 2j, 1]) == 2 + 0j
    assert ev("conj(z2)", [0, 3 - 4j]) == 3 + 4j
    assert abs(ev("sin(z1)", [1j]) - 1j * np.sinh(1.0)) <= 1e-15


def test_abs2_and_re_im():
    z = 0.4 - 1.3j
    assert ev("abs2(z1)", [z]) == pytest.approx(abs(z) ** 2, abs=1e-15)
    assert ev("re(z1)", [z]) == pytest.approx(z.real)
    assert ev("im(z1)", [z]) == pytest.approx(z.imag)


def test_iwasawa_entry_matches_coframe():
    M = BUILTINS["iwasawa"]()
    e = parse_expr("1 + abs2(z1)", 3)
    C = M.coframe
    for p in random_points(M, 5, seed=1):
        c = np.array([[complex(eval_expr(C[i][j], p)) for j in range(3)] for i in range(3)])
        g = c.T @ np.conj(c)  # sum_i phi_i (x) conj(phi_i)
        assert abs(eval_expr(e, p) - g[1, 1]) <= 1e-14


def test_operator_precedence():
    assert ev("2 + 3*4", [0]) == 14
    assert ev("-2^2", [0]) == -4
    assert ev("(1 + z1)^2", [1]) == 4
    assert ev("2/4/2", [0]) == 0.25
    assert ev("z1**-1", [2]) == 0.5
    assert ev("i*i", [0]) == -1
    assert ev("pi", [0]) == pytest.approx(np.pi)
    assert ev("1.5e-1", [0]) == pytest.approx(0.15)


def test_parameters():
    e = parse_expr("a*z1", 1, params=["a"])
    assert eval_expr(e, np.array([2j]), {"a": 1.5}) == 3j
    with pytest.raises(UnboundParameterError):
        eval_expr(e, np.array([2j]))
    with pytest.raises(ExprSyntaxError):
        parse_expr("b*z1", 1, params=["a"])


@pytest.mark.parametrize("text, offset", [("1 + ", 4), ("z1 * * 2", 5), ("(z1", 3), ("z1 $ 2", 3),
                                          ("foo(z1)", 0)])
def test_syntax_errors_report_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as err:
        parse_expr(text, 1, params=[])
    assert err.value.offset == offset


def test_coordinate_out_of_range_and_empty():
    with pytest.raises(ExprSyntaxError):
        parse_expr("z3", 2)
    with pytest.raises(ExprSyntaxError):
        parse_expr("z0", 2)
    with pytest.raises(ExprSyntaxError):
        parse_expr("   ", 2)


def test_domain_error_reports_point():
    with pytest.raises(ExprDomainError) as err:
        ev("log(z1)", [0])
    assert err.value.point is not None
    with pytest.raises(ExprDomainError):
        ev("1/z1", [0])


def test_conj_involution_and_constant_folding():
    e = parse_expr("z1*z2 + exp(z2)", 2)
    assert conj(conj(e)) == e
    assert isinstance(parse_expr("2*3 + 1", 1), Const)


def test_wirtinger_rules():
    e = parse_expr("z1*conj(z1)", 1)
    p = np.array([0.3 + 0.8j])
    assert eval_expr(wirtinger_diff(e, 0), p) == pytest.approx(np.conj(p[0]))
    assert wirtinger_diff(parse_expr("exp(z1)", 1), 0, barred=True) == Const(0j)
    assert eval_expr(wirtinger_diff(parse_expr("conj(z1)", 1), 0, barred=True), p) == 1
    assert wirtinger_diff(parse_expr("z1", 1), 0, barred=True) == Const(0j)


def test_free_coords():
    assert free_coords(parse_expr("z1 + conj(z3)*2", 3)) == {0, 2}
    assert free_coords(parse_expr("5", 3)) == set()


def test_batched_evaluation_matches_pointwise():
    e = parse_expr("cos(z1)*conj(z2) + abs2(z2)/(2 + z1*conj(z1))", 2)
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(7, 2)) + 1j * rng.normal(size=(7, 2))
    batch = eval_expr(e, pts)
    assert batch.shape == (7,)
    for p, v in zip(pts, batch):
        assert abs(v - eval_expr(e, p)) <= 1e-15 * max(1.0, abs(v))


def _real_fd(e, p, k, h=1e-5):
    dx = np.zeros_like(p)
    dx[k] = h
    fx = (eval_expr(e, p + dx) - eval_expr(e, p - dx)) / (2 * h)
    fy = (eval_expr(e, p + 1j * dx) - eval_expr(e, p - 1j * dx)) / (2 * h)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_wirtinger_matches_finite_differences_on_builtin_entries(name):
    M = BUILTINS[name]()
    pts = random_points(M, 100, seed=4)
    for row in M.metric.entries:
        for e in row:
            for k in range(M.n):
                d = eval_expr(wirtinger_diff(e, k), pts)
                db = eval_expr(wirtinger_diff(e, k, barred=True), pts)
                for i, p in enumerate(pts):
                    fd, fdb = _real_fd(e, p, k)
                    scale = max(1.0, abs(d[i]), abs(db[i]))
                    assert abs(d[i] - fd) <= 1e-6 * scale
                    assert abs(db[i] - fdb) <= 1e-6 * scale


def test_finite_difference_engine_gradient():
    fd = FiniteDifference()
    e = parse_expr("z1^2*conj(z2) + sin(conj(z1))", 2)
    pts = np.array([[0.2 + 0.1j, -0.4 + 0.3j], [1.1 - 0.2j, 0.5j]])
    hol, anti = fd.gradient(lambda q: eval_expr(e, q), pts)
    for k in range(2):
        assert np.allclose(hol[k], eval_expr(wirtinger_diff(e, k), pts), atol=1e-9)
        assert np.allclose(anti[k], eval_expr(wirtinger_diff(e, k, barred=True), pts), atol=1e-9)


# property tests ------------------------------------------------------------

LEAVES = st.sampled_from(["z1", "z2", "conj(z1)", "conj(z2)", "1", "2.5", "i", "a"])


def _combine(children):
    un = st.tuples(st.sampled_from(["exp", "sin", "cos", "conj", "abs2", "-"]), children).map(
        lambda t: f"-({t[1]})" if t[0] == "-" else f"{t[0]}(({t[1]})/4)")
    bi = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(
        lambda t: f"({t[0]}) {t[1]} ({t[2]})")
    pw = st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}")
    return st.one_of(un, bi, pw)


EXPRS = st.recursive(LEAVES, _combine, max_leaves=8)
POINTS = st.lists(st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False),
                  min_size=2, max_size=2)


@settings(max_examples=150, deadline=None)
@given(EXPRS, POINTS)
def test_print_parse_roundtrip(text, point):
    e = parse_expr(text, 2)
    p = np.array(point)
    a = eval_expr(e, p, {"a": 0.7})
    b = eval_expr(parse_expr(to_text(e), 2), p, {"a": 0.7})
    assert cmath.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=150, deadline=None)
@given(EXPRS, POINTS)
def test_conjugate_derivative_symmetry(text, point):
    # conj(d e / dz) = d conj(e) / d conj(z)
    e = parse_expr(text, 2)
    p = np.array(point)
    params = {"a": 0.7}
    for k in range(2):
        lhs = np.conj(eval_expr(wirtinger_diff(e, k), p, params))
        rhs = eval_expr(wirtinger_diff(conj(e), k, barred=True), p, params)
        assert cmath.isclose(lhs, rhs, rel_tol=1e-10, abs_tol=1e-10)


@settings(max_examples=100, deadline=None)
@given(EXPRS, POINTS)
def test_evaluation_is_deterministic(text, point):
    e = parse_expr(text, 2)
    p = np.array(point)
    a = eval_expr(e, p, {"a": 0.7})
    b = eval_expr(parse_expr(text, 2), p, {"a": 0.7})
    assert a == b or (np.isnan(a) and np.isnan(b))
