"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import json
import os
import subprocess
import sys
import time

import numpy as np

from chernkit.expr import FiniteDifference, eval_expr, wirtinger_diff
from chernkit.fields import coframe_form, frame_field, random_trig_field
from chernkit.geometry import Geometry, full_metric, is_balanced
from chernkit.identities import (CASES, FAIL, INAPPLICABLE, PASS, FieldEvaluation, Tolerances,
                                 Verifier, active_dims, definiteness_scan, theorem_report, verify)
from chernkit.manifold import (complex_to_real, conformal_torus, flat_torus, iwasawa,
                               quadrature_grid, random_points, real_to_complex)
from chernkit.report import dumps, strip_volatile

GEOMETRY_TENSORS = ("Gamma", "T", "R", "k", "kstar", "s", "t", "H", "theta", "dOmega")


def _sup(x):
    return float(np.max(np.abs(x)))


# ---------------------------------------------------------------------------
# oracles


def bracket_torsion(M, p):
    """Chern torsion of an invariant frame from Lie brackets, ``T = -[E_a, E_b]``.

    Valid when the frame is unitary and Chern-parallel, as on the Iwasawa model.
    """
    n = M.n
    E = M.frame
    C = M.coframe
    val = lambda e: complex(eval_expr(e, p))  # noqa: E731
    br = np.zeros((n, n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                br[a, b, c] = sum(val(E[a][k]) * val(wirtinger_diff(E[b][c], k))
                                  - val(E[b][k]) * val(wirtinger_diff(E[a][c], k))
                                  for k in range(n))
    Cv = np.array([[val(C[i][j]) for j in range(n)] for i in range(n)])
    return -np.einsum("gc,abc->gab", Cv, br)


def real_basis(n):
    """Columns: the real coordinate fields d/dx_k, d/dy_k on the complex basis."""
    P = np.zeros((2 * n, 2 * n), dtype=complex)
    for k in range(n):
        P[k, 2 * k] = P[n + k, 2 * k] = 1
        P[k, 2 * k + 1], P[n + k, 2 * k + 1] = 1j, -1j
    return P


def lee_form_fd(M, x, h=1e-3):
    """Lee form in real coordinates from finite differences of the Kähler form.

    ``theta(X) = -(delta Omega)(JX)`` with the Riemannian divergence formula
    ``(delta Omega)^b = -|g|^(-1/2) d_a(|g|^(1/2) Omega^(ab))``.
    """
    n = M.n
    P = real_basis(n)
    J = np.zeros((2 * n, 2 * n))
    for k in range(n):
        J[2 * k + 1, 2 * k] = 1.0
        J[2 * k, 2 * k + 1] = -1.0

    def parts(y):
        G = full_metric(M.metric.value(real_to_complex(y[None]))[0][None])[0]
        g = (P.T @ G @ P).real
        Om = J.T @ g  # Omega(X, Y) = g(JX, Y)
        gi = np.linalg.inv(g)
        return g, np.sqrt(np.linalg.det(g)) * gi @ Om @ gi.T

    g0, _ = parts(x)
    div = np.zeros(2 * n)
    for a in range(2 * n):
        e = np.zeros(2 * n)
        e[a] = h
        F = [parts(x + s * e)[1][a] for s in (-2, -1, 1, 2)]
        div += (F[0] - 8 * F[1] + 8 * F[2] - F[3]) / (12 * h)
    dOm_up = -div / np.sqrt(np.linalg.det(g0))
    dOm = g0 @ dOm_up
    return -(J.T @ dOm)


# ---------------------------------------------------------------------------


def test_criterion_1_kahler_degeneration(gate):
    G = gate(1, "flat torus tensors vanish")
    t0 = time.perf_counter()
    for n in (2, 3):
        M = flat_torus(n)
        g = Geometry(M, random_points(M, 50, seed=n))
        for name in GEOMETRY_TENSORS:
            if name == "Gamma":
                continue
            G.check(f"n={n} {name}", _sup(getattr(g, name)) <= 1e-12, _sup(getattr(g, name)))
    G.check("runtime < 5 s", time.perf_counter() - t0 < 5.0, time.perf_counter() - t0)
    G.close()


def test_criterion_2_iwasawa_suite(gate, iw):
    G = gate(2, "Iwasawa invariant tensors at resolution 4")
    t0 = time.perf_counter()
    grid = quadrature_grid(iw, 4, active=active_dims(iw))
    bal = is_balanced(iw, grid, 1e-10)
    G.check("balanced verdict", bal.balanced, bal.as_dict())
    G.check("max|theta| <= 1e-10", bal.theta_max <= 1e-10, bal.theta_max)
    g = Geometry(iw, grid.points)
    for name in ("k", "kstar", "s"):
        G.check(f"{name} = 0", _sup(getattr(g, name)) <= 1e-10, _sup(getattr(g, name)))
    ev = g.eigen(g.t)
    oracle = []
    for p in grid.points:
        T = bracket_torsion(iw, p)
        tf = np.einsum("lab,mab->lm", T, np.conj(T))
        oracle.append(np.linalg.eigvalsh(tf))
    oracle = np.array(oracle)
    G.check("oracle eigenvalues are {0,0,2}", _sup(oracle - [0, 0, 2]) <= 1e-12, oracle[0])
    G.check("t eigenvalues {0,0,2}", _sup(ev - oracle) <= 1e-9, _sup(ev - oracle))
    G.check("H = -t/2", _sup(g.H + 0.5 * g.t) <= 1e-9, _sup(g.H + 0.5 * g.t))
    r = verify("KS_EQ", iw, None, grid)
    G.check("KS_EQ PASS", r.verdict == PASS, r.residual)
    G.check("runtime < 30 s", time.perf_counter() - t0 < 30.0, time.perf_counter() - t0)
    G.close()


def test_criterion_3_lemma_44(gate, iw):
    G = gate(3, "LEM44 on invariant forms")
    forms = [coframe_form(iw, i) for i in range(3)]
    grid = quadrature_grid(iw, 8, active=active_dims(iw, forms))
    keys = ("n_dw20", "H", "res_analytic_form")
    ev3 = FieldEvaluation(iw, forms[2], grid, keys)
    v = 0.5 * ev3.terms["n_dw20"] + ev3.terms["H"]
    G.check("phi3 analytic", ev3.sup("res_analytic_form") <= 1e-8, ev3.sup("res_analytic_form"))
    G.check("phi3 pointwise integrand", _sup(v) <= 1e-10, _sup(v))
    G.check("phi3 integral", abs(ev3.integral(v)) <= 1e-10, ev3.integral(v))
    r = verify("LEM44", iw, forms[2], grid)
    G.check("phi3 LEM44 verdict", r.verdict == PASS, r.residual)
    for i in (0, 1):
        ev = FieldEvaluation(iw, forms[i], grid, keys)
        for key in ("n_dw20", "H"):
            G.check(f"phi{i + 1} {key}", ev.sup(key) <= 1e-10, ev.sup(key))
    G.close()


def test_criterion_4_theorem_42(gate, iw):
    G = gate(4, "harmonic vs analytic forms through the integral of H")
    phi1, phi3 = coframe_form(iw, 0), coframe_form(iw, 2)
    grid = quadrature_grid(iw, 8, active=active_dims(iw, [phi1, phi3]))
    keys = ("H", "res_analytic_form", "res_d11", "res_d20", "delta", "deltaJ", "res_analytic_vector")
    e1 = FieldEvaluation(iw, phi1, grid, keys)
    e3 = FieldEvaluation(iw, phi3, grid, keys)
    G.check("phi1 harmonic", e1.harmonic_sup() <= 1e-8, e1.harmonic_sup())
    G.check("phi1 analytic", e1.analytic_sup <= 1e-8, e1.analytic_sup)
    int1 = e1.integral(e1.terms["H"]) * grid.volume
    G.check("phi1 int H", abs(int1) <= 1e-9, int1)
    G.check("phi3 analytic", e3.analytic_sup <= 1e-8, e3.analytic_sup)
    G.check("phi3 not harmonic", e3.harmonic_sup() > 1e-8, e3.harmonic_sup())
    int3 = e3.integral(e3.terms["H"]) * grid.volume
    G.check("phi3 int H = -volume", abs(int3 + grid.volume) <= 1e-8, int3)
    rep = theorem_report(iw, grid, [phi1, phi3])
    ii = next(t for t in rep if t.theorem == "4.2" and t.part == "ii")
    row = next(r for r in ii.fields if r["field"] == phi3.label)
    G.check("Th 4.2 ii row marks iff condition not met", row["iff_condition"] == "not met", row)
    G.check("Th 4.2 ii consistent", ii.consistent, ii.fields)
    G.close()


def test_criterion_5_theorem_39(gate, iw):
    G = gate(5, "Killing field under a non-positive Chern form")
    grid0 = quadrature_grid(iw, 8, active=active_dims(iw))
    kappa = definiteness_scan(iw, "kappa", grid0)
    G.check("kappa zero", kappa.classification == "zero", kappa.as_dict())
    xi = frame_field(iw, 2)
    grid = quadrature_grid(iw, 8, active=active_dims(iw, [xi]))
    ev = FieldEvaluation(iw, xi, grid, ("res_killing", "res_analytic_vector", "k", "deltaJ"))
    G.check("E3 Killing", ev.sup("res_killing") <= 1e-9, ev.sup("res_killing"))
    G.check("E3 analytic", ev.analytic_sup <= 1e-8, ev.analytic_sup)
    G.check("k(xi, xi) = 0", ev.sup("k") <= 1e-10, ev.sup("k"))
    G.check("delta(J xi) = 0", ev.sup("deltaJ") <= 1e-8, ev.sup("deltaJ"))
    rep = theorem_report(iw, grid, [xi])
    th = next(t for t in rep if t.theorem == "3.9" and t.part == "i")
    G.check("Th 3.9 i applicable and consistent", th.applicable and th.consistent, th.as_dict())
    G.close()


def test_criterion_6_pointwise_identities(gate):
    G = gate(6, "RICCI7S and BIANCHI410 on 20 random fields")
    t0 = time.perf_counter()
    cases = ["RICCI7S", "BIANCHI410"]
    for mk in (lambda **k: flat_torus(2, **k), iwasawa, lambda **k: conformal_torus(0.1, **k)):
        M = mk()
        fields = [random_trig_field(M, ("vector", "form")[s % 2], degree=1 + s % 3, seed=s)
                  for s in range(20)]
        grid = quadrature_grid(M, 8, active=active_dims(M, fields))
        worst = max(r.residual for r in Verifier(M, grid, fields).run(cases))
        G.check(f"{M.name} symbolic <= 1e-9", worst <= 1e-9, worst)
        Mf = mk(mode="fd")
        sub = quadrature_grid(Mf, 4, active=active_dims(Mf, fields))
        worst = max(r.residual for r in Verifier(Mf, sub, fields).run(cases))
        G.check(f"{M.name} fd <= 1e-6", worst <= 1e-6, worst)
    G.check("runtime < 120 s", time.perf_counter() - t0 < 120.0, time.perf_counter() - t0)
    G.close()


def _integral_runs(M, fields, cases, res):
    grid = quadrature_grid(M, res, active=active_dims(M, fields))
    v = Verifier(M, grid, fields, Tolerances(integral=1e-7))
    return {(r.case, r.field): r for r in v.run(cases)}


def test_criterion_7_integral_identities(gate):
    G = gate(7, "integral identities on random fields")
    plan = [(conformal_torus(0.1), ["VEC7"]),
            (iwasawa(), ["INT46", "KILL12", "FORM47", "FORM48"]),
            (flat_torus(2), ["INT46", "KILL12", "FORM47", "FORM48"])]
    floor = 1e-13
    for M, cases in plan:
        fields = [random_trig_field(M, "vector", degree=1, seed=11),
                  random_trig_field(M, "form", degree=2, seed=12)]
        coarse = _integral_runs(M, fields, cases, 8)
        fine = _integral_runs(M, fields, cases, 16)
        for key, r in fine.items():
            c = coarse[key]
            G.check(f"{M.name} {key} at 16", r.verdict == PASS, r.residual)
            G.check(f"{M.name} {key} doubling", r.residual <= max(c.residual, floor),
                    (c.residual, r.residual))
            G.check(f"{M.name} {key} verdict stable", r.verdict == c.verdict, (c.verdict, r.verdict))
    G.close()


def test_criterion_8_non_balanced_control(gate, conf):
    G = gate(8, "non-balanced control on the conformal torus")
    grid = quadrature_grid(conf, 8, active=active_dims(conf))
    bal = is_balanced(conf, grid)
    G.check("balanced verdict FAIL", not bal.balanced, bal.as_dict())
    G.check("max|theta| >= 0.05", bal.theta_max >= 0.05, bal.theta_max)
    P = real_basis(conf.n)
    pts = random_points(conf, 12, seed=8)
    g = Geometry(conf, pts)
    ours = (g.theta_full @ P)
    G.check("theta is real", _sup(ours.imag) <= 1e-12, _sup(ours.imag))
    oracle = np.array([lee_form_fd(conf, x) for x in complex_to_real(pts)])
    G.check("FD oracle agreement", _sup(ours.real - oracle) <= 1e-6, _sup(ours.real - oracle))
    r = verify("LAP_IV", conf, None, grid)
    G.check("LAP_IV deviation > 1e-3", r.residual > 1e-3, r.residual)
    field = random_trig_field(conf, "vector", seed=3)
    fgrid = quadrature_grid(conf, 16, active=active_dims(conf, [field]))
    results = Verifier(conf, fgrid, [field], balanced_grid=grid).run()
    gated = [r for r in results if CASES[r.case].structure == "balanced"]
    G.check("balanced-only cases inapplicable", gated and all(r.verdict == INAPPLICABLE for r in gated),
            [(r.case, r.verdict) for r in gated if r.verdict != INAPPLICABLE])
    G.check("no FAIL records", all(r.verdict != FAIL for r in results),
            [(r.case, r.residual) for r in results if r.verdict == FAIL])
    G.close()


def test_criterion_9_derivative_engines(gate):
    G = gate(9, "symbolic and finite-difference engines agree")
    for mk, poly in ((iwasawa, True), (lambda **k: flat_torus(3, **k), True),
                     (lambda **k: conformal_torus(0.1, **k), False)):
        M = mk()
        pts = random_points(M, 100, seed=9)
        gs = Geometry(M, pts)
        gf = Geometry(mk(mode="fd", fd=FiniteDifference(richardson=True)), pts)
        worst = max(_sup(getattr(gs, k) - getattr(gf, k)) / max(1.0, _sup(getattr(gs, k)))
                    for k in GEOMETRY_TENSORS)
        G.check(f"{M.name} relative <= 1e-6", worst <= 1e-6, worst)
        if poly:
            G.check(f"{M.name} Richardson <= 1e-8", worst <= 1e-8, worst)
    G.close()


def _cli_report(tmp, threads):
    env = dict(os.environ)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        env[var] = str(threads)
    out = os.path.join(tmp, f"t{threads}")
    cmd = [sys.executable, "-m", "chernkit", "verify", "--manifold", "iwasawa", "--all",
           "--resolution", "6", "--seed", "7", "--out", out]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    with open(os.path.join(out, "report.json"), encoding="utf-8") as fh:
        return proc.returncode, dumps(strip_volatile(json.load(fh)))


def test_criterion_10_determinism(gate, tmp_path):
    G = gate(10, "byte-identical reports across runs and thread counts")
    c1, r1 = _cli_report(str(tmp_path), 1)
    c2, r2 = _cli_report(str(tmp_path), 4)
    G.check("exit codes equal", c1 == c2 == 0, (c1, c2))
    G.check("reports identical", r1 == r2, len(r1))
    G.check("report has cases", '"cases"' in r1 and '"PASS"' in r1)
    G.close()
